"""Shared fixtures: small problem bundles reused across test modules."""

from __future__ import annotations

import numpy as np
import pytest

from fracwalk import problems


@pytest.fixture(scope="session")
def diffusion8():
    """8x8 grid diffusion bundle (64 states)."""
    return problems.build_diffusion_2d(problems.DiffusionSpec(m=8))


@pytest.fixture(scope="session")
def diffusion16():
    """16x16 grid diffusion bundle (256 states)."""
    return problems.build_diffusion_2d(problems.DiffusionSpec(m=16))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
