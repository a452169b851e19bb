"""Reproducible random streams and the walk's sampling primitives.

Streams are PCG64DXSM generators keyed by ``(root_seed, stream_id)`` through
``SeedSequence(root_seed, spawn_key=(stream_id,))``, so any stream can be
reconstructed independently of how many others exist: stream 7 of a 16-way
run is bit-identical to stream 7 of a 64-way run.

``sample_ml`` draws Mittag-Leffler distributed sojourn times by the exact
two-uniform transformation

    Z = -rate^(-1/alpha) * ln(U) * [sin(a pi) cot(a pi V) - cos(a pi)]^(1/alpha)

with ``U, V`` uniform on the open interval (0, 1).  At ``alpha = 1`` the
bracket degenerates and the draw is plain exponential inversion
``-ln(U) / rate``, consuming exactly one uniform; for ``alpha < 1`` exactly
two uniforms are consumed.  The ``rate`` parameter is the magnitude of the
generator's diagonal entry, so the survival function of a draw is
``ml_survival(alpha, -rate, t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .sparse import ChainKernel

__all__ = [
    "RandomStream",
    "spawn_streams",
    "uniform_open",
    "sample_ml",
    "sample_next_state",
]


@dataclass(frozen=True, eq=False)
class RandomStream:
    """A deterministic substream addressed by (root_seed, stream_id)."""

    root_seed: int
    stream_id: int
    gen: np.random.Generator

    @classmethod
    def from_root(cls, root_seed: int, stream_id: int) -> "RandomStream":
        if root_seed < 0 or stream_id < 0:
            raise DomainError("root_seed and stream_id must be nonnegative")
        seq = np.random.SeedSequence(root_seed, spawn_key=(stream_id,))
        return cls(root_seed, stream_id, np.random.Generator(np.random.PCG64DXSM(seq)))

    def uniform_open(self) -> float:
        return uniform_open(self)


def spawn_streams(root_seed: int, count: int) -> list[RandomStream]:
    """The first ``count`` substreams of ``root_seed``, in stream-id order."""
    if count < 0:
        raise DomainError("count must be nonnegative")
    return [RandomStream.from_root(root_seed, k) for k in range(count)]


def uniform_open(stream: RandomStream) -> float:
    """Uniform draw on the *open* interval (0, 1).

    ``Generator.random`` returns values in [0, 1); exact zeros (probability
    2**-53 per draw) are rejected and redrawn rather than clamped, keeping
    the distribution exactly uniform on (0, 1).
    """
    u = stream.gen.random()
    while u == 0.0:
        u = stream.gen.random()
    return u


def sample_ml(alpha: float, rate: float, stream: RandomStream) -> float:
    """One Mittag-Leffler sojourn draw with tail order ``alpha``."""
    if not (0.0 < alpha <= 1.0):
        raise DomainError(f"alpha = {alpha} outside (0, 1]")
    if not (rate > 0.0 and math.isfinite(rate)):
        raise DomainError(f"rate must be positive and finite, got {rate}")
    u = uniform_open(stream)
    if alpha == 1.0:
        return -math.log(u) / rate
    v = uniform_open(stream)
    api = math.pi * alpha
    core = math.sin(api) * (math.cos(api * v) / math.sin(api * v)) - math.cos(api)
    return -(rate ** (-1.0 / alpha)) * math.log(u) * core ** (1.0 / alpha)


def sample_next_state(kernel: ChainKernel, state: int, stream: RandomStream) -> int:
    """Draw the jump destination from ``state`` under the kernel's law.

    Uses one uniform and the half-open cumulative rule: the destination is
    the first slot whose cumulative probability strictly exceeds the draw,
    so zero-probability slots can never be selected.  Calling this on an
    absorbing state is a caller bug and raises ``ValueError``.
    """
    if not 0 <= state < kernel.n:
        raise ValueError(f"state {state} outside 0..{kernel.n - 1}")
    lo, hi = int(kernel.row_ptr[state]), int(kernel.row_ptr[state + 1])
    if kernel.absorbing[state] or lo == hi:
        raise ValueError(f"state {state} is absorbing; it has no jump law")
    u = uniform_open(stream)
    k = int(np.searchsorted(kernel.row_cum[lo:hi], u, side="right"))
    return int(kernel.jump_cols[lo + k])
