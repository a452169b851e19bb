"""Scalar Mittag-Leffler evaluation and a dense matrix-function oracle.

``ml_scalar`` evaluates

    E_{alpha,beta}(z) = sum_{k>=0} z^k / Gamma(alpha k + beta)

to better than 1e-10 relative accuracy on the supported box
``alpha in (0, 1] or alpha == 2``, ``beta in {1, alpha}``, ``|z| <= 1e8``.
Two regimes are stitched together for ``alpha in (0, 1)``:

* a Taylor sum carried out in adaptive-precision arithmetic (mpmath), with
  the working precision sized from the predicted magnitude of the largest
  term, so the catastrophic cancellation of the alternating series for
  negative arguments is absorbed rather than suffered; and
* for large negative arguments, the algebraic-tail expansion
  ``E_{alpha,beta}(z) ~ -sum_{k>=1} z^{-k} / Gamma(beta - alpha k)``
  summed in double precision to its smallest term.

The handover point ``series_switch_point(alpha, beta)`` is calibrated at
import of each new (alpha, beta) pair: it is the smallest ``x`` on a
geometric grid where the tail expansion's optimal-truncation error is
predicted below 1e-12 relative.  ``alpha == 1`` uses ``exp`` directly
(the tail expansion degenerates: every coefficient is a Gamma pole) and
``alpha == 2`` always uses the Taylor sum (the function oscillates, so no
decaying tail exists).  Arguments whose Taylor sum would need more than
``_MAX_TERMS`` terms are refused with :class:`DomainError` rather than
answered slowly or inaccurately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy.special import rgamma

from .errors import DomainError

__all__ = [
    "MLParams",
    "gamma_fn",
    "ml_scalar",
    "ml_survival",
    "fractional_poisson_mean",
    "series_switch_point",
    "dense_ml_oracle",
]

_MAX_ABS_ARG = 1e8
_MAX_TERMS = 500_000
#: relative truncation level of the tail expansion that defines the switch
_SWITCH_REL = 1e-12
_TAIL_MAX_TERMS = 400


@dataclass(frozen=True)
class MLParams:
    """Order pair (alpha, beta) of a two-parameter Mittag-Leffler function."""

    alpha: float
    beta: float = 1.0

    def __post_init__(self):
        if not (self.alpha > 0.0 and math.isfinite(self.alpha)):
            raise DomainError(f"alpha must be positive and finite, got {self.alpha}")
        if not (self.beta > 0.0 and math.isfinite(self.beta)):
            raise DomainError(f"beta must be positive and finite, got {self.beta}")


def gamma_fn(x: float) -> float:
    """Gamma function restricted to where it is finite and double-valued.

    Raises :class:`DomainError` at the poles (0, -1, -2, ...) and where the
    result overflows, instead of returning inf/nan.
    """
    try:
        return math.gamma(x)
    except ValueError:
        raise DomainError(f"gamma pole at x = {x}") from None
    except OverflowError:
        raise DomainError(f"gamma overflows double range at x = {x}") from None


def _check_box(alpha: float, beta: float) -> None:
    MLParams(alpha, beta)
    if not (0.0 < alpha <= 1.0 or alpha == 2.0):
        raise DomainError(
            f"alpha = {alpha} outside the supported set (0, 1] union {{2}}"
        )
    if beta != 1.0 and beta != alpha:
        raise DomainError(f"beta = {beta}: only beta = 1 or beta = alpha supported")


def _taylor_peak(alpha: float, beta: float, x: float) -> tuple[float, float]:
    """(peak term index, natural log of the peak term) of the Taylor sum.

    The largest of the terms ``x^k / Gamma(alpha k + beta)`` sits near
    ``k* = x^(1/alpha) / alpha`` (stationary point of the log-term).  For
    ``x <= 1`` the first term dominates.
    """
    if x <= 1.0:
        return 0.0, 0.0
    try:
        kpeak = x ** (1.0 / alpha) / alpha
    except OverflowError:
        return math.inf, math.inf
    if kpeak < 1.0:
        return 0.0, 0.0
    lnmax = kpeak * math.log(x) - math.lgamma(alpha * kpeak + beta)
    return kpeak, max(lnmax, 0.0)


def _ml_taylor(alpha: float, beta: float, z: float) -> float:
    """Adaptive-precision Taylor sum; valid for any argument it can afford."""
    kpeak, lnmax = _taylor_peak(alpha, beta, abs(z))
    if not math.isfinite(kpeak) or kpeak > _MAX_TERMS:
        raise DomainError(
            f"E_{{{alpha},{beta}}}({z}): Taylor sum would need ~{kpeak:.3g} terms; "
            "argument outside the practical domain of this evaluator"
        )
    # enough bits to hold the hump plus the 1e-12 target plus slack
    prec = 53 + int(lnmax / math.log(2.0)) + 48
    step = int(alpha) if alpha == int(alpha) else 0
    with mpmath.workprec(prec):
        zz = mpmath.mpf(z)
        # the Gamma argument must be assembled in working precision: a
        # double-rounded alpha*k would perturb the giant pre-cancellation
        # terms by ~1e-14 relative, wrecking the sum's small remainder
        aa = mpmath.mpf(alpha)
        bb = mpmath.mpf(beta)
        term = mpmath.rgamma(bb)
        total = term
        k = 0
        tiny = mpmath.mpf(2) ** (-prec + 5)
        while True:
            k += 1
            if k > _MAX_TERMS:
                raise DomainError(
                    f"E_{{{alpha},{beta}}}({z}): Taylor sum failed to converge "
                    f"within {_MAX_TERMS} terms"
                )
            if step:
                # integer order: the Gamma ratio is a plain product, so the
                # term recurrence needs no Gamma evaluations at all
                denom = 1
                top = step * k + beta - 1.0
                for _ in range(step):
                    denom *= top
                    top -= 1.0
                term = term * zz / denom
            else:
                if k == 1:
                    power = zz
                else:
                    power *= zz
                term = power * mpmath.rgamma(aa * k + bb)
            total += term
            if k > kpeak and abs(term) < tiny:
                break
        out = float(total)
    if not math.isfinite(out):
        raise DomainError(
            f"E_{{{alpha},{beta}}}({z}) overflows the double range"
        )
    return out


def _tail_terms(alpha: float, beta: float, x: float):
    """Terms of the algebraic-tail expansion at ``z = -x``, plus quality.

    Returns ``(terms, min_rel)`` where ``terms`` stops just before the first
    growing term (optimal truncation) and ``min_rel`` estimates the relative
    truncation error: smallest retained |term| over |partial sum|.
    """
    terms: list[float] = []
    smallest = math.inf
    xk = 1.0
    for k in range(1, _TAIL_MAX_TERMS + 1):
        xk /= x
        coeff = float(rgamma(beta - alpha * k))  # 0.0 exactly at Gamma poles
        term = -((-1.0) ** k) * xk * coeff
        mag = abs(term)
        if mag != 0.0:
            if mag >= smallest:
                break  # divergent tail reached; truncate at smallest term
            smallest = mag
        terms.append(term)
        if mag != 0.0 and terms and mag < 1e-18 * abs(terms[0]):
            break
    total = math.fsum(terms)
    if not terms or total == 0.0 or not math.isfinite(smallest):
        return terms, math.inf
    return terms, smallest / abs(total)


@lru_cache(maxsize=None)
def series_switch_point(alpha: float, beta: float = 1.0) -> float:
    """Smallest grid point |z| where the tail expansion is certified.

    ``ml_scalar`` uses the tail expansion for ``z <= -switch`` and the
    Taylor sum otherwise.  A candidate switch must pass two gates: the
    tail's own optimal-truncation estimate reaches 1e-12 relative, *and*
    the tail agrees with the (exact, adaptive-precision) Taylor value to
    1e-11 there.  The second gate matters when ``beta = alpha``: the
    leading tail coefficient sits on a Gamma pole and vanishes, which makes
    the truncation estimate optimistic.  Only defined for
    ``alpha in (0, 1)``.
    """
    _check_box(alpha, beta)
    if alpha == 1.0 or alpha == 2.0:
        raise DomainError(f"no tail expansion is used for alpha = {alpha}")
    x = 1.0
    while x <= 1e7:
        terms, rel = _tail_terms(alpha, beta, x)
        if rel <= _SWITCH_REL:
            tail = math.fsum(terms)
            taylor = _ml_taylor(alpha, beta, -x)
            if abs(tail - taylor) <= 1e-11 * max(abs(taylor), 1e-300):
                return x
        x *= 1.2
    raise DomainError(
        f"tail expansion never reaches target accuracy for alpha={alpha}, beta={beta}"
    )


def ml_scalar(alpha: float, z: float, beta: float = 1.0) -> float:
    """Two-parameter Mittag-Leffler function ``E_{alpha,beta}(z)``.

    Supported box: ``alpha in (0, 1] or alpha == 2``; ``beta`` equal to 1 or
    to ``alpha``; ``|z| <= 1e8``.  Outside it a :class:`DomainError` is
    raised; nothing is silently extrapolated.
    """
    _check_box(alpha, beta)
    if not math.isfinite(z):
        raise DomainError(f"argument must be finite, got {z}")
    if abs(z) > _MAX_ABS_ARG:
        raise DomainError(f"|z| = {abs(z)} exceeds the supported bound {_MAX_ABS_ARG}")
    if z == 0.0:
        return 1.0 / gamma_fn(beta)
    if alpha == 1.0:
        # beta is forced to 1 by the box; the series is exactly exp
        return math.exp(z)
    if alpha == 2.0 or z > 0.0 or -z < series_switch_point(alpha, beta):
        return _ml_taylor(alpha, beta, z)
    terms, _ = _tail_terms(alpha, beta, -z)
    return math.fsum(terms)


def ml_survival(alpha: float, d: float, t: float) -> float:
    """P(no event by time t) for a Mittag-Leffler sojourn at diagonal entry d.

    Takes the (non-positive) generator diagonal entry directly and returns
    ``E_alpha(d * t^alpha)``, clipped to [0, 1] to absorb rounding at the
    branch boundary.  ``d = 0`` means no event ever.
    """
    if d > 0.0:
        raise DomainError(f"diagonal entry must be nonpositive, got {d}")
    if t < 0.0:
        raise DomainError(f"time must be nonnegative, got {t}")
    if not (0.0 < alpha <= 1.0):
        raise DomainError(f"alpha = {alpha} outside (0, 1]")
    if t == 0.0 or d == 0.0:
        return 1.0
    val = ml_scalar(alpha, d * t**alpha)
    return min(1.0, max(0.0, val))


def fractional_poisson_mean(rate: float, alpha: float, t: float) -> float:
    """Mean event count by time t of the fractional renewal process.

    ``rate * t^alpha / Gamma(alpha + 1)``; reduces to ``rate * t`` at
    ``alpha = 1``.  This is the expected number of jumps a walk with
    constant exit rate makes, so it predicts simulation cost.
    """
    if rate <= 0.0:
        raise DomainError(f"rate must be positive, got {rate}")
    if t < 0.0:
        raise DomainError(f"time must be nonnegative, got {t}")
    if not (0.0 < alpha <= 1.0):
        raise DomainError(f"alpha = {alpha} outside (0, 1]")
    return rate * t**alpha / gamma_fn(alpha + 1.0)


# -- dense reference oracle ---------------------------------------------

_ORACLE_MAX_N = 64
_ORACLE_SERIES_BOUND = 5.0


def _series_matrix_ml(alpha: float, B: np.ndarray) -> np.ndarray:
    """Taylor sum of E_alpha(B) in extended precision; needs small ||B||."""
    n = B.shape[0]
    Bl = B.astype(np.longdouble)
    acc = np.eye(n, dtype=np.longdouble)
    power = np.eye(n, dtype=np.longdouble)
    k = 0
    while True:
        k += 1
        power = power @ Bl
        # route reciprocal-gamma through a decimal string so the extended
        # precision of the accumulator is not wasted on a double coefficient
        with mpmath.workdps(30):
            coeff = np.longdouble(
                mpmath.nstr(mpmath.rgamma(mpmath.mpf(alpha) * k + 1), 25)
            )
        term = power * coeff
        acc += term
        if k > 4 and np.max(np.abs(term)) < 1e-22 * max(1.0, float(np.max(np.abs(acc)))):
            break
        if k > 2000:
            raise DomainError("matrix Taylor sum failed to converge")
    return acc.astype(np.float64)


def dense_ml_oracle(
    alpha: float, A, t: float, u=None, route: str = "auto"
) -> np.ndarray:
    """Reference value of ``E_alpha(A t^alpha)`` for small dense systems.

    Returns the full matrix function, or its action on ``u`` when a vector
    is given.  Routes:

    * ``"eigen"``  - diagonalize ``A`` (real spectrum required) and apply
      ``ml_scalar`` to the eigenvalues;
    * ``"series"`` - extended-precision Taylor sum of the matrix function,
      only for ``||A|| t^alpha <= 5`` where it is trustworthy;
    * ``"auto"``   - series when within its bound, else eigen.

    Only intended for cross-checking the Monte Carlo solver: ``n <= 64``.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DomainError("oracle needs a square dense matrix")
    n = A.shape[0]
    if n > _ORACLE_MAX_N:
        raise DomainError(f"oracle limited to n <= {_ORACLE_MAX_N}, got {n}")
    if u is not None:
        u = np.asarray(u, dtype=np.float64)
        if u.shape != (n,):
            raise DomainError("vector length must match the matrix")
    if t < 0.0:
        raise DomainError("time must be nonnegative")
    if not (0.0 < alpha <= 1.0 or alpha == 2.0):
        raise DomainError(f"alpha = {alpha} outside the supported set")

    B = A * t**alpha
    norm = float(np.linalg.norm(B, np.inf))
    if route == "auto":
        route = "series" if norm <= _ORACLE_SERIES_BOUND else "eigen"
    if route == "series":
        if norm > _ORACLE_SERIES_BOUND:
            raise DomainError(
                f"series route needs ||A t^alpha|| <= {_ORACLE_SERIES_BOUND}, "
                f"got {norm:.3g}"
            )
        E = _series_matrix_ml(alpha, B)
        return E if u is None else E @ u
    if route != "eigen":
        raise DomainError(f"unknown oracle route {route!r}")

    lam, V = np.linalg.eig(B)
    if np.max(np.abs(lam.imag)) > 1e-9 * max(1.0, np.max(np.abs(lam.real))):
        raise DomainError("eigen route requires a (numerically) real spectrum")
    lam = lam.real
    V = V.real
    fl = np.array([ml_scalar(alpha, float(x)) for x in lam])
    if u is None:
        return V @ (fl[:, None] * np.linalg.inv(V))
    return V @ (fl * np.linalg.solve(V, u))
