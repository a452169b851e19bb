"""Compiled inner loops of the Monte Carlo engine.

Everything here is nopython-compiled, releases the GIL, and draws from a
``numpy.random.Generator`` passed in by the caller, so worker threads run
truly concurrently while each owns an independent stream.  The sampling
logic mirrors ``streams.sample_ml`` / ``streams.sample_next_state`` exactly:
open-interval uniforms via rejection of zeros, the two-uniform heavy-tail
transformation (one uniform when ``is_exp``), and half-open cumulative
destination search.

Accumulation uses Kahan compensation per output slot: path values are O(1)
but path counts reach 1e7+, and the variance estimate subtracts two large
sums, so the cheap insurance is worth having.
"""

import numpy as np
from numba import njit

__all__ = ["walk", "entry_block", "full_block"]


@njit(cache=True, nogil=True)
def _uniform_open(gen):
    u = gen.random()
    while u == 0.0:
        u = gen.random()
    return u


@njit(cache=True, nogil=True)
def walk(
    d_abs,
    scale,
    row_ptr,
    cols,
    cum,
    signs,
    w,
    is_exp,
    api,
    sin_api,
    cos_api,
    inv_alpha,
    t,
    start,
    gen,
):
    """One weighted walk from ``start`` until its clock passes ``t``.

    Returns ``(end_state, weight, n_events)``.  The sojourn clock at each
    visited state uses that state's own rate (the rate of the state being
    *occupied*, including the freshly entered one).  A zero-rate state never
    fires; a state with no destinations terminates the path with weight 0 on
    its next firing.
    """
    x = start
    weight = 1.0
    events = 0
    if t <= 0.0:
        return x, weight, events
    tau = 0.0
    while True:
        rate = d_abs[x]
        if rate == 0.0:
            break  # infinite sojourn: the walk is stuck here forever
        u = _uniform_open(gen)
        if is_exp:
            z = -np.log(u) * scale[x]
        else:
            v = _uniform_open(gen)
            core = sin_api * (np.cos(api * v) / np.sin(api * v)) - cos_api
            z = -scale[x] * np.log(u) * core**inv_alpha
        tau += z
        if tau >= t:
            break
        lo = row_ptr[x]
        hi = row_ptr[x + 1]
        if lo == hi:
            weight = 0.0  # fired with nowhere to go: zero total jump weight
            break
        r = _uniform_open(gen)
        a = lo
        b = hi
        while a < b:
            mid = (a + b) >> 1
            if cum[mid] <= r:
                a = mid + 1
            else:
                b = mid
        weight *= w[x] * signs[a]
        x = cols[a]
        events += 1
        if weight == 0.0:
            break  # underflowed to nothing; the path can contribute nothing
    return x, weight, events


@njit(cache=True, nogil=True)
def entry_block(
    d_abs,
    scale,
    row_ptr,
    cols,
    cum,
    signs,
    w,
    is_exp,
    api,
    sin_api,
    cos_api,
    inv_alpha,
    t,
    u,
    start,
    n_paths,
    gen,
):
    """Run ``n_paths`` walks from one start state, score ``weight * u[end]``.

    Returns ``(sum, sum_sq, events)`` with compensated summation.
    """
    s = 0.0
    cs = 0.0
    s2 = 0.0
    cs2 = 0.0
    events = 0
    for _ in range(n_paths):
        end, weight, k = walk(
            d_abs, scale, row_ptr, cols, cum, signs, w,
            is_exp, api, sin_api, cos_api, inv_alpha, t, start, gen,
        )
        events += k
        val = weight * u[end]
        y = val - cs
        tmp = s + y
        cs = (tmp - s) - y
        s = tmp
        val2 = val * val
        y = val2 - cs2
        tmp = s2 + y
        cs2 = (tmp - s2) - y
        s2 = tmp
    return s, s2, events


@njit(cache=True, nogil=True)
def full_block(
    d_abs,
    scale,
    row_ptr,
    cols,
    cum,
    signs,
    w,
    is_exp,
    api,
    sin_api,
    cos_api,
    inv_alpha,
    t,
    start_cum,
    u_sign,
    norm1,
    n,
    n_paths,
    gen,
):
    """Run ``n_paths`` walks seeded from the start distribution.

    Start states are drawn from the half-open cumulative ``start_cum``
    (built from |u|/||u||_1), the initial score is ``sign(u[start])*||u||_1``,
    and each path deposits its final score in the bin of its end state.
    Returns ``(sums, sums_sq, events)``.
    """
    sums = np.zeros(n)
    comp = np.zeros(n)
    sums_sq = np.zeros(n)
    comp_sq = np.zeros(n)
    events = 0
    for _ in range(n_paths):
        r = _uniform_open(gen)
        a = 0
        b = n
        while a < b:
            mid = (a + b) >> 1
            if start_cum[mid] <= r:
                a = mid + 1
            else:
                b = mid
        start = a
        omega = u_sign[start] * norm1
        end, weight, k = walk(
            d_abs, scale, row_ptr, cols, cum, signs, w,
            is_exp, api, sin_api, cos_api, inv_alpha, t, start, gen,
        )
        events += k
        val = omega * weight
        y = val - comp[end]
        tmp = sums[end] + y
        comp[end] = (tmp - sums[end]) - y
        sums[end] = tmp
        val2 = val * val
        y = val2 - comp_sq[end]
        tmp = sums_sq[end] + y
        comp_sq[end] = (tmp - sums_sq[end]) - y
        sums_sq[end] = tmp
    return sums, sums_sq, events
