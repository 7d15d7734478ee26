"""Hot time-stepping kernels: numba-jitted loops with a pure-numpy fallback.

The numba path is the default whenever numba imports cleanly; set
WAVELAB_NUMBA=0 (or "false"/"off") to force the numpy path.  Both
implementations advance the same leapfrog recursion with semi-implicit
damping inside a moving active window, so they agree to rounding.

Level bookkeeping: ``levels`` is a (3, n) buffer holding three
consecutive time levels cyclically.  On entry ``levels[(base+1) % 3]``
is the newest field u^l and ``levels[base]`` is u^(l-1); after advancing
``nsteps`` steps the caller continues with ``base = (base + nsteps) % 3``.

The window [jlo, jhi] expands one cell per step (the numerical domain of
dependence) but is clipped to the allowed support radius
``r_base + k * dr`` cells from the center node.  Clipping realizes the
exact finite-propagation property of the continuum problem: everything
outside stays identically zero.  Because the window never shrinks, stale
values in the cyclic buffer are always overwritten before they can leak.
"""

from __future__ import annotations

import os

import numpy as np


def _numba_requested() -> bool:
    return os.environ.get("WAVELAB_NUMBA", "1").strip().lower() not in ("0", "false", "off")


def advance_chunk_numpy(levels, base, a, v, dt, dx, nsteps, jlo, jhi,
                        r_base, dr, center, cum, i_prev):
    """Advance ``nsteps`` leapfrog steps (vectorized numpy path).

    Per step the damped-mass integral I = dx * sum(a * u^2) of the new
    level feeds a running time-trapezoid ``cum``; ``i_prev`` carries the
    integral of the previous level across chunk boundaries.

    Returns (steps_done, jlo, jhi, cum, i_prev, ok); ok = False signals a
    non-finite field, with steps_done pointing at the offending step.
    """
    n = levels.shape[1]
    dt2 = dt * dt
    inv_dx2 = 1.0 / (dx * dx)
    half_dt = 0.5 * dt
    ad = half_dt * a
    denom = 1.0 / (1.0 + ad)
    for k in range(1, nsteps + 1):
        r_allow = int(r_base + k * dr + 1e-9)
        jlo = max(jlo - 1, center - r_allow, 1)
        jhi = min(jhi + 1, center + r_allow, n - 2)
        cur = levels[(base + k) % 3]
        prev = levels[(base + k - 1) % 3]
        out = levels[(base + k + 1) % 3]
        w = slice(jlo, jhi + 1)
        lap = (cur[jlo + 1:jhi + 2] - 2.0 * cur[w] + cur[jlo - 1:jhi]) * inv_dx2
        un = (2.0 * cur[w] - prev[w] + dt2 * (lap - v[w] * cur[w]) + ad[w] * prev[w]) * denom[w]
        out[w] = un
        i_new = dx * float(np.sum(a[w] * un * un))
        if not np.isfinite(i_new + float(np.dot(un, un))):
            return k, jlo, jhi, cum, i_prev, False
        cum += half_dt * (i_prev + i_new)
        i_prev = i_new
    return nsteps, jlo, jhi, cum, i_prev, True


def _advance_chunk_loops(levels, base, a, v, dt, dx, nsteps, jlo, jhi,
                         r_base, dr, center, cum, i_prev):
    # same recursion as advance_chunk_numpy, written as plain loops for numba
    n = levels.shape[1]
    dt2 = dt * dt
    inv_dx2 = 1.0 / (dx * dx)
    half_dt = 0.5 * dt
    for k in range(1, nsteps + 1):
        r_allow = int(r_base + k * dr + 1e-9)
        lo_lim = center - r_allow
        hi_lim = center + r_allow
        jlo = jlo - 1
        jhi = jhi + 1
        if jlo < lo_lim:
            jlo = lo_lim
        if jhi > hi_lim:
            jhi = hi_lim
        if jlo < 1:
            jlo = 1
        if jhi > n - 2:
            jhi = n - 2
        cur = levels[(base + k) % 3]
        prev = levels[(base + k - 1) % 3]
        out = levels[(base + k + 1) % 3]
        i_new = 0.0
        u2 = 0.0
        for j in range(jlo, jhi + 1):
            lap = (cur[j + 1] - 2.0 * cur[j] + cur[j - 1]) * inv_dx2
            ad = half_dt * a[j]
            un = (2.0 * cur[j] - prev[j] + dt2 * (lap - v[j] * cur[j]) + ad * prev[j]) / (1.0 + ad)
            out[j] = un
            i_new += a[j] * un * un
            u2 += un * un
        i_new *= dx
        if not np.isfinite(i_new + u2):
            return k, jlo, jhi, cum, i_prev, False
        cum += half_dt * (i_prev + i_new)
        i_prev = i_new
    return nsteps, jlo, jhi, cum, i_prev, True


NUMBA_ENABLED = False
advance_chunk_numba = None
if _numba_requested():
    try:
        from numba import njit
    except ImportError:
        pass
    else:
        advance_chunk_numba = njit(cache=True)(_advance_chunk_loops)
        NUMBA_ENABLED = True

advance_chunk = advance_chunk_numba if NUMBA_ENABLED else advance_chunk_numpy


def backend() -> str:
    """Name of the kernel backend selected at import time."""
    return "numba" if NUMBA_ENABLED else "numpy"
