"""Decay-exponent fits and cross-run comparisons.

Exponents come from ordinary least squares of ln E against ln(1+t) over
the tail window of a trace; the (1+t) regressor matches the weight
functions and avoids the t = 0 singularity.  Energies of damped waves
oscillate mildly, so fits use every sample (no envelope smoothing) and
report r^2 for the reader to judge.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .energy import EnergyTrace

__all__ = [
    "DecayFit",
    "RegimeComparison",
    "fit_decay_exponent",
    "regime_comparison",
    "convergence_order",
]

MIN_FIT_POINTS = 8


@dataclass(frozen=True)
class DecayFit:
    """Power-law fit E ~ exp(intercept) * (1+t)^exponent on a window."""

    window: tuple
    exponent: float
    intercept: float
    r_squared: float
    n_points: int

    def csv_row(self, label: str) -> str:
        return (f"{label},{self.window[0]:.17g},{self.window[1]:.17g},"
                f"{self.exponent:.17g},{self.r_squared:.17g},{self.n_points}")


def _fit_window(trace: EnergyTrace, t_lo: float, t_hi: float) -> DecayFit:
    mask = (trace.t >= t_lo) & (trace.t <= t_hi) & (trace.E > 0)
    n = int(mask.sum())
    if n < MIN_FIT_POINTS:
        if not np.any(trace.E > 0):
            raise ValueError("degenerate trace: no positive energies to fit")
        raise ValueError(f"too few points in fit window ({n} < {MIN_FIT_POINTS})")
    lx = np.log1p(trace.t[mask])
    ly = np.log(trace.E[mask])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot < 1e-300 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return DecayFit(window=(t_lo, t_hi), exponent=float(slope),
                    intercept=float(intercept), r_squared=r2, n_points=n)


def fit_decay_exponent(trace: EnergyTrace, window_fraction: float = 0.25) -> DecayFit:
    """OLS decay exponent over the window [window_fraction * T, T]."""
    if not 0 < window_fraction < 1:
        raise ValueError("window_fraction must lie in (0, 1)")
    if len(trace) == 0:
        raise ValueError("empty trace")
    t_hi = float(trace.t[-1])
    return _fit_window(trace, window_fraction * t_hi, t_hi)


@dataclass
class RegimeComparison:
    """Fits for several labelled runs, ordered slowest decay first."""

    fits: list  # [(label, DecayFit)] sorted by exponent, least negative first

    @property
    def slowest(self) -> str:
        return self.fits[0][0]

    def exponent(self, label: str) -> float:
        for lab, fit in self.fits:
            if lab == label:
                return fit.exponent
        raise KeyError(label)

    def gap(self, label_a: str, label_b: str) -> float:
        return self.exponent(label_a) - self.exponent(label_b)

    def table(self) -> str:
        lines = ["label,t_lo,t_hi,exponent,r2,n"]
        lines += [fit.csv_row(label) for label, fit in self.fits]
        return "\n".join(lines)


def regime_comparison(runs, window_fraction: float = 0.25) -> RegimeComparison:
    """Fit every (label, trace) pair on a shared window and rank them.

    Mismatched horizons trigger a warning and the comparison falls back
    to the window of the shortest run.
    """
    runs = list(runs)
    if not runs:
        raise ValueError("no runs to compare")
    horizons = [float(trace.t[-1]) for _, trace in runs]
    t_end = min(horizons)
    if max(horizons) > t_end * (1 + 1e-12):
        warnings.warn(
            f"runs have mismatched horizons {sorted(set(horizons))}; "
            f"comparing on the common window ending at {t_end}",
            stacklevel=2)
    fits = [(label, _fit_window(trace, window_fraction * t_end, t_end))
            for label, trace in runs]
    fits.sort(key=lambda item: item[1].exponent, reverse=True)
    return RegimeComparison(fits=fits)


def convergence_order(errors_by_mesh) -> float:
    """Observed order from a mesh-halving sequence [(dx, err), ...].

    Returns the average of log2(err_coarse / err_fine) over adjacent
    pairs.  A zero error anywhere means the scheme was exact on that
    mesh (the unit-Courant case); that degenerate sequence is rejected
    so callers can report "exact" instead of a rate.
    """
    seq = [(float(dx), float(err)) for dx, err in errors_by_mesh]
    if len(seq) < 2:
        raise ValueError("need at least two mesh levels")
    orders = []
    for (dx_c, err_c), (dx_f, err_f) in zip(seq, seq[1:]):
        if not np.isclose(dx_c / dx_f, 2.0, rtol=1e-9):
            raise ValueError(f"mesh sequence must halve: {dx_c} -> {dx_f}")
        if err_c == 0.0 or err_f == 0.0:
            raise ValueError("exact scheme: zero error makes the order degenerate")
        orders.append(np.log2(err_c / err_f))
    return float(np.mean(orders))
