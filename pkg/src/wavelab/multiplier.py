"""Multiplier weights, derived functionals, and certificate verification.

The energy identity behind the decay theorems multiplies the equation by
f(t) u_t + g(t) u + h(t,x) u_x with

    f = e1 (1+t)^theta,  g = e2 (1+t)^(theta-1),
    h = e3 (1+t)^(theta-1) x phi(x),   phi = min(1, 1/|x|),

theta = 2 in the quadratic regimes.  Positivity of the Young-reduced
coefficients K1, K2 plus the damped bound on -F3 for t >= t0 is the
certificate this module scans for numerically on the light cone.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .profiles import DampingProfile, PotentialProfile, eval_damping, eval_potential

__all__ = [
    "Regime",
    "MultiplierWeights",
    "WeightValues",
    "CertificateFunctionals",
    "CertificateReport",
    "CoercivityResult",
    "select_parameters",
    "eval_weights",
    "eval_certificate_functionals",
    "verify_certificate",
    "coercivity_check",
    "check_feasibility",
]

CRITICAL_AMPLITUDE_THRESHOLD = 2.0  # splits the two critical-damping regimes


class Regime(str, enum.Enum):
    SUBCRITICAL = "subcritical"          # 0 <= alpha < 1
    CRITICAL_STRONG = "critical_strong"  # alpha = 1, a1 > 2
    CRITICAL_WEAK = "critical_weak"      # alpha = 1, 0 < a1 <= 2


@dataclass(frozen=True)
class MultiplierWeights:
    """Feasible parameter bundle (e1, e2, e3, k, theta) for one regime.

    ``k_bound`` is the regime-dependent strict lower bound on the Young
    parameter k; ``a1`` and ``a_sup`` carry the damping envelope data
    the bounds were computed from.  ``lam`` (= a1 - 2) is set in the
    strong critical regime, ``delta``/``gamma`` in the weak one.
    """

    regime: Regime
    mu: float
    eps1: float
    eps2: float
    eps3: float
    k: float
    theta: float
    k_bound: float
    a1: float
    a_sup: float
    delta: Optional[float] = None
    lam: Optional[float] = None
    gamma: Optional[float] = None


def check_feasibility(w: MultiplierWeights):
    """Raise with the violated inequality named; no-op when feasible."""
    if not (w.eps1 > 0 and w.eps2 > 0 and w.eps3 >= 0):
        raise ValueError("weights need eps1, eps2 > 0 and eps3 >= 0")
    if w.k <= w.k_bound:
        raise ValueError(f"k = {w.k} must strictly exceed its bound {w.k_bound}")
    if w.regime in (Regime.SUBCRITICAL, Regime.CRITICAL_STRONG):
        if not w.eps2 > w.eps1:
            raise ValueError(f"eps2 > eps1 required, got {w.eps2} <= {w.eps1}")
        if w.theta != 2.0:
            raise ValueError("quadratic regimes use theta = 2")
    if w.regime is Regime.CRITICAL_STRONG:
        if not (w.a1 - 1.0) * w.eps1 > w.eps2:
            raise ValueError(
                f"(a1-1)*eps1 > eps2 requires a1 > {CRITICAL_AMPLITUDE_THRESHOLD}; "
                f"infeasible at a1 = {w.a1}")
    if w.regime is Regime.CRITICAL_WEAK:
        lo = 0.5 * w.theta * w.eps1
        hi = 0.5 * (2.0 * w.a1 - w.theta) * w.eps1
        if not lo < w.eps2 < hi:
            raise ValueError(
                f"weak-critical window requires {lo} < eps2 < {hi}, got {w.eps2}")
        if not w.theta < w.a1:
            raise ValueError(f"temporal exponent theta = {w.theta} must stay below a1 = {w.a1}")


def select_parameters(regime: Regime, a_profile: DampingProfile, mu: float,
                      delta: float = 0.1, k_factor: float = 1.5) -> MultiplierWeights:
    """Unified parameter selection for each damping regime.

    subcritical:     (e1, e2, e3) = (mu, 3 mu, mu/2),        k > sup|a|/8
    critical strong: lam = a1-2, (mu, (1+lam/2) mu, lam mu/4), k > sup|a|/4
    critical weak:   theta = a1-delta, gamma = delta,
                     (mu, a1 mu/2, gamma mu/2),               k > sup|a|

    k is set at ``k_factor`` times its bound (strictly feasible, keeps
    the 1/k penalty small); ``delta`` only matters in the weak regime.
    """
    if mu <= 0:
        raise ValueError("scale mu must be positive")
    if k_factor <= 1:
        raise ValueError("k_factor must exceed 1 (k is a strict bound)")
    regime = Regime(regime)
    a1 = a_profile.a1_bound()
    sup = a_profile.sup_norm()
    alpha = a_profile.alpha

    if regime is Regime.SUBCRITICAL:
        if not alpha < 1:
            raise ValueError(f"subcritical regime needs alpha < 1, got alpha = {alpha}")
        if not a1 > 0:
            raise ValueError("subcritical regime needs a1 > 0")
        kb = sup / 8.0
        w = MultiplierWeights(regime=regime, mu=mu, eps1=mu, eps2=3.0 * mu,
                              eps3=0.5 * mu, k=k_factor * kb, theta=2.0,
                              k_bound=kb, a1=a1, a_sup=sup)
    elif regime is Regime.CRITICAL_STRONG:
        if alpha != 1:
            raise ValueError(f"critical regimes need alpha = 1, got alpha = {alpha}")
        if not a1 > CRITICAL_AMPLITUDE_THRESHOLD:
            raise ValueError(
                f"critical_strong requires a1 > {CRITICAL_AMPLITUDE_THRESHOLD} "
                f"((a1-1)*eps1 > eps2 is infeasible at a1 = {a1}); "
                "use critical_weak instead")
        lam = a1 - 2.0
        kb = sup / 4.0
        w = MultiplierWeights(regime=regime, mu=mu, eps1=mu,
                              eps2=(1.0 + 0.5 * lam) * mu, eps3=0.25 * lam * mu,
                              k=k_factor * kb, theta=2.0, k_bound=kb,
                              a1=a1, a_sup=sup, lam=lam)
    else:
        if alpha != 1:
            raise ValueError(f"critical regimes need alpha = 1, got alpha = {alpha}")
        if not 0 < a1 <= CRITICAL_AMPLITUDE_THRESHOLD:
            raise ValueError(
                f"critical_weak covers 0 < a1 <= {CRITICAL_AMPLITUDE_THRESHOLD}, "
                f"got a1 = {a1}; use critical_strong")
        if not 0 < delta < a1:
            raise ValueError(f"delta must lie in (0, a1) = (0, {a1}), got {delta}")
        theta = a1 - delta
        kb = sup
        w = MultiplierWeights(regime=regime, mu=mu, eps1=mu, eps2=0.5 * a1 * mu,
                              eps3=0.5 * delta * mu, k=k_factor * kb, theta=theta,
                              k_bound=kb, a1=a1, a_sup=sup, delta=delta, gamma=delta)
    check_feasibility(w)
    return w


@dataclass(frozen=True)
class WeightValues:
    f: np.ndarray
    f_t: np.ndarray
    g: np.ndarray
    g_t: np.ndarray
    g_tt: np.ndarray
    h: np.ndarray
    h_t: np.ndarray
    h_x: np.ndarray
    phi: np.ndarray


def eval_weights(w: MultiplierWeights, t, x) -> WeightValues:
    """Weights and their exact derivatives at (t, x); broadcasts over x.

    The cutoff phi is 1 for |x| <= 1 and 1/|x| beyond, so x*phi saturates
    at sign(x); h_x uses the inside convention at the kinks |x| = 1
    (value e3 (1+t)^(theta-1)), which only matters on a null set.
    """
    th = w.theta
    s = 1.0 + np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    phi = np.where(ax <= 1.0, 1.0, 1.0 / np.where(ax > 0, ax, 1.0))
    xphi = np.where(ax <= 1.0, x, np.sign(x))
    inside = (ax <= 1.0).astype(float)

    f = w.eps1 * s**th
    f_t = w.eps1 * th * s ** (th - 1.0)
    g = w.eps2 * s ** (th - 1.0)
    g_t = w.eps2 * (th - 1.0) * s ** (th - 2.0)
    g_tt = w.eps2 * (th - 1.0) * (th - 2.0) * s ** (th - 3.0)
    h = w.eps3 * s ** (th - 1.0) * xphi
    h_t = w.eps3 * (th - 1.0) * s ** (th - 2.0) * xphi
    h_x = w.eps3 * s ** (th - 1.0) * inside
    f, f_t, g, g_t, g_tt = np.broadcast_arrays(f, f_t, g, g_t, g_tt)
    return WeightValues(f=f, f_t=f_t, g=g, g_t=g_t, g_tt=g_tt,
                        h=h, h_t=h_t, h_x=h_x, phi=phi)


@dataclass(frozen=True)
class CertificateFunctionals:
    f1: np.ndarray
    f2: np.ndarray
    f3: np.ndarray
    f4: np.ndarray
    k1: np.ndarray
    k2: np.ndarray


def eval_certificate_functionals(w: MultiplierWeights, damping: DampingProfile,
                                 potential: PotentialProfile, t, x) -> CertificateFunctionals:
    """Identity coefficients and their Young-reduced forms at (t, x).

    f1 multiplies u_t^2, f2 multiplies u_x^2, f3 multiplies u^2 and f4
    the cross term; k1 = f1 - k |h| a - |h_t| and
    k2 = f2 - |h| a / k - |h_t| absorb the cross term.
    """
    wv = eval_weights(w, t, x)
    a = np.asarray(eval_damping(damping, x), dtype=float)
    v, vx = eval_potential(potential, np.asarray(x, dtype=float))
    f1 = 2.0 * wv.f * a - wv.f_t - 2.0 * wv.g + wv.h_x
    f2 = 2.0 * wv.g - wv.f_t + wv.h_x
    f3 = wv.g_tt - wv.g_t * a - v * wv.f_t + 2.0 * v * wv.g - vx * wv.h - v * wv.h_x
    f4 = wv.h * a - wv.h_t
    pen = np.abs(wv.h) * a
    k1 = f1 - w.k * pen - np.abs(wv.h_t)
    k2 = f2 - pen / w.k - np.abs(wv.h_t)
    return CertificateFunctionals(f1=f1, f2=f2, f3=f3, f4=f4, k1=k1, k2=k2)


def default_certificate_constant(w: MultiplierWeights, R: float,
                                 t0_provisional: float = 10.0) -> float:
    """Constant C in the damped bound -F3 <= C a.

    The quadratic regimes yield exactly eps2.  The weak critical regime
    gets the bracketed envelope evaluated at a provisional onset time:
    eps2 * [ (1+R+t*) / (a1 (1+t*)) |(theta-1)(theta-2)| + |theta-1| ].
    """
    if w.regime in (Regime.SUBCRITICAL, Regime.CRITICAL_STRONG):
        return w.eps2
    th = w.theta
    t0 = t0_provisional
    bracket = ((1.0 + R + t0) / (w.a1 * (1.0 + t0)) * abs((th - 1.0) * (th - 2.0))
               + abs(th - 1.0))
    return w.eps2 * bracket


@dataclass
class CertificateReport:
    """Cone-scan verdict: smallest onset time t0 past which the
    pointwise certificate holds, with the observed extrema."""

    t0: float
    min_K1: float
    min_K2: float
    C_cert: float
    max_F3_ratio: float
    passed: bool
    regime: str = ""
    C_alpha: Optional[float] = None
    scan: dict = None

    def to_text(self) -> str:
        lines = [
            f"regime = {self.regime}",
            f"t0 = {self.t0:.17g}",
            f"min_K1 = {self.min_K1:.17g}",
            f"min_K2 = {self.min_K2:.17g}",
            f"C_cert = {self.C_cert:.17g}",
            f"max_F3_ratio = {self.max_F3_ratio:.17g}",
            f"pass = {str(self.passed).lower()}",
        ]
        if self.C_alpha is not None:
            lines.append(f"C_alpha = {self.C_alpha:.17g}")
        if self.scan:
            lines.append("scan = " + " ".join(f"{k}={v}" for k, v in self.scan.items()))
        return "\n".join(lines)


def verify_certificate(w: MultiplierWeights, damping: DampingProfile,
                       potential: PotentialProfile, R: float, T: float,
                       dt: float = 0.5, dx: float = 0.05,
                       C_cert: Optional[float] = None) -> CertificateReport:
    """Scan the light cone {0 <= t <= T, |x| <= R + t} for the certificate.

    t0 is the smallest sampled time such that K1 >= 0, K2 >= 0 and
    -F3 <= C_cert * a hold at every sampled point from there on; the
    report carries the minima over that verified region (over the whole
    scan when no onset is found, with t0 = inf and pass = False).  Mesh
    points with |x| = 1 (the cutoff kinks) are skipped exactly.
    """
    if dt <= 0 or dx <= 0:
        raise ValueError("scan mesh steps must be positive")
    if T <= 0 or R <= 0:
        raise ValueError("scan cone needs positive R and T")
    c_cert = default_certificate_constant(w, R) if C_cert is None else C_cert
    n_t = int(math.floor(T / dt + 1e-9)) + 1
    m = int(math.ceil((R + T) / dx + 1e-9))
    x_full = (np.arange(2 * m + 1) - m) * dx

    row_min_k1 = np.empty(n_t)
    row_min_k2 = np.empty(n_t)
    row_max_ratio = np.empty(n_t)
    for i in range(n_t):
        t = i * dt
        mask = (np.abs(x_full) <= R + t + 1e-12) & (np.abs(np.abs(x_full) - 1.0) > 1e-12)
        x = x_full[mask]
        fn = eval_certificate_functionals(w, damping, potential, t, x)
        a = np.asarray(eval_damping(damping, x), dtype=float)
        row_min_k1[i] = fn.k1.min()
        row_min_k2[i] = fn.k2.min()
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(a > 0, -fn.f3 / a, -np.inf)
        row_max_ratio[i] = ratio.max()

    ok = (row_min_k1 >= 0) & (row_min_k2 >= 0) & (row_max_ratio <= c_cert + 1e-12)
    bad = np.nonzero(~ok)[0]
    if bad.size == 0:
        i0 = 0
    elif bad[-1] == n_t - 1:
        i0 = None
    else:
        i0 = int(bad[-1]) + 1

    c_alpha = 2.0 ** (1.0 - damping.alpha) if damping.family == "monomial" else None
    scan = {"R": R, "T": T, "dt": dt, "dx": dx}
    if i0 is None:
        return CertificateReport(
            t0=float("inf"), min_K1=float(row_min_k1.min()),
            min_K2=float(row_min_k2.min()), C_cert=c_cert,
            max_F3_ratio=float(row_max_ratio.max()), passed=False,
            regime=w.regime.value, C_alpha=c_alpha, scan=scan)
    sl = slice(i0, n_t)
    return CertificateReport(
        t0=i0 * dt, min_K1=float(row_min_k1[sl].min()),
        min_K2=float(row_min_k2[sl].min()), C_cert=c_cert,
        max_F3_ratio=float(row_max_ratio[sl].max()), passed=True,
        regime=w.regime.value, C_alpha=c_alpha, scan=scan)


@dataclass
class CoercivityResult:
    lhs: float
    rhs: float
    passed: bool
    applicable: bool


def coercivity_check(w: MultiplierWeights, state,
                     potential: PotentialProfile) -> CoercivityResult:
    """Check f(t) E(t) + (h u_x, u_t) >= f(t) E(t) / 2 on a sampled state.

    The bound is guaranteed once |h| <= f/2, i.e. whenever
    eps3 / (1+t) <= eps1 / 2; ``applicable`` records that gate and the
    check passes vacuously before it (early times).
    """
    from .energy import total_energy

    x = state.grid.nodes()
    wv = eval_weights(w, state.t, x)
    e = total_energy(state, potential)
    cross = float(np.trapezoid(wv.h * state.u_x * state.u_t, dx=state.grid.dx))
    f_val = w.eps1 * (1.0 + state.t) ** w.theta
    lhs = f_val * e + cross
    rhs = 0.5 * f_val * e
    applicable = w.eps3 / (1.0 + state.t) <= 0.5 * w.eps1 + 1e-15
    tol = 1e-9 * max(1.0, abs(rhs))
    return CoercivityResult(lhs=lhs, rhs=rhs,
                            passed=bool(not applicable or lhs >= rhs - tol),
                            applicable=bool(applicable))
