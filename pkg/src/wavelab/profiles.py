"""Damping and potential coefficient families, with hypothesis validation.

The damping coefficient a(x) is pinched between two monomial envelopes
a1/(1+|x|)^alpha <= a(x) <= a2/(1+|x|)^alpha with alpha in [0, 1]; the
potential V(x) must be positive, bounded and non-increasing in |x|
(x * V'(x) <= 0).  Validation is pointwise on a mesh truncation of the
line, which suffices because solutions live inside the light cone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = [
    "DampingProfile",
    "PotentialProfile",
    "ValidationReport",
    "TabulationRangeError",
    "eval_damping",
    "eval_potential",
    "validate_assumptions",
]

ALPHA_RANGE = (0.0, 1.0)


class TabulationRangeError(ValueError):
    """Query outside the sampled range of a custom-tabulated profile."""


def _as_table(x_table, values, name: str) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x_table, dtype=float)
    v = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.shape != v.shape or x.size < 2:
        raise ValueError(f"{name}: table needs matching 1D arrays with >= 2 samples")
    if not np.all(np.diff(x) > 0):
        raise ValueError(f"{name}: table mesh must be strictly increasing")
    return x, v


@dataclass(frozen=True)
class DampingProfile:
    """Space-dependent damping coefficient a(x).

    The monomial family is a(x) = a0 * (1+|x|)^(-alpha); its envelope
    constants coincide (a1 = a2 = a0) and its sup-norm is a(0) = a0.
    Custom profiles interpolate a sample table linearly and get their
    envelope constants estimated from the table.  a0 = 0 is allowed so
    undamped reference runs can be driven through the same machinery;
    validation reports it as a hypothesis violation.
    """

    a0: float
    alpha: float
    family: str = "monomial"
    x_table: Optional[np.ndarray] = field(default=None, repr=False)
    a_table: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.family not in ("monomial", "custom"):
            raise ValueError(f"unknown damping family {self.family!r}")
        if self.a0 < 0:
            raise ValueError("damping amplitude a0 must be >= 0")
        if not (ALPHA_RANGE[0] <= self.alpha <= ALPHA_RANGE[1]):
            raise ValueError(
                f"alpha={self.alpha} outside the effective-damping range "
                f"[{ALPHA_RANGE[0]}, {ALPHA_RANGE[1]}]"
            )
        if self.family == "custom":
            x, a = _as_table(self.x_table, self.a_table, "damping")
            object.__setattr__(self, "x_table", x)
            object.__setattr__(self, "a_table", a)

    def a1_bound(self) -> float:
        """Lower envelope constant: inf of (1+|x|)^alpha * a(x)."""
        if self.family == "monomial":
            return self.a0
        return float(np.min((1 + np.abs(self.x_table)) ** self.alpha * self.a_table))

    def a2_bound(self) -> float:
        """Upper envelope constant: sup of (1+|x|)^alpha * a(x)."""
        if self.family == "monomial":
            return self.a0
        return float(np.max((1 + np.abs(self.x_table)) ** self.alpha * self.a_table))

    def sup_norm(self) -> float:
        if self.family == "monomial":
            return self.a0
        return float(np.max(self.a_table))


@dataclass(frozen=True)
class PotentialProfile:
    """Positive bounded potential V(x), non-increasing away from the origin.

    Families: gaussian V0*exp(-x^2), power V0*(1+x^2)^(-mu/2), constant V0
    (the Klein-Gordon case), and custom tabulated values.  V0 = 0 is
    allowed for potential-free reference runs (reported as a violation by
    validation, same as a0 = 0).
    """

    V0: float
    family: str = "gaussian"
    mu: Optional[float] = None
    x_table: Optional[np.ndarray] = field(default=None, repr=False)
    v_table: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.family not in ("gaussian", "power", "constant", "custom"):
            raise ValueError(f"unknown potential family {self.family!r}")
        if self.V0 < 0:
            raise ValueError("potential amplitude V0 must be >= 0")
        if self.family == "power":
            if self.mu is None or self.mu <= 0:
                raise ValueError("power-family potential needs mu > 0")
        if self.family == "custom":
            x, v = _as_table(self.x_table, self.v_table, "potential")
            object.__setattr__(self, "x_table", x)
            object.__setattr__(self, "v_table", v)

    def sup_norm(self) -> float:
        if self.family == "custom":
            return float(np.max(self.v_table))
        return self.V0


def _check_range(x, table, what: str):
    x = np.asarray(x, dtype=float)
    if np.any(x < table[0] - 1e-12) or np.any(x > table[-1] + 1e-12):
        raise TabulationRangeError(
            f"{what} queried at x outside the tabulated range "
            f"[{table[0]}, {table[-1]}]; extend the table to cover the light cone"
        )
    return x


def eval_damping(profile: DampingProfile, x):
    """Evaluate a(x); scalar in, scalar out, array in, array out."""
    if profile.family == "monomial":
        return profile.a0 * (1.0 + np.abs(x)) ** (-profile.alpha)
    xq = _check_range(x, profile.x_table, "custom damping")
    out = np.interp(xq, profile.x_table, profile.a_table)
    return out if np.ndim(x) else float(out)


def eval_potential(profile: PotentialProfile, x):
    """Evaluate (V(x), V'(x)) for the closed-form families.

    Custom tables use linear interpolation for V and a centered table
    derivative for V'.
    """
    x_arr = np.asarray(x, dtype=float)
    if profile.family == "gaussian":
        v = profile.V0 * np.exp(-x_arr**2)
        vx = -2.0 * x_arr * v
    elif profile.family == "power":
        base = 1.0 + x_arr**2
        v = profile.V0 * base ** (-profile.mu / 2.0)
        vx = -profile.mu * profile.V0 * x_arr * base ** (-profile.mu / 2.0 - 1.0)
    elif profile.family == "constant":
        v = np.full_like(x_arr, profile.V0)
        vx = np.zeros_like(x_arr)
    else:
        xq = _check_range(x_arr, profile.x_table, "custom potential")
        v = np.interp(xq, profile.x_table, profile.v_table)
        vx = np.interp(xq, profile.x_table, np.gradient(profile.v_table, profile.x_table))
    if np.ndim(x):
        return v, vx
    return float(v), float(vx)


@dataclass
class ValidationReport:
    """Pointwise hypothesis check over a mesh truncation of the line."""

    passed: bool
    clauses: dict
    a1_est: float
    a2_est: float
    a_sup: float
    v_sup: float
    messages: list

    def summary(self) -> str:
        lines = [f"hypotheses {'PASS' if self.passed else 'FAIL'}"]
        for name, ok in self.clauses.items():
            lines.append(f"  {name}: {'ok' if ok else 'VIOLATED'}")
        lines.append(f"  a1={self.a1_est:.6g} a2={self.a2_est:.6g} "
                     f"sup|a|={self.a_sup:.6g} sup V={self.v_sup:.6g}")
        lines.extend("  " + m for m in self.messages)
        return "\n".join(lines)


def validate_assumptions(damping: DampingProfile, potential: PotentialProfile,
                         domain_halfwidth: float, mesh: float) -> ValidationReport:
    """Check every hypothesis clause pointwise on a symmetric mesh.

    The halfwidth should cover the light cone of the planned run; the
    envelope constants a1, a2 are estimated as mesh inf/sup of
    (1+|x|)^alpha * a(x), which is exact for the monomial family.
    Boundedness is checked as sup V <= V(0): under the monotonicity
    clause the sup of V must sit at the origin, so a larger value off
    center witnesses an unbounded (or non-admissible) potential.
    """
    if mesh <= 0:
        raise ValueError("validation mesh must be positive")
    if domain_halfwidth <= 0:
        raise ValueError("domain halfwidth must be positive")
    m = int(np.ceil(domain_halfwidth / mesh))
    x = (np.arange(2 * m + 1) - m) * mesh

    a = np.asarray(eval_damping(damping, x), dtype=float)
    v, vx = eval_potential(potential, x)
    v = np.asarray(v, dtype=float)
    vx = np.asarray(vx, dtype=float)

    weight = (1.0 + np.abs(x)) ** damping.alpha
    a1_est = float(np.min(weight * a))
    a2_est = float(np.max(weight * a))
    a_sup = float(np.max(a))
    v_sup = float(np.max(v))
    v0 = float(v[m])

    tol = 1e-12 * max(1.0, v_sup)
    # closed-form families are positive exactly when their amplitude is;
    # the pointwise test would trip on harmless underflow (gaussian tails
    # reach 0.0 beyond |x| ~ 27)
    if potential.family == "custom":
        v_positive = bool(np.min(v) > 0)
    else:
        v_positive = potential.V0 > 0
    clauses = {
        "damping_positive": bool(np.min(a) > 0),
        "damping_envelope": bool(a1_est > 0 and np.isfinite(a2_est)),
        "potential_positive": v_positive,
        "potential_bounded": bool(v_sup <= v0 * (1 + 1e-9) + tol),
        "potential_monotone": bool(np.max(x * vx) <= tol),
    }
    messages = []
    if not clauses["damping_positive"]:
        messages.append(f"a(x) <= 0 somewhere (min a = {np.min(a):.6g})")
    if not clauses["damping_envelope"]:
        messages.append("damping envelope constants degenerate (a1 <= 0)")
    if not clauses["potential_positive"]:
        messages.append(f"V(x) <= 0 somewhere (min V = {np.min(v):.6g})")
    if not clauses["potential_bounded"]:
        messages.append(
            f"sup V = {v_sup:.6g} exceeds V(0) = {v0:.6g}: not bounded by its center value")
    if not clauses["potential_monotone"]:
        worst = int(np.argmax(x * vx))
        messages.append(
            f"x*V'(x) > 0 at x = {x[worst]:.6g}: potential increases away from the origin")

    return ValidationReport(
        passed=all(clauses.values()),
        clauses=clauses,
        a1_est=a1_est,
        a2_est=a2_est,
        a_sup=a_sup,
        v_sup=v_sup,
        messages=messages,
    )
