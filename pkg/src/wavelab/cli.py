"""Configuration-driven experiment runner.

Subcommands: ``run`` (validate + simulate + trace CSV), ``certify``
(parameter selection + cone scan), ``fit`` (decay exponent from a trace
CSV), ``converge`` (free-wave oracle refinement study), ``sweep``
(parallel multi-config driver).  Configs are JSON; every run writes a
metadata sidecar that can itself be fed back as a config to reproduce
the run byte-for-byte.

Exit codes: 0 success, 2 validation failure, 3 numerical failure, 4 I/O.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import sys

import numpy as np

from . import _kernels
from .analysis import convergence_order, fit_decay_exponent
from .energy import EnergyTrace
from .multiplier import MultiplierWeights, Regime, select_parameters, verify_certificate
from .profiles import DampingProfile, PotentialProfile, validate_assumptions
from .solver import (HypothesisError, InitialData, NumericalError, build_grid,
                     dalembert_reference, simulate)

__all__ = ["main", "ConfigError", "load_config", "config_schema"]

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


class ConfigError(ValueError):
    """Malformed experiment configuration; message lists every bad field."""


def config_schema() -> dict:
    """Published shape of the experiment configuration."""
    return {
        "damping": {"family": "monomial|custom", "a0": "float >= 0",
                    "alpha": "float in [0, 1]",
                    "x?": "[floats] (custom)", "values?": "[floats] (custom)"},
        "potential": {"family": "gaussian|power|constant|custom", "V0": "float >= 0",
                      "mu?": "float > 0 (power)",
                      "x?": "[floats] (custom)", "values?": "[floats] (custom)"},
        "initial": {"R": "float > 0",
                    "u0": {"family": "hat|bump|zero", "amplitude": "float"},
                    "u1": {"family": "hat|bump|zero", "amplitude": "float"}},
        "grid": {"dx": "float > 0", "courant": "float in (0, 1]",
                 "T": "float > 0", "sample_every": "float > 0"},
        "multiplier?": {"regime": "subcritical|critical_strong|critical_weak",
                        "mu": "float > 0", "delta?": "float > 0",
                        "k_factor?": "float > 1"},
        "certificate?": {"T": "float > 0", "dt": "float > 0", "dx": "float > 0"},
        "output?": {"trace": "path", "metadata?": "path"},
    }


def _require(cfg: dict, section: str, fields: dict, errors: list):
    block = cfg.get(section)
    if block is None:
        errors.append(f"{section}: missing section")
        return {}
    if not isinstance(block, dict):
        errors.append(f"{section}: must be an object")
        return {}
    for name, kind in fields.items():
        if name not in block:
            errors.append(f"{section}.{name}: missing")
        elif kind is float and not isinstance(block[name], (int, float)):
            errors.append(f"{section}.{name}: expected a number, got {block[name]!r}")
        elif kind is str and not isinstance(block[name], str):
            errors.append(f"{section}.{name}: expected a string, got {block[name]!r}")
        elif kind is dict and not isinstance(block[name], dict):
            errors.append(f"{section}.{name}: expected an object")
    return block


def load_config(path) -> dict:
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    # a metadata sidecar embeds the config it came from; accept it directly
    if "config" in cfg and isinstance(cfg["config"], dict) and "damping" in cfg["config"]:
        cfg = cfg["config"]
    return cfg


def _validate_config(cfg: dict, need_grid: bool = True):
    errors: list = []
    damping = _require(cfg, "damping", {"family": str, "a0": float, "alpha": float}, errors)
    potential = _require(cfg, "potential", {"family": str, "V0": float}, errors)
    initial = _require(cfg, "initial", {"R": float, "u0": dict, "u1": dict}, errors)
    if need_grid:
        _require(cfg, "grid", {"dx": float, "courant": float, "T": float,
                               "sample_every": float}, errors)
    if potential.get("family") == "power" and "mu" not in potential:
        errors.append("potential.mu: missing (required by the power family)")
    for name in ("u0", "u1"):
        sub = initial.get(name)
        if isinstance(sub, dict):
            if "family" not in sub:
                errors.append(f"initial.{name}.family: missing")
            if sub.get("family") != "zero" and "amplitude" not in sub:
                errors.append(f"initial.{name}.amplitude: missing")
    if damping.get("family") == "custom" and ("x" not in damping or "values" not in damping):
        errors.append("damping.x / damping.values: missing (required by the custom family)")
    if potential.get("family") == "custom" and ("x" not in potential or "values" not in potential):
        errors.append("potential.x / potential.values: missing (required by the custom family)")
    if "multiplier" in cfg:
        mult = cfg["multiplier"]
        if not isinstance(mult, dict) or "regime" not in mult or "mu" not in mult:
            errors.append("multiplier: needs at least {regime, mu}")
        elif mult["regime"] not in tuple(r.value for r in Regime):
            errors.append(f"multiplier.regime: unknown regime {mult['regime']!r}")
    if errors:
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(errors))


def _build_objects(cfg: dict):
    d_cfg = cfg["damping"]
    try:
        if d_cfg["family"] == "custom":
            damping = DampingProfile(a0=float(d_cfg["a0"]), alpha=float(d_cfg["alpha"]),
                                     family="custom", x_table=d_cfg["x"],
                                     a_table=d_cfg["values"])
        else:
            damping = DampingProfile(a0=float(d_cfg["a0"]), alpha=float(d_cfg["alpha"]),
                                     family=d_cfg["family"])
        p_cfg = cfg["potential"]
        if p_cfg["family"] == "custom":
            potential = PotentialProfile(V0=float(p_cfg["V0"]), family="custom",
                                         x_table=p_cfg["x"], v_table=p_cfg["values"])
        else:
            potential = PotentialProfile(V0=float(p_cfg["V0"]), family=p_cfg["family"],
                                         mu=p_cfg.get("mu"))
        i_cfg = cfg["initial"]
        init = InitialData(
            R=float(i_cfg["R"]),
            u0_family=i_cfg["u0"]["family"],
            u0_amplitude=float(i_cfg["u0"].get("amplitude", 0.0)),
            u1_family=i_cfg["u1"]["family"],
            u1_amplitude=float(i_cfg["u1"].get("amplitude", 0.0)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return damping, potential, init


def _build_weights(cfg: dict, damping: DampingProfile):
    mult = cfg.get("multiplier")
    if mult is None:
        return None
    try:
        return select_parameters(Regime(mult["regime"]), damping,
                                 mu=float(mult["mu"]),
                                 delta=float(mult.get("delta", 0.1)),
                                 k_factor=float(mult.get("k_factor", 1.5)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _weights_metadata(w: MultiplierWeights) -> dict:
    return {
        "regime": w.regime.value, "mu": w.mu, "eps1": w.eps1, "eps2": w.eps2,
        "eps3": w.eps3, "k": w.k, "k_bound": w.k_bound, "theta": w.theta,
        "a1": w.a1, "a_sup": w.a_sup, "delta": w.delta, "lambda": w.lam,
        "gamma": w.gamma,
    }


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    _validate_config(cfg)
    damping, potential, init = _build_objects(cfg)
    weights = _build_weights(cfg, damping)
    grid_cfg = cfg["grid"]
    out_cfg = cfg.get("output", {})
    trace_path = args.out or out_cfg.get("trace")
    if trace_path is None:
        raise ConfigError("no output path: set output.trace in the config or pass --out")
    meta_path = out_cfg.get("metadata", str(trace_path) + ".meta.json")

    try:
        trace = simulate(init, damping, potential,
                         T=float(grid_cfg["T"]), dx=float(grid_cfg["dx"]),
                         courant=float(grid_cfg["courant"]),
                         sample_every=float(grid_cfg["sample_every"]),
                         weights=weights,
                         override_hypotheses=args.override_hypotheses)
    except NumericalError as exc:
        if exc.trace is not None:
            exc.trace.to_csv(trace_path)
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    trace.to_csv(trace_path)
    meta = {
        "config": cfg,
        "run": trace.metadata,
        "weights": None if weights is None else _weights_metadata(weights),
    }
    with open(meta_path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
    print(f"wrote {trace_path} ({len(trace)} samples) and {meta_path}")
    return EXIT_OK


def cmd_certify(args) -> int:
    cfg = load_config(args.config)
    _validate_config(cfg, need_grid=False)
    if "multiplier" not in cfg:
        raise ConfigError("certify needs a multiplier section {regime, mu, ...}")
    damping, potential, init = _build_objects(cfg)
    weights = _build_weights(cfg, damping)
    cert_cfg = cfg.get("certificate", {})
    report = verify_certificate(
        weights, damping, potential,
        R=float(cert_cfg.get("R", init.R)),
        T=float(cert_cfg.get("T", 500.0)),
        dt=float(cert_cfg.get("dt", 0.5)),
        dx=float(cert_cfg.get("dx", 0.05)))
    if weights.regime is Regime.CRITICAL_WEAK:
        print(f"theta = {weights.theta:.17g}")
    print(report.to_text())
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("regime,t0,min_K1,min_K2,C_cert,max_F3_ratio,pass\n")
            fh.write(f"{report.regime},{report.t0:.17g},{report.min_K1:.17g},"
                     f"{report.min_K2:.17g},{report.C_cert:.17g},"
                     f"{report.max_F3_ratio:.17g},{str(report.passed).lower()}\n")
    return EXIT_OK if report.passed else EXIT_VALIDATION


def cmd_fit(args) -> int:
    try:
        trace = EnergyTrace.from_csv(args.trace)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    try:
        fit = fit_decay_exponent(trace, window_fraction=args.window)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    header = "label,t_lo,t_hi,exponent,r2,n"
    row = fit.csv_row(args.label)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(header + "\n" + row + "\n")
    print(header)
    print(row)
    return EXIT_OK


def cmd_converge(args) -> int:
    init = InitialData(R=args.R, u0_family="bump", u0_amplitude=1.0)
    damping = DampingProfile(a0=0.0, alpha=0.0)
    potential = PotentialProfile(V0=0.0, family="constant")
    rows = []
    for dx in args.dx:
        grid = build_grid(init.R, args.T, dx, args.courant)
        final = {}

        def keep_last(state, _final=final):
            _final["state"] = state.copy()

        simulate(init, damping, potential, T=args.T, dx=dx, courant=args.courant,
                 sample_every=args.T, override_hypotheses=True, on_sample=keep_last)
        state = final["state"]
        x = grid.nodes()
        err = float(np.max(np.abs(state.u - dalembert_reference(init, state.t, x))))
        rows.append((dx, err))
        print(f"dx={dx:.17g} err={err:.17g}")
    order = convergence_order(rows)
    print(f"order={order:.4f}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("dx,err\n")
            for dx, err in rows:
                fh.write(f"{dx:.17g},{err:.17g}\n")
            fh.write(f"# order,{order:.17g}\n")
    return EXIT_OK


def _sweep_one(path: str, override: bool) -> tuple:
    ns = argparse.Namespace(config=path, out=None, override_hypotheses=override)
    try:
        code = cmd_run(ns)
    except ConfigError as exc:
        return path, EXIT_VALIDATION, str(exc)
    except HypothesisError as exc:
        return path, EXIT_VALIDATION, str(exc)
    except OSError as exc:
        return path, EXIT_IO, str(exc)
    return path, code, "ok"


def cmd_sweep(args) -> int:
    worst = EXIT_OK
    with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
        futures = [pool.submit(_sweep_one, path, args.override_hypotheses)
                   for path in args.configs]
        for fut in concurrent.futures.as_completed(futures):
            path, code, msg = fut.result()
            status = "ok" if code == EXIT_OK else f"failed ({code}): {msg}"
            print(f"{path}: {status}")
            worst = max(worst, code)
    return worst


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wavelab",
        description="Damped-wave decay experiments: simulate, certify, fit.")
    parser.add_argument("--version", action="version", version="wavelab 0.1.0")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="validate hypotheses, simulate, write trace CSV")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default=None, help="trace CSV path (overrides config)")
    p_run.add_argument("--override-hypotheses", action="store_true",
                       help="run even when the coefficient hypotheses fail")
    p_run.set_defaults(func=cmd_run)

    p_cert = sub.add_parser("certify", help="select parameters and scan the certificate")
    p_cert.add_argument("--config", required=True)
    p_cert.add_argument("--out", default=None, help="report CSV path")
    p_cert.set_defaults(func=cmd_certify)

    p_fit = sub.add_parser("fit", help="fit a decay exponent to a trace CSV")
    p_fit.add_argument("trace")
    p_fit.add_argument("--window", type=float, default=0.25,
                       help="window fraction: fit over [window*T, T]")
    p_fit.add_argument("--label", default="run")
    p_fit.add_argument("--out", default=None)
    p_fit.set_defaults(func=cmd_fit)

    p_conv = sub.add_parser("converge", help="free-wave oracle refinement study")
    p_conv.add_argument("--dx", type=float, nargs="+", default=[0.02, 0.01, 0.005])
    p_conv.add_argument("--T", type=float, default=5.0)
    p_conv.add_argument("--R", type=float, default=3.0)
    p_conv.add_argument("--courant", type=float, default=0.5)
    p_conv.add_argument("--out", default=None)
    p_conv.set_defaults(func=cmd_converge)

    p_sweep = sub.add_parser("sweep", help="run many configs in parallel")
    p_sweep.add_argument("configs", nargs="+")
    p_sweep.add_argument("--jobs", type=int, default=None)
    p_sweep.add_argument("--override-hypotheses", action="store_true")
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, HypothesisError) as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
