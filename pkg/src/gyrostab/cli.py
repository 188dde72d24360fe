"""``gyrostab`` command-line interface.

Exit codes: 0 ok, 1 verification failure, 2 configuration error,
3 state is not an equilibrium, 4 integration blow-up.
"""
from __future__ import annotations

import argparse
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, numerics, verify
from . import gyrostat as G
from .config import ConfigError, RunConfig, load_config
from .skewprod import NotAnEquilibrium, StabilityReport

log = logging.getLogger("gyrostab")

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_CONFIG = 2
EXIT_NOT_EQ = 3
EXIT_BLOWUP = 4

CSV_HEADER = "t,M1,M2,M3,g1,g2,g3,H,C1,C2,F"
DOC_VERSION = 1


# --------------------------------------------------------------------------
# report documents


def _num(x: float) -> str:
    # repr is the shortest string that round-trips to the same double
    return repr(float(x))


def dump_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def params_dict(p: G.GyrostatParams) -> dict:
    return {"I": [p.I1, p.I2, p.I3], "mu": list(p.mu), "m": p.m, "r_G": list(p.r_G)}


def params_from_dict(d: dict) -> G.GyrostatParams:
    return G.GyrostatParams(*d["I"], mu=tuple(d["mu"]), m=d.get("m", 0.0), r_G=tuple(d.get("r_G", (0, 0, 0))))


def report_entry(params, eq: G.EquilibriumState) -> dict:
    rep = G.analyze(params, eq)
    fac = G.char_poly_factored(params, eq)
    entry = {
        "equilibrium": eq.to_dict(),
        "report": rep.to_dict(),
        "char_poly": {
            "omega": fac.omega,
            "cubic": [float(c) for c in fac.cubic],
            "coefficients": [float(c) for c in fac.coefficients()],
        },
        "undecided_family": bool(G.is_undecided_family(params, eq)),
    }
    viol = rep.violations(G.tf_lyapunov(params, eq.M))
    if viol:
        raise RuntimeError(f"inconsistent report for {eq.state}: {viol}")
    return entry


def analysis_document(params, eqs) -> dict:
    return {
        "kind": "analysis",
        "version": DOC_VERSION,
        "generator": f"gyrostab {__version__}",
        "params": params_dict(params),
        "equilibria": [report_entry(params, eq) for eq in eqs],
    }


def read_report(path) -> tuple[G.GyrostatParams, list[tuple[dict, StabilityReport]]]:
    """Load an analysis document written by ``gyrostab analyze``."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("kind") != "analysis":
        raise ValueError(f"{path} is not an analysis document")
    entries = [(e["equilibrium"], StabilityReport.from_dict(e["report"])) for e in doc["equilibria"]]
    return params_from_dict(doc["params"]), entries


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# equilibrium specification


def _parse_sets(items) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"--set expects name=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k.strip()] = [float(x) for x in v.split(",")]
        except ValueError:
            raise ConfigError(f"bad number in --set {item!r}") from None
    return out


def _equilibrium(cfg: RunConfig, args) -> G.EquilibriumState:
    given = dict(cfg.equilibrium)
    sets = _parse_sets(getattr(args, "set", None))
    given.update({k: v[0] for k, v in sets.items()})
    if getattr(args, "family", None):
        given["family"] = args.family
    if getattr(args, "state", None):
        given = {"state": args.state}
    p = cfg.params
    if "state" in given:
        x = np.asarray(given["state"], float)
        if x.shape != (6,):
            raise ConfigError("state must have six components")
        ok, eq = G.classify_state(p, x, tol=1e-9)
        if not ok:
            raise NotAnEquilibrium(f"state {x.tolist()} is not an equilibrium")
        if eq is None:
            raise ConfigError(f"equilibrium {x.tolist()} matches no family")
        return eq
    if "family" not in given:
        raise ConfigError("no equilibrium given: use --family/--set or --state")
    family = given.pop("family")
    try:
        return G.make_equilibrium(p, family, **{k: float(v) for k, v in given.items()})
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad equilibrium specification: {exc}") from exc


def _analytic(cfg: RunConfig):
    try:
        cfg.params.require_axis()
    except G.UnsupportedMu as exc:
        raise ConfigError(str(exc)) from exc


# --------------------------------------------------------------------------
# commands


def cmd_enumerate(cfg: RunConfig, args) -> int:
    _analytic(cfg)
    p = cfg.params
    k = p.axis
    lines = [f"mu along axis {k}, mu{k} = {p.mu[k - 1]!r}"]
    for t in G.family_templates(p):
        lines.append(t.describe())
    lines.append(
        f"note: E12 with q = -mu{k} and alpha != 0 is the undecided family "
        "(Lyapunov and gamma verdicts are Undecided)"
    )
    ranges = dict(cfg.enumerate)
    ranges.update(_parse_sets(args.set))
    doc = {
        "kind": "families",
        "version": DOC_VERSION,
        "params": params_dict(p),
        "templates": [
            {"family": t.family.value, "free": list(t.free), "M": list(t.M), "gamma": list(t.gamma)}
            for t in G.family_templates(p)
        ],
        "states": [],
    }
    if ranges:
        for name, vals in ranges.items():
            if not isinstance(vals, (list, tuple)):
                ranges[name] = [vals]
        try:
            eqs = G.enumerate_families(p, ranges)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        for eq in eqs:
            vals = ", ".join(f"{n}={v:g}" for n, v in sorted(eq.params.items()))
            comps = ", ".join(f"{v:g}" for v in eq.state)
            lines.append(f"{eq.family.value} [{vals}]: ({comps})")
            doc["states"].append(eq.to_dict())
    print("\n".join(lines))
    if cfg.out:
        _emit(dump_json(doc), cfg.out)
    return EXIT_OK


def cmd_analyze(cfg: RunConfig, args) -> int:
    _analytic(cfg)
    if args.all:
        ranges = {k: v for k, v in _parse_sets(args.set).items()}
        eqs = G.enumerate_families(cfg.params, ranges or None)
    else:
        eqs = [_equilibrium(cfg, args)]
    _emit(dump_json(analysis_document(cfg.params, eqs)), cfg.out)
    return EXIT_OK


def _sim_option(cfg, args, name, default):
    v = getattr(args, name, None)
    if v is None:
        v = cfg.simulate.get(name, default)
    return v


def cmd_simulate(cfg: RunConfig, args) -> int:
    p = cfg.params
    x0 = args.state if args.state is not None else cfg.simulate.get("state")
    if x0 is None:
        raise ConfigError("simulate needs an initial state (--state or [simulate].state)")
    x0 = np.asarray(x0, float)
    if x0.shape != (6,) or not np.all(np.isfinite(x0)):
        raise ConfigError("initial state must be six finite numbers")
    T = float(_sim_option(cfg, args, "T", 10.0))
    dt = float(_sim_option(cfg, args, "dt", 1e-3))
    stride = int(_sim_option(cfg, args, "stride", 1))
    general = bool(args.general or cfg.simulate.get("general", False))
    if T <= 0 or dt <= 0 or stride < 1:
        raise ConfigError("need T > 0, dt > 0 and stride >= 1")
    traj = numerics.integrate(numerics.gyrostat_field(p, general), x0, T, dt, stride=stride)
    vals = numerics.conserved_series(p, traj.states)
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for t, x, c in zip(traj.times, traj.states, vals):
        buf.write(",".join(_num(v) for v in (t, *x, *c)) + "\n")
    if traj.blowup:
        buf.write(f"# blow-up: state norm exceeded {numerics.BLOWUP:g} after t={float(traj.times[-1])!r}\n")
    _emit(buf.getvalue(), cfg.out)
    d = numerics.relative_drift(traj)
    sys.stderr.write(
        "relative drift: " + " ".join(f"{n}={v:.3e}" for n, v in zip(("H", "C1", "C2", "F"), d)) + "\n"
    )
    if traj.blowup:
        sys.stderr.write("error: integration blew up\n")
        return EXIT_BLOWUP
    return EXIT_OK


def cmd_perturb(cfg: RunConfig, args) -> int:
    eq = _equilibrium(cfg, args)
    sec = cfg.perturb
    delta0 = float(args.delta0 if args.delta0 is not None else sec.get("delta0", 1e-4))
    n = int(args.samples if args.samples is not None else sec.get("samples", 16))
    T = float(args.T if args.T is not None else sec.get("T", 100.0))
    dt = float(args.dt if args.dt is not None else sec.get("dt", 1e-3))
    thr = args.threshold if args.threshold is not None else sec.get("threshold")
    thr = None if thr is None else float(thr)
    workers = int(args.workers if args.workers is not None else sec.get("workers", 1))
    if delta0 <= 0 or n < 1 or T <= 0 or dt <= 0 or workers < 1:
        raise ConfigError("need delta0 > 0, samples >= 1, T > 0, dt > 0, workers >= 1")
    if thr is not None and thr <= delta0:
        raise ConfigError("threshold must exceed delta0")
    res = numerics.perturb_experiment(
        cfg.params, eq, delta0, n, T=T, dt=dt, seed=cfg.seed, escape_threshold=thr, workers=workers
    )
    doc = {
        "kind": "perturbation",
        "version": DOC_VERSION,
        "params": params_dict(cfg.params),
        "equilibrium": eq.to_dict(),
        "result": res.to_dict(),
        "empirical_verdict": numerics.empirical_verdict(res).to_dict(),
    }
    _emit(dump_json(doc), cfg.out)
    return EXIT_OK


def cmd_verify(cfg: RunConfig, args) -> int:
    results = verify.run_suite(cfg.seed, fault=args.inject_fault)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    if cfg.out:
        doc = {"kind": "verify", "seed": cfg.seed, "fault": args.inject_fault,
               "checks": [r.to_dict() for r in results]}
        _emit(dump_json(doc), cfg.out)
    return EXIT_VERIFY if failed else EXIT_OK


# --------------------------------------------------------------------------
# argument parsing


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", metavar="PATH", help="TOML configuration file")
    p.add_argument("--I1", type=float)
    p.add_argument("--I2", type=float)
    p.add_argument("--I3", type=float)
    p.add_argument("--mu-axis", type=int, dest="mu_axis", help="axis (1-3) carrying mu")
    p.add_argument("--mu", type=float, help="magnitude of mu along --mu-axis")
    p.add_argument("--mu-vec", type=float, nargs=3, dest="mu_vec", metavar=("MU1", "MU2", "MU3"))
    p.add_argument("--m", type=float, help="mass (general field only)")
    p.add_argument("--r-G", type=float, nargs=3, dest="r_G", metavar=("X", "Y", "Z"))
    p.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    p.add_argument("--seed", type=int)
    p.add_argument("-v", "--verbose", action="store_true")


def _eq_args(p: argparse.ArgumentParser):
    p.add_argument("--family", choices=[f.value for f in G.Family])
    p.add_argument("--set", action="append", metavar="NAME=VALUE", help="family parameter, repeatable")
    p.add_argument("--state", type=float, nargs=6, metavar="X")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gyrostab", description="Stability of the Zhukovski gyrostat.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enumerate", help="list equilibrium families")
    _common(p)
    p.add_argument("--set", action="append", metavar="NAME=V1,V2", help="values to instantiate")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("analyze", help="stability report for an equilibrium")
    _common(p)
    _eq_args(p)
    p.add_argument("--all", action="store_true", help="analyze every enumerated equilibrium")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="integrate a trajectory to CSV")
    _common(p)
    p.add_argument("--state", type=float, nargs=6, metavar="X")
    p.add_argument("--T", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--stride", type=int)
    p.add_argument("--general", action="store_true", help="include the gravity torque m*gamma x r_G")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("perturb", help="random perturbation experiment")
    _common(p)
    _eq_args(p)
    p.add_argument("--delta0", type=float)
    p.add_argument("--samples", type=int)
    p.add_argument("--T", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--threshold", type=float)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("verify", help="run the oracle suite")
    _common(p)
    p.add_argument("--inject-fault", choices=sorted(verify.FAULTS), help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    overrides = {k: getattr(args, k, None) for k in ("I1", "I2", "I3", "mu_axis", "mu", "mu_vec", "m", "r_G", "out", "seed")}
    try:
        cfg = load_config(args.config, overrides)
        return args.func(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NotAnEquilibrium as exc:
        print(f"not an equilibrium: {exc}", file=sys.stderr)
        return EXIT_NOT_EQ
    except numerics.BlowUp as exc:
        print(f"blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP


if __name__ == "__main__":
    sys.exit(main())
