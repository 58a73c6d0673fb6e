"""Command-line front end: one subcommand per check, JSON summaries and CSV tables.

Exit status is 0 when every verdict passes, 1 when a verdict or numerical contract
fails (the failing check is named on stderr) and 2 for invalid input.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import sys as _sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import acceptance, actions, geometry, manifolds, rates, scattering, topology
from .config import DEFAULT_TOLERANCES, FORMAT_VERSION, FORMATS, RunConfig, build_system, load, parse_value
from .dynamics import registry_names
from .errors import ArgumentError, ConfsymError, ConstructionError, SchemaError

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


@dataclass
class Outcome:
    """Results of one subcommand: JSON payload, named verdicts, CSV tables and JSON-lines records."""

    results: dict
    verdicts: dict
    tables: dict = field(default_factory=dict)
    records: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    def failed(self) -> list[str]:
        return [k for k, v in self.verdicts.items() if not v]


def _plain(obj):
    """JSON-compatible copy with numpy scalars, arrays and complex numbers converted."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    return obj


def dumps(payload: dict) -> str:
    return json.dumps(_plain(payload), sort_keys=True, indent=2) + "\n"


def table_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


# --------------------------------------------------------------------------
# shared helpers


def _point(text: str | None, sys) -> np.ndarray:
    if text is None:
        return _default_point(sys)
    try:
        x = np.array([float(v) for v in text.replace(",", " ").split()], dtype=float)
    except ValueError as exc:
        raise SchemaError(f"--point expects numbers, got {text!r}") from exc
    if x.shape != (sys.dim,):
        raise SchemaError(f"--point needs {sys.dim} coordinates for system {sys.name!r}, got {x.size}")
    return x


def _default_point(sys) -> np.ndarray:
    """Point of the declared manifold with periodic center coordinates at 0.3 and the rest at 0."""
    model = sys.model
    if model is None:
        return np.zeros(sys.dim)
    c = np.array([0.3 if sys.periodic[i] else 0.0 for i in model.center_idx])
    return model.embed(c)


def _manifold_samples(sys, rng, n: int) -> np.ndarray:
    model = _need_model(sys)
    return model.embed(model.center(sys.sample(rng, n)))


def _need_model(sys):
    if sys.model is None:
        raise ArgumentError(f"system {sys.name!r} declares no invariant manifold")
    return sys.model


def _need_omega(sys):
    if sys.omega is None:
        raise ArgumentError(f"system {sys.name!r} declares no two-form")
    return sys.omega


def _forward_eta(sys) -> float:
    if sys.eta is None:
        raise ArgumentError(f"system {sys.name!r} declares no constant conformal factor")
    return float(sys.eta)


def _coords(prefix: str, d: int) -> list[str]:
    return [f"{prefix}{i}" for i in range(d)]


# --------------------------------------------------------------------------
# subcommands


def cmd_check_conformal(sys, cfg, args) -> Outcome:
    _need_omega(sys)
    pts = sys.sample(np.random.default_rng(cfg.seed), cfg.samples)
    per = np.array([geometry.conformality_residual(sys, x) for x in pts])
    tol = cfg.tolerances["conformal"]
    worst = float(per.max())
    rows = [[*x, r] for x, r in zip(pts, per)]
    return Outcome({"residual": worst, "samples": len(pts), "tolerance": tol},
                   {"conformality": worst <= tol},
                   {"residuals": (_coords("x", sys.dim) + ["residual"], rows)})


def cmd_exactness(sys, cfg, args) -> Outcome:
    if sys.alpha is None:
        raise ArgumentError(f"system {sys.name!r} declares no action form")
    pts = sys.sample(np.random.default_rng(cfg.seed), cfg.samples)
    base = pts[0]
    loops = [geometry.circle_loop(base, i, sys.periodic) for i in range(sys.dim) if sys.periodic[i]]
    tol = cfg.tolerances["exactness"]
    rep = geometry.exactness_residual(sys, sys.alpha, sys.primitive, pts, loops, tol=tol)
    exact = all(abs(p) <= tol for p in rep.periods)
    results = {"pointwise": rep.pointwise, "periods": rep.periods, "tolerance": tol,
               "primitive_declared": sys.primitive is not None,
               "classification": "exact" if exact else "non-exact"}
    verdicts = {}
    if sys.primitive is not None:
        verdicts = {"pointwise": rep.pointwise <= tol, "periods": exact}
    rows = [[i, p] for i, p in enumerate(rep.periods)]
    return Outcome(results, verdicts, {"periods": (["loop", "period"], rows)})


def _curve_rows(report) -> list[list]:
    rows = []
    for key in sorted(report.fits):
        for j, fit in enumerate(report.fits[key]):
            if fit.curve is None:
                continue
            rows.extend([key, j, n, float(v)] for n, v in enumerate(np.asarray(fit.curve, dtype=float)))
    return rows


def cmd_rates(sys, cfg, args) -> Outcome:
    x = _point(args.point, sys)
    rep = rates.compute_rate_report(sys, x, n_max=args.n)
    results = {"report": rep.to_dict()}
    if sys.eta is not None:
        results["pairing"] = rates.pairing_check(rep, float(sys.eta), cfg.tolerances["pairing"])
    return Outcome(results, {"nhim_consistent": rep.nhim_consistent},
                   {"log_growth": (["rate", "basis_vector", "n", "log_growth"], _curve_rows(rep))})


def cmd_pairing(sys, cfg, args) -> Outcome:
    eta = _forward_eta(sys)
    if args.declared:
        source, rep = "declared", sys
        values = rates._rates(sys)
    else:
        x = _point(args.point, sys)
        rep = rates.compute_rate_report(sys, x, n_max=args.n)
        source, values = "computed", rep.as_rates()
    tol = cfg.tolerances["pairing"]
    pc = rates.pairing_check(rep, eta, tol)
    conditions = rates.rate_condition_check(rep, eta)
    rows = [[k, v] for k, v in sorted(values.items())]
    return Outcome({"source": source, "rates": values, "eta": eta, "pairing": pc, "conditions": conditions},
                   {"pairing": pc["holds"]}, {"rates": (["rate", "value"], rows)})


def cmd_vanishing(sys, cfg, args) -> Outcome:
    _need_omega(sys)
    pts = _manifold_samples(sys, np.random.default_rng(cfg.seed), args.points)
    blocks = rates.block_vanishing_check(sys, pts)["blocks"]
    tol = cfg.tolerances["check"]
    verdicts = {f"block_{b['block']}": b["max_abs"] <= tol for b in blocks
                if b["condition_holds"] and not b["vacuous"]}
    header = ["block", "max_abs", "vacuous", "condition", "condition_value", "condition_holds"]
    rows = [[b[k] for k in header] for b in blocks]
    return Outcome({"blocks": blocks, "points": len(pts), "tolerance": tol}, verdicts,
                   {"blocks": (header, rows)})


def cmd_graph(sys, cfg, args) -> Outcome:
    if sys.name != "skew_graph":
        raise ArgumentError("graph works on the skew_graph system")
    A = sys.params["A"]
    d = len(A)
    rng = np.random.default_rng(cfg.seed)
    theta = rng.uniform(0.0, 1.0, size=(cfg.samples, d))
    tol = cfg.tolerances["check"]
    results, verdicts, tables = {}, {}, {}
    for side, forcing in (("s", "a_s"), ("u", "a_u")):
        g = sys.extras[f"graph_{side}"]
        inv = manifolds.graph_invariance_residual(A, g, sys.extras[forcing], theta)
        reg = manifolds.regularity_estimate(g, A)
        results[side] = {"invariance_residual": inv, "fixed_point_gap": g.fixed_point_gap, "terms": g.terms,
                         "tail_bound": g.tail_bound, "coefficients": len(g.coeffs), "regularity": reg.to_dict()}
        verdicts[f"invariance_{side}"] = inv <= tol
        verdicts[f"fixed_point_{side}"] = g.fixed_point_gap <= tol
        tables[f"graph_{side}"] = (_coords("k", d) + ["real", "imag"], g.csv_rows())
    return Outcome(results, verdicts, tables)


def cmd_fiber(sys, cfg, args) -> Outcome:
    x = _point(args.point, sys)
    fb = manifolds.local_fiber(sys, x, args.side, length=args.length, tol=cfg.tolerances["fiber"],
                               c_max=args.c_max)
    c, d = manifolds.verify_fiber(sys, fb, args.c_max)
    rows = list(csv.reader(io.StringIO(fb.to_csv())))
    results = {"footpoint": fb.footpoint, "side": fb.side, "points": len(fb.points), "C": c, "D": d,
               "lam": fb.lam, "mu": fb.mu, "horizon": fb.horizon, "refined": fb.refined, "c_max": args.c_max}
    return Outcome(results, {"contract": c <= args.c_max}, {"fiber": (rows[0], rows[1:])})


def _convergence_patch(sys):
    """Patch of the stable manifold and parameter samples for the convergence fit."""
    model = _need_model(sys)
    if sys.name == "coupled_test":
        return (lambda c: scattering.stable_patch_point(sys, c, 1e-2)), [[0.01, 0.3], [-0.05, 0.2]]
    x = _default_point(sys)
    s = model.stable(x).sum(axis=-1)
    s = s / np.linalg.norm(s)
    tang = []
    for i in model.center_idx:
        e = np.zeros(sys.dim)
        e[i] = 1.0
        tang.append(e + 0.3 * s)
    grid = [list(c) for c in itertools.product((-0.5, 0.5), repeat=len(tang))]
    return manifolds.affine_patch(x, tang), grid


def cmd_converge(sys, cfg, args) -> Outcome:
    if not sys.rates:
        raise ArgumentError(f"system {sys.name!r} declares no rates")
    patch, params = _convergence_patch(sys)
    fit = manifolds.channel_convergence(sys, patch, params, n_max=args.n)
    target = sys.rates["lambda_plus"] * sys.rates.get("mu_minus", 1.0)
    rel = abs(fit.c1.rate - target) / target
    tol = cfg.tolerances["fit"]
    n = len(fit.c0.distances)
    rows = [[k, fit.c0.distances[k], fit.c1.distances[k] if k < len(fit.c1.distances) else ""] for k in range(n)]
    return Outcome({"fits": fit.to_dict(), "target_rate": target, "c1_relative_error": rel, "tolerance": tol},
                   {"c1_rate": rel <= tol}, {"distances": (["n", "c0", "c1"], rows)})


def _grid(sys, n: int) -> np.ndarray:
    if sys.name != "coupled_test":
        raise ArgumentError("channel sample grids are built for coupled_test only")
    return acceptance.scattering_samples(n)


def cmd_scatter(sys, cfg, args) -> Outcome:
    ch = scattering.coupled_channel(sys)
    samples = scattering.displacement_field(sys, _grid(sys, args.grid), ch)
    tol = cfg.tolerances["check"]
    worst = max(max(s.err_minus, s.err_plus) for s in samples)
    eqv = max(scattering.equivariance_residual(sys, samples[0].y, sign, cfg.tolerances["wave"]) for sign in (1, -1))
    results = {"channel": ch.seed.to_dict(), "samples": len(samples), "footpoint_error": worst,
               "equivariance": eqv, "tolerance": tol}
    verdicts = {"footpoint_error": worst <= tol, "equivariance": eqv <= 10 * cfg.tolerances["wave"]}
    if args.symplecticity:
        pts = np.array([s.x_minus for s in samples])
        sym = scattering.symplecticity_residual_S(sys, pts, ch)
        results["symplecticity"] = sym["residual"]
        verdicts["symplecticity"] = sym["residual"] <= tol
    d = sys.dim
    header = _coords("x_minus", d) + _coords("s", d) + ["err_minus", "err_plus", "newton_residual"]
    rows = [[*s.x_minus, *s.x_plus, s.err_minus, s.err_plus, s.newton_residual] for s in samples]
    return Outcome(results, verdicts, {"displacement": (header, rows)}, [s.to_dict() for s in samples])


def cmd_primitive(sys, cfg, args) -> Outcome:
    ch = scattering.coupled_channel(sys)
    y = ch.seed.point if args.point is None else _point(args.point, sys)
    gauge = actions.convergent_gauge(sys, ch) if args.gauge else None
    tol = cfg.tolerances["series"]
    n_values = range(1, args.n + 1)
    results, verdicts, tables = {"gauge": bool(args.gauge), "tolerance": tol}, {}, {}
    for sign, name in ((1, "plus"), (-1, "minus")):
        ser = actions.primitive_wave(sys, y, sign, gauge=gauge, n_values=n_values)
        results[name] = ser.to_dict()
        verdicts[f"series_{name}"] = ser.spread <= tol
        tables[f"series_{name}"] = (["N", "boundary", "partial_sum", "value"], ser.csv_rows())
    if args.grid:
        d = sys.dim
        rows, worst = [], 0.0
        for x in _grid(sys, args.grid):
            ps = actions.primitive_scattering(sys, x, ch, gauge=gauge)
            worst = max(worst, ps.agreement)
            rows.append([*ps.x_minus, ps.value, ps.expanded, ps.agreement])
        tables["scattering_primitive"] = (_coords("x_minus", d) + ["value", "expanded", "agreement"], rows)
        results["scattering_primitive_agreement"] = worst
        verdicts["scattering_primitive"] = worst <= tol
    return Outcome(results, verdicts, tables)


def _matrix(dim: int, text: str):
    try:
        vals = [int(v) for v in text.replace(",", " ").split()]
    except ValueError as exc:
        raise SchemaError(f"--matrix expects integers, got {text!r}") from exc
    if dim < 1 or len(vals) != dim * dim:
        raise SchemaError(f"--matrix needs {dim * dim} integers for --dim {dim}, got {len(vals)}")
    return tuple(tuple(vals[i * dim:(i + 1) * dim]) for i in range(dim))


def cmd_cohomology(sys, cfg, args) -> Outcome:
    a = _matrix(args.dim, args.matrix)
    aut = topology.TorusAutomorphism(a)
    act = topology.wedge_square(aut)
    adm = topology.admissible_factors(aut)
    spec_res = topology.spectrum_law_residual(aut)
    det_law = topology.determinant_law_holds(aut)
    results = {"matrix": a, "wedge_square": act.matrix, "pairs": act.pairs, "charpoly": act.charpoly,
               "spectrum": act.spectrum, "admissible": adm.to_dict(), "determinant": topology.int_det(a),
               "spectrum_law_residual": spec_res, "determinant_law": det_law}
    header = [f"{i}{j}" for i, j in act.pairs]
    return Outcome(results, {"determinant_law": det_law, "spectrum_law": spec_res <= cfg.tolerances["check"]},
                   {"wedge_square": (header, [list(r) for r in act.matrix])})


def cmd_suite(sys, cfg, args) -> Outcome:
    numbers = sorted(acceptance.CRITERIA) if not args.criteria else _criteria(args.criteria)
    res = acceptance.run(numbers, echo=lambda line: print(line, file=_sys.stderr, flush=True))
    # runtimes vary between runs, so they stay out of the reproducible payload
    crit = []
    for r in res:
        d = r.to_dict()
        d.pop("runtime")
        crit.append(d)
    rows = [[r.number, r.name, r.passed] for r in res]
    return Outcome({"criteria": crit}, {f"criterion_{r.number}": r.passed for r in res},
                   {"criteria": (["number", "name", "passed"], rows)})


def _criteria(text: str) -> list[int]:
    try:
        nums = [int(v) for v in text.replace(",", " ").split()]
    except ValueError as exc:
        raise SchemaError(f"--criteria expects integers, got {text!r}") from exc
    bad = [n for n in nums if n not in acceptance.CRITERIA]
    if bad:
        raise SchemaError(f"unknown criteria {bad}; choose from {sorted(acceptance.CRITERIA)}")
    return nums


# --------------------------------------------------------------------------
# parser


COMMANDS = {
    "check-conformal": (cmd_check_conformal, "conformality residual on samples of the working box",
                        "residuals.csv: x0..x{d-1}, residual"),
    "exactness": (cmd_exactness, "pointwise exactness residual and loop periods of the action form",
                  "periods.csv: loop, period"),
    "rates": (cmd_rates, "rate report along the declared bundles",
              "log_growth.csv: rate, basis_vector, n, log_growth"),
    "pairing": (cmd_pairing, "pairing residuals and rate conditions", "rates.csv: rate, value"),
    "vanishing": (cmd_vanishing, "two-form on bundle blocks at points of the manifold",
                  "blocks.csv: block, max_abs, vacuous, condition, condition_value, condition_holds"),
    "graph": (cmd_graph, "invariant graphs of the skew_graph system",
              "graph_s.csv, graph_u.csv: k0..k{d-1}, real, imag"),
    "fiber": (cmd_fiber, "local strong fiber with contract certificates",
              "fiber.csv: s, z0..z{d-1}, certificate, C, D"),
    "converge": (cmd_converge, "distance of an iterated stable patch to the manifold",
                 "distances.csv: n, c0, c1"),
    "scatter": (cmd_scatter, "scattering map samples on the homoclinic channel",
                "displacement.csv: x_minus0.., s0.., err_minus, err_plus, newton_residual; scatter.jsonl"),
    "primitive": (cmd_primitive, "primitive series against the truncation depth",
                  "series_plus.csv, series_minus.csv: N, boundary, partial_sum, value; "
                  "scattering_primitive.csv: x_minus0.., value, expanded, agreement"),
    "cohomology": (cmd_cohomology, "action of a torus automorphism on second cohomology",
                   "wedge_square.csv: one column per pair ij"),
    "suite": (cmd_suite, "acceptance battery", "criteria.csv: number, name, passed"),
}

NO_SYSTEM = {"cohomology", "suite"}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="configuration file")
    p.add_argument("--system", help=f"registered system: {', '.join(registry_names())}, or custom")
    p.add_argument("--param", action="append", default=[], metavar="K=V", help="system parameter (repeatable)")
    for key in DEFAULT_TOLERANCES:
        p.add_argument(f"--tol-{key}", type=float, dest=f"tol_{key}", metavar="TOL",
                       help=f"{key} tolerance (default {DEFAULT_TOLERANCES[key]:g})")
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int, help="sample count")
    p.add_argument("--out", metavar="DIR", help="write artifacts to DIR instead of stdout")
    p.add_argument("--format", choices=FORMATS, help="artifact format (default json)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="confsym", description="Checks for conformally symplectic maps.")
    sub = parser.add_subparsers(dest="command", required=True)
    ps = {}
    for name, (_, summary, columns) in COMMANDS.items():
        tables = "\n".join(f"  {t}" for t in columns.split("; "))
        epilog = f"CSV tables (written as <command>_<table>.csv under --out):\n{tables}"
        ps[name] = sub.add_parser(name, help=summary, description=summary, epilog=epilog,
                                  formatter_class=argparse.RawDescriptionHelpFormatter)
        _common(ps[name])
    for name in ("rates", "pairing", "fiber"):
        ps[name].add_argument("--point", help="phase point, comma or space separated")
    for name, default in (("rates", rates.DEFAULT_N), ("pairing", rates.DEFAULT_N), ("converge", 30),
                          ("primitive", 20)):
        ps[name].add_argument("-n", type=int, default=default, help=f"horizon (default {default})")
    ps["pairing"].add_argument("--declared", action="store_true", help="use the declared rates")
    ps["vanishing"].add_argument("--points", type=int, default=5, help="manifold points (default 5)")
    ps["fiber"].add_argument("--side", choices=("s", "u"), default="s")
    ps["fiber"].add_argument("--length", type=float, default=0.05)
    ps["fiber"].add_argument("--c-max", type=float, default=2.0, dest="c_max")
    ps["scatter"].add_argument("--grid", type=int, default=3, help="samples per side of the channel grid")
    ps["scatter"].add_argument("--symplecticity", action="store_true", help="also check symplecticity")
    ps["primitive"].add_argument("--point", help="point of the channel (default: the channel seed)")
    ps["primitive"].add_argument("--gauge", action="store_true", help="apply the convergent gauge")
    ps["primitive"].add_argument("--grid", type=int, default=0, help="samples per side for the scattering primitive")
    ps["cohomology"].add_argument("--dim", type=int, required=True)
    ps["cohomology"].add_argument("--matrix", required=True, help="row-major integers")
    ps["suite"].add_argument("--criteria", help="subset of criterion numbers")
    return parser


def resolve_config(args) -> RunConfig:
    """Config file (if any) overridden by command-line flags."""
    cfg = load(args.config) if args.config else RunConfig()
    if args.system:
        cfg.system = args.system
    for item in args.param:
        if "=" not in item:
            raise SchemaError(f"--param expects K=V, got {item!r}")
        k, v = item.split("=", 1)
        cfg.params[k.strip()] = parse_value(v)
    for key in DEFAULT_TOLERANCES:
        val = getattr(args, f"tol_{key}")
        if val is not None:
            cfg.tolerances[key] = val
    if args.seed is not None:
        cfg.seed = args.seed
    if args.samples is not None:
        cfg.samples = args.samples
    if args.out:
        cfg.out_dir = args.out
    if args.format:
        cfg.fmt = args.format
    return cfg.validate()


def emit(command: str, cfg: RunConfig, out: Outcome, stream=None) -> None:
    stream = stream or _sys.stdout
    payload = {"format_version": FORMAT_VERSION, "command": command, "config": cfg.to_dict(),
               "results": out.results, "verdicts": out.verdicts, "passed": out.passed}
    want_json = cfg.fmt in ("json", "both")
    want_csv = cfg.fmt in ("csv", "both")
    if cfg.out_dir:
        root = Path(cfg.out_dir)
        root.mkdir(parents=True, exist_ok=True)
        stem = command.replace("-", "_")
        if want_json:
            (root / f"{stem}.json").write_text(dumps(payload))
            if out.records:
                (root / f"{stem}.jsonl").write_text(
                    "".join(json.dumps(_plain(r), sort_keys=True) + "\n" for r in out.records))
        if want_csv:
            for name, (header, rows) in out.tables.items():
                (root / f"{stem}_{name}.csv").write_text(table_csv(header, rows))
        return
    if want_json:
        stream.write(dumps(payload))
    if want_csv:
        for name, (header, rows) in out.tables.items():
            stream.write(f"# {name}\n{table_csv(header, rows)}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    func = COMMANDS[args.command][0]
    try:
        cfg = resolve_config(args)
        system = None if args.command in NO_SYSTEM else build_system(cfg)
        out = func(system, cfg, args)
    except (SchemaError, ArgumentError, ConstructionError) as exc:
        print(f"confsym {args.command}: invalid input: {exc}", file=_sys.stderr)
        return EXIT_INPUT
    except ConfsymError as exc:
        print(f"confsym {args.command}: check failed: {type(exc).__name__}: {exc}", file=_sys.stderr)
        return EXIT_FAIL
    emit(args.command, cfg, out)
    if not out.passed:
        print(f"confsym {args.command}: check failed: {', '.join(out.failed())}", file=_sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
