"""Command-line front end: ``recomb forward|coeffs|trees|simulate|compare``.

Exit codes: 0 ok, 1 usage, 2 validation, 3 feasibility.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .ancestry import run_ancestry
from .art import (ART_MAX_LINKS, TreeTopology, coefficients_via_art, enumerate_topologies,
                  topology_from_cut_times, tree_probability, tree_terms)
from .config import ExperimentConfig, metadata
from .errors import FeasibilityError, RecombError, ValidationError
from .forward import CoefficientTable, coefficients_by_recursion, evolve, reconstruct
from .genome import GenomeLayout, link_label, linkset_from_json, linkset_to_json, subsets
from .measures import distribution_to_json
from .rng import stream, worker_count
from .segmentation import ORACLE_MAX_LINKS, exact_table, mc_distribution, mc_trajectories
from .wright_fisher import SimulationConfig, mse_vs_n, run_wf

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_FEASIBILITY = 0, 1, 2, 3
RECON_TOL = 1e-10
COMPARE_TOL = 1e-10


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# -- output helpers ------------------------------------------------------------

def _emit(text: str, out: str | None):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)


def _dump(obj, out: str | None):
    _emit(json.dumps(obj, indent=2) + "\n", out)


def _config(args) -> ExperimentConfig:
    if args.config is None:
        raise UsageError("--config is required")
    cfg = ExperimentConfig.load(args.config)
    overrides = {}
    for name, attr in (("steps", "t"), ("seed", "seed"), ("replicates", "replicates"),
                       ("pop_size", "pop_size")):
        v = getattr(args, name, None)
        if v is not None:
            overrides[attr] = v
    return replace(cfg, **overrides) if overrides else cfg


def _int_count(text: str) -> int:
    """Accept counts like ``1e6`` as well as plain integers."""
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if v != int(v) or v < 0:
        raise argparse.ArgumentTypeError(f"not a nonnegative integer: {text!r}")
    return int(v)


def _methods(text: str) -> list[str]:
    return [m.strip() for m in text.split(",") if m.strip()]


def _table(layout: GenomeLayout, t: int, method: str, cfg: ExperimentConfig, workers):
    """``(table, stderr or None)`` for one method."""
    if method == "recursion":
        return coefficients_by_recursion(layout, t), None
    if method == "art":
        return coefficients_via_art(layout, t), None
    if method == "oracle":
        if layout.n_links > ORACLE_MAX_LINKS:
            raise FeasibilityError(f"oracle supports at most {ORACLE_MAX_LINKS} links")
        return exact_table(layout, t), None
    if method == "mc":
        freq, se = mc_distribution(layout, t, cfg.replicates, cfg.seed, workers)
        return CoefficientTable(layout, t, freq), se
    raise ValidationError(f"unknown method {method!r}")


# -- commands ------------------------------------------------------------------

def cmd_forward(args) -> int:
    cfg = _config(args)
    layout, p0 = cfg.layout, cfg.initial()
    path = evolve(p0, layout, cfg.t, trajectory=True)
    report = {"meta": metadata(cfg, command="forward"), "t": cfg.t,
              "trajectory": [distribution_to_json(p) for p in path]}
    status = EXIT_OK
    if args.check_reconstruction:
        tables = coefficients_by_recursion(layout, cfg.t, trajectory=True)
        gaps = [reconstruct(p0, tab).sup_distance(p) for tab, p in zip(tables, path)]
        report["reconstruction"] = {"max_sup_gap": max(gaps), "per_t": gaps, "tolerance": RECON_TOL}
        if max(gaps) > RECON_TOL:
            status = EXIT_VALIDATION
    _dump(report, args.out)
    return status


def cmd_coeffs(args) -> int:
    cfg = _config(args)
    layout, t = cfg.layout, cfg.t
    workers = worker_count(args.threads)
    if args.compare:
        methods = _methods(args.compare)
        if len(methods) < 2:
            raise UsageError("--compare needs at least two methods")
        report = {"meta": metadata(cfg, command="coeffs"), "t": t,
                  **compare_tables(layout, t, methods, cfg, workers)}
        _dump(report, args.out)
        return EXIT_OK if report["ok"] else EXIT_VALIDATION
    table, se = _table(layout, t, args.method, cfg, workers)
    out = {"meta": metadata(cfg, command="coeffs", method=args.method), **table.to_json(se)}
    if se is not None and layout.n_links <= ORACLE_MAX_LINKS:
        # Monte Carlo tables carry their deviation from the oracle next to 3 standard errors
        exact = exact_table(layout, t).values
        for G, e in enumerate(out["entries"]):
            e["gap"] = float(table.values[G] - exact[G])
            e["three_se"] = float(3 * se[G])
    _dump(out, args.out)
    return EXIT_OK


def compare_tables(layout: GenomeLayout, t: int, methods: list, cfg, workers) -> dict:
    """Pairwise max gaps and per-G diffs between methods at one time."""
    tables = {m: _table(layout, t, m, cfg, workers) for m in methods}
    pairs, ok = [], True
    for i, a in enumerate(methods):
        for b in methods[i + 1:]:
            va, sa = tables[a][0].as_float(), tables[a][1]
            vb, sb = tables[b][0].as_float(), tables[b][1]
            diff = va - vb
            se = np.sqrt((sa if sa is not None else 0) ** 2 + (sb if sb is not None else 0) ** 2)
            stochastic = sa is not None or sb is not None
            per_g = []
            for G in range(len(diff)):
                rec = {"links": linkset_to_json(G), "diff": float(diff[G])}
                if stochastic:
                    rec["three_se"] = float(3 * se[G])
                per_g.append(rec)
            if stochastic:
                pair_ok = bool(np.all(np.abs(diff) <= 3 * se + 1e-15))
            else:
                pair_ok = float(np.max(np.abs(diff))) <= COMPARE_TOL
            ok &= pair_ok
            pairs.append({"methods": [a, b], "max_gap": float(np.max(np.abs(diff))),
                          "ok": pair_ok, "per_G": per_g})
    return {"methods": methods, "ok": ok, "tolerance": COMPARE_TOL, "pairs": pairs,
            "tables": {m: tab.to_json(se) for m, (tab, se) in tables.items()}}


def cmd_trees(args) -> int:
    if args.validate:
        return validate_trajectories(args)
    cfg = _config(args)
    layout, tau = cfg.layout, cfg.t
    if layout.n_links > ART_MAX_LINKS:
        raise FeasibilityError(f"tree enumeration supports at most {ART_MAX_LINKS} links")
    targets = [linkset_from_json(args.links, layout.n_links)] if args.links else list(subsets(layout.full))
    records = []
    for G in sorted(targets):
        for T in enumerate_topologies(G):
            rec = {"links": linkset_to_json(G), "topology": T.to_json(),
                   "probability": tree_probability(layout, T, tau)}
            if args.verbose and not T.is_empty:
                rec["terms"] = [{"H": linkset_to_json(x["H"]), "sign": int(x["sign"]),
                                 "bracket": x["bracket"], "f": x["f"], "value": x["value"]}
                                for x in tree_terms(layout, T, tau)]
            records.append(rec)
    _dump({"meta": metadata(cfg, command="trees"), "tau": tau, "trees": records}, args.out)
    return EXIT_OK


def validate_trajectories(args) -> int:
    """Compare topology frequencies in a segmentation trajectory file with the closed form."""
    try:
        lines = Path(args.validate).read_text().splitlines()
    except OSError as e:
        raise ValidationError(f"cannot read {args.validate}: {e.strerror}") from e
    if not lines:
        raise ValidationError("empty trajectory file")
    try:
        head = json.loads(lines[0])["meta"]
        layout, tau = GenomeLayout.from_rho(head["rho"]), int(head["t"])
        counts: dict = {}
        for line in lines[1:]:
            T = TreeTopology.from_json(json.loads(line)["topology"])
            counts[T] = counts.get(T, 0) + 1
    except (KeyError, TypeError, json.JSONDecodeError) as e:
        raise ValidationError(f"malformed trajectory file: {e}") from e
    R = sum(counts.values())
    if R == 0:
        raise ValidationError("trajectory file has no records")
    if layout.n_links > ART_MAX_LINKS:
        raise FeasibilityError(f"tree enumeration supports at most {ART_MAX_LINKS} links")
    rows = []
    for G in subsets(layout.full):
        for T in enumerate_topologies(G):
            p = tree_probability(layout, T, tau)
            freq = counts.pop(T, 0) / R
            se = np.sqrt(max(p * (1 - p), 0.0) / R)
            rows.append({"topology": T.to_json(), "probability": p, "frequency": freq,
                         "z": float((freq - p) / se) if se > 0 else 0.0})
    if counts:
        raise ValidationError(f"{sum(counts.values())} records have topologies outside the link set")
    worst = max(abs(r["z"]) for r in rows)
    _dump({"meta": head, "replicates": R, "max_abs_z": worst,
           "within_3se": sum(abs(r["z"]) <= 3 for r in rows), "topologies": rows}, args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _config(args)
    return {"wf": simulate_wf, "ancestry": simulate_ancestry,
            "segmentation": simulate_segmentation}[args.target](cfg, args)


def simulate_wf(cfg: ExperimentConfig, args) -> int:
    layout, p0 = cfg.layout, cfg.initial()
    workers = worker_count(args.threads)
    sim = SimulationConfig(cfg.seed, cfg.replicates, cfg.pop_size, cfg.t)
    traj = run_wf(p0, layout, sim, workers)
    buf = io.StringIO()
    buf.write("# " + json.dumps(metadata(cfg, command="simulate wf", N=sim.N), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["replicate", "t", "type_index", "freq"])
    R, T1, X = traj.shape
    for r in range(R):
        for s in range(T1):
            for x in range(X):
                w.writerow([r, s, x, repr(float(traj[r, s, x]))])
    _emit(buf.getvalue(), args.out)
    if args.summary or args.figures:
        sizes = [int(n) for n in args.sizes.split(",")] if args.sizes else [sim.N]
        table = mse_vs_n(p0, layout, cfg.t, sizes, sim.replicates, cfg.seed, workers)
        if args.summary:
            _dump({"meta": metadata(cfg, command="simulate wf"), **table}, args.summary)
        if args.figures:
            from .plotting import mse_vs_n as plot_mse
            plot_mse(table["rows"], table["slope"], Path(args.figures) / "mse_vs_n.png")
    return EXIT_OK


def simulate_ancestry(cfg: ExperimentConfig, args) -> int:
    layout, N = cfg.layout, cfg.pop_size
    if N < 1 or cfg.replicates < 1:
        raise ValidationError("population size and replicates must be >= 1")
    lines = [json.dumps({"meta": metadata(cfg, command="simulate ancestry", N=N,
                                          rho=list(cfg.rho), t=cfg.t)})]
    for r in range(cfg.replicates):
        run = run_ancestry(layout, N, cfg.t, stream(cfg.seed, 0xA5C, r))
        for tau, state in enumerate(run.trajectory):
            lines.append(json.dumps({"run": r, "tau": tau, **state.to_json(),
                                     "coalescence_free": run.coalescence_free}))
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def simulate_segmentation(cfg: ExperimentConfig, args) -> int:
    layout = cfg.layout
    cut = mc_trajectories(layout, cfg.t, cfg.replicates, cfg.seed, worker_count(args.threads))
    lines = [json.dumps({"meta": metadata(cfg, command="simulate segmentation",
                                          rho=list(cfg.rho), t=cfg.t)})]
    for r, row in enumerate(cut):
        times = {link_label(i): int(c) for i, c in enumerate(row) if c >= 0}
        G = sum(1 << i for i, c in enumerate(row) if c >= 0)
        lines.append(json.dumps({"replicate": r, "links": linkset_to_json(G), "cut_times": times,
                                 "topology": topology_from_cut_times(row.tolist()).to_json()}))
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_compare(args) -> int:
    """Exact methods over t = 0..T plus forward reconstruction; JSON report, CSV, optional figures."""
    cfg = _config(args)
    layout, p0 = cfg.layout, cfg.initial()
    workers = worker_count(args.threads)
    methods = _methods(args.methods) if args.methods else [m for m in cfg.methods if m != "mc"]
    if not methods:
        raise UsageError("no methods selected")
    times = list(range(cfg.t + 1))
    values = {m: np.array([_table(layout, s, m, cfg, workers)[0].as_float() for s in times])
              for m in methods}
    gaps = {}
    for i, a in enumerate(methods):
        for b in methods[i + 1:]:
            gaps[f"{a}-{b}"] = np.max(np.abs(values[a] - values[b]), axis=1)
    path = evolve(p0, layout, cfg.t, trajectory=True)
    base = values[methods[0]]
    recon = [reconstruct(p0, CoefficientTable(layout, s, base[s])).sup_distance(path[s]) for s in times]
    worst = max([float(g.max()) for g in gaps.values()] + [max(recon)])
    report = {"meta": metadata(cfg, command="compare"), "methods": methods, "times": times,
              "max_gap": {k: [float(x) for x in v] for k, v in gaps.items()},
              "reconstruction_gap": recon, "worst": worst, "tolerance": COMPARE_TOL,
              "ok": worst <= COMPARE_TOL}
    _dump(report, args.out)
    if args.csv:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "links"] + methods)
        for s in times:
            for G in range(1 << layout.n_links):
                w.writerow([s, " ".join(linkset_to_json(G))] + [repr(float(values[m][s, G])) for m in methods])
        _emit(buf.getvalue(), args.csv)
    if args.figures:
        from . import plotting
        fig_dir = Path(args.figures)
        plotting.coefficient_curves(times, base, fig_dir / "coefficients.png")
        if gaps:
            plotting.method_gaps(times, gaps, fig_dir / "method_gaps.png")
    return EXIT_OK if report["ok"] else EXIT_VALIDATION


# -- parser --------------------------------------------------------------------

def build_parser() -> Parser:
    common = Parser(add_help=False)
    common.add_argument("--config", help="experiment config (JSON)")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--threads", type=int, help="worker threads for Monte Carlo "
                        "(default: RECOMB_THREADS or all cores)")
    common.add_argument("--seed", type=int, help="override the config seed")

    p = Parser(prog="recomb", description="Single-crossover recombination: coefficients, "
               "ancestral trees and simulation.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=Parser)

    f = sub.add_parser("forward", parents=[common], help="deterministic trajectory p_0..p_t")
    f.add_argument("--steps", type=int, help="number of generations (overrides t)")
    f.add_argument("--check-reconstruction", action="store_true",
                   help="compare p_t with sum_G a_G(t) R_G(p_0) at every t")
    f.set_defaults(func=cmd_forward)

    c = sub.add_parser("coeffs", parents=[common], help="coefficient table a_G(t)")
    c.add_argument("--method", default="recursion", choices=["recursion", "art", "oracle", "mc"])
    c.add_argument("--compare", help="comma-separated methods to diff, e.g. recursion,art,oracle")
    c.add_argument("--steps", type=int, help="time t (overrides config)")
    c.add_argument("--replicates", type=_int_count, help="Monte Carlo replicates")
    c.set_defaults(func=cmd_coeffs)

    t = sub.add_parser("trees", parents=[common], help="topology probabilities")
    t.add_argument("--steps", type=int, help="time tau (overrides config)")
    t.add_argument("--links", nargs="+", help="restrict to one link set, e.g. 1/2 3/2")
    t.add_argument("--verbose", action="store_true", help="include the per-H terms")
    t.add_argument("--validate", metavar="FILE",
                   help="check topology frequencies of a `simulate segmentation` file")
    t.set_defaults(func=cmd_trees)

    s = sub.add_parser("simulate", parents=[common], help="stochastic simulation")
    s.add_argument("target", choices=["wf", "ancestry", "segmentation"])
    s.add_argument("--pop-size", type=_int_count, help="population size N")
    s.add_argument("--steps", type=int, help="generations (overrides t)")
    s.add_argument("--replicates", type=_int_count)
    s.add_argument("--summary", help="wf only: JSON summary with the MSE-vs-N table")
    s.add_argument("--sizes", help="wf only: comma-separated N values for the summary")
    s.add_argument("--figures", metavar="DIR", help="wf only: write figures into DIR")
    s.set_defaults(func=cmd_simulate)

    m = sub.add_parser("compare", parents=[common], help="cross-method report over t = 0..T")
    m.add_argument("--steps", type=int, help="horizon T (overrides t)")
    m.add_argument("--methods", help="comma-separated exact methods (default: config methods)")
    m.add_argument("--csv", help="CSV of a_G(t) per method")
    m.add_argument("--figures", metavar="DIR", help="write coefficient and gap figures into DIR")
    m.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except FeasibilityError as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return EXIT_FEASIBILITY
    except (ValidationError, RecombError) as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
