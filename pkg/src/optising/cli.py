"""Command-line surface: generate instances, inspect spectra, solve, run studies.

Commands
--------
gen         write a random weighted graph (rudy + JSON) at a given degree
            or density
decompose   eigenvalue table of an instance, sorted by |eigenvalue|, with
            the truncation error ratio at every K
solve       anneal one instance with a chosen truncation/backend/noise
experiment  run a named study (rmse | prob | noise | trace) from a config
            file and/or flags, writing CSV + JSON reports

All randomness flows from --seed; subsystem streams are derived from it by
fixed labels, so any command rerun with the same inputs reproduces its
outputs byte for byte.  Exit codes: 0 ok, 2 usage, 3 input/config parse
error, 4 guard or parameter violation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import experiments as xp
from .anneal import DEFAULT_ITERS, Schedule, anneal, dump_trace
from .graph import GraphError, GraphFormatError, WeightedGraph, density, gen_density, gen_regular, read_graph, write_graph
from .ising import MatrixFormatError, brute_force_maxcut, from_graph, read_matrix
from .optics import HrvEvaluator, NoiseModel, estimate_span
from .spectral import build_ensemble, eigendecompose, error_ratio, dump_bundle

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_GUARD = 4


class ConfigError(Exception):
    """One or more config problems; collects every message before raising."""

    def __init__(self, messages):
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))


# ---------------------------------------------------------------------------
# Config files: '#' comments, 'key = value' lines.
# ---------------------------------------------------------------------------

def parse_config_text(text: str) -> dict[str, str]:
    raw = {}
    errors = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            errors.append(f"line {lineno}: expected 'key = value', got {stripped!r}")
            continue
        key, value = stripped.split("=", 1)
        key = key.strip()
        if key in raw:
            errors.append(f"line {lineno}: duplicate key {key!r}")
            continue
        raw[key] = value.strip()
    if errors:
        raise ConfigError(errors)
    return raw


def _parse_int(s):
    return int(s)


def _parse_float(s):
    return float(s)


def _parse_str(s):
    return s


def _parse_int_list(s):
    """Comma list of ints; 'a..b' expands to an inclusive range."""
    if isinstance(s, (list, tuple)):
        return [int(v) for v in s]
    out = []
    for part in str(s).split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def _parse_float_list(s):
    if isinstance(s, (list, tuple)):
        return [float(v) for v in s]
    return [float(part.strip()) for part in str(s).split(",")]


_COMMON_SCHEMA = {
    "seed": (_parse_int, 0),
    "jobs": (_parse_int, 1),
    "n": (_parse_int, 20),
    "degree": (_parse_int, None),
    "density": (_parse_float, None),
    "wlow": (_parse_float, 0.0),
    "whigh": (_parse_float, 1.0),
    "instance": (_parse_str, None),
    "instance_format": (_parse_str, None),
}

_STUDY_SCHEMA = {
    "rmse": {
        **_COMMON_SCHEMA,
        "ks": (_parse_int_list, None),
        "samples": (_parse_int, 1000),
        "graph_seeds": (_parse_int, 20),
    },
    "prob": {
        **_COMMON_SCHEMA,
        "ks": (_parse_int_list, None),
        "rates": (_parse_float_list, [0.99, 0.995, 0.999]),
        "iters": (_parse_int, DEFAULT_ITERS),
        "runs": (_parse_int, 200),
        "flip_floor": (_parse_int, 1),
        "t0": (_parse_float, None),
        "span_samples": (_parse_int, 1000),
    },
    "noise": {
        **_COMMON_SCHEMA,
        "k": (_parse_int, None),
        "levels": (_parse_float_list, [0.0, 0.01, 0.02, 0.05]),
        "rate": (_parse_float, 0.995),
        "iters": (_parse_int, DEFAULT_ITERS),
        "runs": (_parse_int, 200),
        "flip_floor": (_parse_int, 1),
        "t0": (_parse_float, None),
        "span_samples": (_parse_int, 1000),
    },
    "trace": {
        **_COMMON_SCHEMA,
        "ks": (_parse_int_list, None),
        "rate": (_parse_float, 0.995),
        "iters": (_parse_int, DEFAULT_ITERS),
        "runs": (_parse_int, 20),
        "flip_floor": (_parse_int, 1),
        "t0": (_parse_float, None),
        "span_samples": (_parse_int, 1000),
    },
}


def resolve_config(study: str, config_path: str | None, overrides: dict) -> dict:
    """Defaults <- config file <- CLI flags, validating everything at once."""
    schema = _STUDY_SCHEMA[study]
    cfg = {key: default for key, (_, default) in schema.items()}
    errors = []

    if config_path is not None:
        try:
            with open(config_path) as fh:
                raw = parse_config_text(fh.read())
        except OSError as exc:
            raise ConfigError([f"cannot read config: {exc}"]) from None
        for key, value in raw.items():
            if key not in schema:
                errors.append(f"unknown config key {key!r}")
                continue
            parser = schema[key][0]
            try:
                cfg[key] = parser(value)
            except ValueError:
                errors.append(f"config key {key!r}: cannot parse {value!r}")

    for key, value in overrides.items():
        if value is None:
            continue
        if key not in schema:
            errors.append(f"option {key!r} does not apply to study {study!r}")
            continue
        parser = schema[key][0]
        try:
            cfg[key] = parser(value)
        except ValueError:
            errors.append(f"option {key!r}: cannot parse {value!r}")

    if cfg.get("instance") is None:
        if (cfg.get("degree") is None) == (cfg.get("density") is None):
            errors.append("specify exactly one of degree/density (or an instance path)")
    if errors:
        raise ConfigError(errors)
    return cfg


def _load_instance(cfg) -> WeightedGraph:
    if cfg.get("instance"):
        fmt = cfg.get("instance_format") or _format_from_path(cfg["instance"])
        return read_graph(cfg["instance"], fmt)
    seed = xp.derive_seed(cfg["seed"], xp.LBL_GRAPH, 0)
    if cfg.get("degree") is not None:
        return gen_regular(cfg["n"], cfg["degree"], cfg["wlow"], cfg["whigh"], seed=seed)
    return gen_density(cfg["n"], cfg["density"], cfg["wlow"], cfg["whigh"], seed=seed)


def _format_from_path(path: str) -> str:
    return "json" if path.endswith(".json") else "rudy"


def _schedule(cfg, g, bundle, rate, K_for_span=None) -> Schedule:
    """Schedule with t0 defaulting to the estimated readout span."""
    t0 = cfg.get("t0")
    if t0 is None:
        K = K_for_span if K_for_span is not None else g.n
        ens = build_ensemble(bundle, K)
        rng = np.random.default_rng(np.random.SeedSequence([cfg["seed"], xp.LBL_SPAN, K]))
        t0 = estimate_span(ens, samples=cfg.get("span_samples", 1000), rng=rng)
    return Schedule(t0=float(t0), rate=rate, iters=cfg["iters"], flip_floor=cfg["flip_floor"])


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_gen(args) -> int:
    if (args.degree is None) == (args.density is None):
        print("gen: specify exactly one of --degree or --density", file=sys.stderr)
        return EXIT_USAGE
    if args.degree is not None:
        g = gen_regular(args.n, args.degree, args.wlow, args.whigh, seed=args.seed)
    else:
        g = gen_density(args.n, args.density, args.wlow, args.whigh, seed=args.seed)
    os.makedirs(args.out, exist_ok=True)
    rudy_path = os.path.join(args.out, f"{args.name}.rud")
    json_path = os.path.join(args.out, f"{args.name}.json")
    write_graph(g, rudy_path, "rudy")
    write_graph(g, json_path, "json")
    print(f"n={g.n} edges={g.num_edges} density={density(g)!r}")
    print(f"wrote {rudy_path}")
    print(f"wrote {json_path}")
    return EXIT_OK


def cmd_decompose(args) -> int:
    if (args.graph is None) == (args.matrix is None):
        print("decompose: specify exactly one of --graph or --matrix", file=sys.stderr)
        return EXIT_USAGE
    if args.graph is not None:
        fmt = args.format or _format_from_path(args.graph)
        m = from_graph(read_graph(args.graph, fmt))
    else:
        fmt = args.format or ("csv" if args.matrix.endswith(".csv") else "json")
        m = read_matrix(args.matrix, fmt)
    b = eigendecompose(m)
    rows = []
    print(f"{'rank':>4} {'eigenvalue':>24} {'sign':>4} {'error_ratio_at_K':>20}")
    for rank, idx in enumerate(b.order, start=1):
        mu = error_ratio(b, rank)
        rows.append((rank, float(b.lam[idx]), int(b.signs[idx]), mu))
        print(f"{rank:>4} {float(b.lam[idx])!r:>24} {int(b.signs[idx]):>4} {mu!r:>20}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        xp.write_csv(os.path.join(args.out, "spectrum.csv"),
                     ["rank", "eigenvalue", "sign", "error_ratio_at_K"], rows)
    if args.dump_bundle:
        dump_bundle(b, args.dump_bundle)
    return EXIT_OK


def cmd_solve(args) -> int:
    fmt = args.format or _format_from_path(args.graph)
    g = read_graph(args.graph, fmt)
    m = from_graph(g)
    b = eigendecompose(m)
    K = args.k if args.k is not None else g.n
    ens = build_ensemble(b, K, P=args.p)

    span = None
    if args.t0 is None or args.noise_level > 0:
        rng = np.random.default_rng(np.random.SeedSequence([args.seed, xp.LBL_SPAN, K]))
        span = estimate_span(ens, samples=args.span_samples, rng=rng)
    noise = (NoiseModel(level=args.noise_level, sigma=args.noise_level * span,
                        span_samples=args.span_samples)
             if args.noise_level > 0 else None)
    evaluator = HrvEvaluator(ens, backend=args.backend, noise=noise)
    t0 = args.t0 if args.t0 is not None else span
    schedule = Schedule(t0=float(t0), rate=args.rate, iters=args.iters,
                        flip_floor=args.flip_floor)

    trace = anneal(evaluator, g, schedule, args.seed)
    bits = "".join("+" if v > 0 else "-" for v in trace.final_state)
    print(f"final_cut={trace.final_cut!r}")
    print(f"final_hrv={trace.final_hrv!r}")
    print(f"state={bits}")
    if args.oracle:
        best, _ = brute_force_maxcut(g)
        print(f"optimal_cut={best!r}")
        print(f"optimal_match={int(abs(trace.final_cut - best) <= 1e-9)}")
    if args.trace_out:
        dump_trace(trace, args.trace_out)
        print(f"wrote {args.trace_out}")
    return EXIT_OK


def _experiment_overrides(args) -> dict:
    keys = ("seed", "jobs", "n", "degree", "density", "wlow", "whigh", "instance",
            "instance_format", "ks", "samples", "graph_seeds", "rates", "iters",
            "runs", "flip_floor", "t0", "span_samples", "k", "levels", "rate")
    return {k: getattr(args, k, None) for k in keys}


def cmd_experiment(args) -> int:
    cfg = resolve_config(args.study, args.config, _experiment_overrides(args))
    os.makedirs(args.out, exist_ok=True)
    runner = {"rmse": _run_rmse, "prob": _run_prob, "noise": _run_noise,
              "trace": _run_trace}[args.study]
    written = runner(cfg, args.out)
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def _run_rmse(cfg, out):
    n = cfg["n"]
    ks = cfg["ks"] if cfg["ks"] is not None else list(range(1, n + 1))
    if cfg.get("instance"):
        g = _load_instance(cfg)
        rep = xp.rmse_vs_k(from_graph(g), ks, cfg["samples"], cfg["seed"])
        mean_rmse = np.array([rep.by_k(k).rmse for k in ks])
        mean_rel = np.array([rep.by_k(k).rmse_relative for k in ks])
        mean_r2 = np.array([rep.by_k(k).r2 for k in ks])
    else:
        ks, mean_rmse, mean_rel, mean_r2 = xp.rmse_curve_averaged(
            n, ks, cfg["samples"], cfg["graph_seeds"], cfg["seed"],
            degree=cfg["degree"], density=cfg["density"],
            weight_low=cfg["wlow"], weight_high=cfg["whigh"])

    rows = [(k, r, rel, r2) for k, r, rel, r2 in zip(ks, mean_rmse, mean_rel, mean_r2)]
    csv_path = os.path.join(out, "rmse.csv")
    xp.write_csv(csv_path, ["K", "rmse", "rmse_relative", "fit_r2"], rows)

    plot_path = os.path.join(out, "rmse_vs_k_over_n.dat")
    xp.write_csv(plot_path, ["k_over_n", "rmse"],
                 [(k / n, r) for k, r in zip(ks, mean_rmse)])

    results = {"ks": list(ks), "rmse": list(mean_rmse), "rmse_relative": list(mean_rel),
               "fit_r2": list(mean_r2)}
    try:
        fit = xp.fit_exponential([(k / n, r) for k, r in zip(ks, mean_rmse)])
        results["exp_fit"] = {"A": fit.A, "B": fit.B, "D": fit.D, "r2": fit.r2,
                              "decaying": fit.decaying}
    except ValueError:
        results["exp_fit"] = None
    json_path = os.path.join(out, "rmse.json")
    xp.write_json_summary(json_path, {"study": "rmse", **cfg}, results)
    return [csv_path, plot_path, json_path]


def _run_prob(cfg, out):
    g = _load_instance(cfg)
    ks = cfg["ks"] if cfg["ks"] is not None else list(range(1, g.n + 1))
    b = eigendecompose(from_graph(g))
    schedules = [_schedule(cfg, g, b, rate) for rate in cfg["rates"]]
    table = xp.probability_vs_k(g, ks, schedules, cfg["runs"], cfg["seed"], jobs=cfg["jobs"])

    rows = [(c.schedule_index, c.rate, c.K, c.runs, c.hits, c.probability,
             c.wilson_low, c.wilson_high, c.is_reference) for c in table.cells]
    csv_path = os.path.join(out, "prob.csv")
    xp.write_csv(csv_path, ["schedule", "rate", "K", "runs", "hits", "probability",
                            "wilson_low", "wilson_high", "is_reference"], rows)
    written = [csv_path]
    for si, s in enumerate(schedules):
        plot = os.path.join(out, f"prob_schedule{si}.dat")
        xp.write_csv(plot, ["K", "probability"],
                     [(c.K, c.probability) for c in table.cells if c.schedule_index == si])
        written.append(plot)
    json_path = os.path.join(out, "prob.json")
    results = {"optimum": table.optimum,
               "schedules": [{"t0": s.t0, "rate": s.rate, "iters": s.iters,
                              "flip_floor": s.flip_floor} for s in schedules],
               "cells": [vars(c) for c in table.cells]}
    xp.write_json_summary(json_path, {"study": "prob", **cfg}, results)
    written.append(json_path)
    return written


def _run_noise(cfg, out):
    g = _load_instance(cfg)
    K = cfg["k"] if cfg["k"] is not None else g.n
    b = eigendecompose(from_graph(g))
    schedule = _schedule(cfg, g, b, cfg["rate"], K_for_span=K)
    table = xp.noise_sweep(g, K, cfg["levels"], schedule, cfg["runs"], cfg["seed"],
                           span_samples=cfg["span_samples"], jobs=cfg["jobs"])
    rows = [(c.level, c.sigma, c.K, c.runs, c.hits, c.probability,
             c.wilson_low, c.wilson_high) for c in table.cells]
    csv_path = os.path.join(out, "noise.csv")
    xp.write_csv(csv_path, ["level", "sigma", "K", "runs", "hits", "probability",
                            "wilson_low", "wilson_high"], rows)
    plot_path = os.path.join(out, "prob_vs_noise.dat")
    xp.write_csv(plot_path, ["level", "probability"],
                 [(c.level, c.probability) for c in table.cells])
    json_path = os.path.join(out, "noise.json")
    results = {"optimum": table.optimum, "span": table.span, "K": table.K,
               "schedule": {"t0": schedule.t0, "rate": schedule.rate,
                            "iters": schedule.iters, "flip_floor": schedule.flip_floor},
               "cells": [vars(c) for c in table.cells]}
    xp.write_json_summary(json_path, {"study": "noise", **cfg}, results)
    return [csv_path, plot_path, json_path]


def _run_trace(cfg, out):
    g = _load_instance(cfg)
    ks = cfg["ks"] if cfg["ks"] is not None else [g.n]
    b = eigendecompose(from_graph(g))
    schedule = _schedule(cfg, g, b, cfg["rate"])
    study = xp.anneal_trace_study(g, ks, schedule, cfg["runs"], cfg["seed"])
    written = []
    for K in study.ks:
        path = os.path.join(out, f"trace_k{K}.csv")
        xp.write_csv(path, ["iter", "mean_hrv", "mean_cut"],
                     [(i, study.mean_hrv[K][i], study.mean_cut[K][i])
                      for i in range(schedule.iters)])
        written.append(path)
    json_path = os.path.join(out, "trace.json")
    results = {"ks": study.ks,
               "schedule": {"t0": schedule.t0, "rate": schedule.rate,
                            "iters": schedule.iters, "flip_floor": schedule.flip_floor},
               "final_hrv_mean": study.final_hrv_mean,
               "final_hrv_std": study.final_hrv_std,
               "final_cut_mean": study.final_cut_mean,
               "final_cut_std": study.final_cut_std}
    xp.write_json_summary(json_path, {"study": "trace", **cfg}, results)
    written.append(json_path)
    return written


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="optising", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random weighted graph")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--degree", type=int)
    p.add_argument("--density", type=float)
    p.add_argument("--wlow", type=float, default=0.0)
    p.add_argument("--whigh", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.add_argument("--name", default="graph")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("decompose", help="eigenvalue table with truncation error ratios")
    p.add_argument("--graph")
    p.add_argument("--matrix")
    p.add_argument("--format", choices=["rudy", "json", "csv"])
    p.add_argument("--out")
    p.add_argument("--dump-bundle")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("solve", help="anneal one Max-cut instance")
    p.add_argument("--graph", required=True)
    p.add_argument("--format", choices=["rudy", "json"])
    p.add_argument("--k", type=int)
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--backend", choices=["analytic", "field"], default="analytic")
    p.add_argument("--noise-level", type=float, default=0.0)
    p.add_argument("--rate", type=float, default=0.995)
    p.add_argument("--iters", type=int, default=DEFAULT_ITERS)
    p.add_argument("--t0", type=float)
    p.add_argument("--flip-floor", type=int, default=1)
    p.add_argument("--span-samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--oracle", action="store_true")
    p.add_argument("--trace-out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("experiment", help="run a study and write reports")
    p.add_argument("study", choices=["rmse", "prob", "noise", "trace"])
    p.add_argument("--config")
    p.add_argument("--out", default="reports")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--degree", type=int)
    p.add_argument("--density", type=float)
    p.add_argument("--wlow", type=float)
    p.add_argument("--whigh", type=float)
    p.add_argument("--instance")
    p.add_argument("--instance-format", dest="instance_format", choices=["rudy", "json"])
    p.add_argument("--ks")
    p.add_argument("--samples", type=int)
    p.add_argument("--graph-seeds", dest="graph_seeds", type=int)
    p.add_argument("--rates")
    p.add_argument("--iters", type=int)
    p.add_argument("--runs", type=int)
    p.add_argument("--flip-floor", dest="flip_floor", type=int)
    p.add_argument("--t0", type=float)
    p.add_argument("--span-samples", dest="span_samples", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--levels")
    p.add_argument("--rate", type=float)
    p.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for msg in exc.messages:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_PARSE
    except (GraphFormatError, MatrixFormatError, json.JSONDecodeError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (GraphError, ValueError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
