"""
``treedim`` command-line front end.

Subcommands: ``solve``, ``grow``, ``entropy``, ``leafwalk``, ``oracle-check``.
Every flag may also come from a JSON file given with ``--config`` (same key
names as the flags' long form, dashes replaced by underscores); flags win.

Exit codes: 0 success, 1 statistical check failed, 2 usage/validation error.
Replicas run on a thread pool (``--threads`` or ``TREEDIM_THREADS``) and are
merged in replica order, so output bytes do not depend on the thread count.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy import stats

from . import estimators, growth, leafwalk, malthus, oracle

EXIT_OK, EXIT_STAT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    return f"{x:.12g}"


def _json_float(x):
    if isinstance(x, float):
        return float(fmt(x)) if math.isfinite(x) else None
    return x


def _dump_json(obj) -> str:
    def clean(o):
        if isinstance(o, dict):
            return {k: clean(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [clean(v) for v in o]
        if isinstance(o, np.generic):
            o = o.item()
        return _json_float(o)

    return json.dumps(clean(obj), indent=2, sort_keys=False) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for r in rows:
        wr.writerow([fmt(v) for v in r])
    return buf.getvalue()


def _emit(text: str, path: str | None):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


# -- config -----------------------------------------------------------------


def _parse_weights(args) -> malthus.WeightFunction:
    raw = args.w
    if raw is None:
        raise UsageError("--w is required (comma-separated weights)")
    if isinstance(raw, str):
        try:
            vals = [float(v) for v in raw.split(",") if v.strip()]
        except ValueError:
            raise UsageError(f"cannot parse weights {raw!r}")
    else:
        vals = [float(v) for v in raw]
    if args.k is not None and int(args.k) != len(vals):
        raise UsageError(f"--k {args.k} but {len(vals)} weights given")
    if any(not v > 0 for v in vals):
        raise UsageError("weights must be positive")
    try:
        return malthus.WeightFunction(vals)
    except ValueError as exc:
        raise UsageError(str(exc))


def _parse_int_list(raw, name) -> list[int]:
    if isinstance(raw, (list, tuple)):
        return [int(v) for v in raw]
    try:
        return [int(v) for v in str(raw).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"cannot parse {name} {raw!r}")


def _threads(args) -> int:
    t = args.threads
    if t is None:
        t = os.environ.get("TREEDIM_THREADS", 1)
    t = int(t)
    if t < 1:
        raise UsageError("--threads must be >= 1")
    return t


def _replica_map(fn, n_replicas: int, threads: int):
    if threads == 1 or n_replicas == 1:
        return [fn(r) for r in range(n_replicas)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(n_replicas)))


def _require_seed(args):
    if args.seed is None:
        raise UsageError("--seed is required (no wall-clock default)")
    return int(args.seed)


def _require_replicas(args):
    if args.replicas < 1:
        raise UsageError("--replicas must be >= 1")
    return int(args.replicas)


# -- commands ---------------------------------------------------------------


def cmd_solve(args) -> int:
    w = _parse_weights(args)
    if not 0 < args.a < 1:
        raise UsageError("--a must lie in (0, 1)")
    if not args.tol > 0:
        raise UsageError("--tol must be positive")
    rep = malthus.malthus_report(w, a=args.a, tol=args.tol)
    d = rep.as_dict()
    if args.format == "csv":
        _emit(_csv_text(list(d), [list(d.values())]), args.out)
    else:
        _emit(_dump_json(d), args.out)
    return EXIT_OK


def _grow_one(w, args, seed):
    if args.discrete:
        if args.n is None:
            raise UsageError("--discrete needs --n")
        return growth.grow_discrete(w, args.n, seed)
    if args.recursive:
        if args.t is None:
            raise UsageError("--recursive needs --t")
        return growth.grow_recursive_construction(w, args.t, seed)
    if args.n is None and args.t is None:
        raise UsageError("give --n and/or --t")
    return growth.grow_continuous(w, max_time=args.t, max_size=args.n, seed=seed)


def cmd_grow(args) -> int:
    w = _parse_weights(args)
    seed = growth.SeedSpec(_require_seed(args), 0)
    if args.discrete and args.recursive:
        raise UsageError("--discrete and --recursive are exclusive")
    if args.n is not None and args.n < 1:
        raise UsageError("--n must be >= 1")
    if args.t is not None and not args.t > 0:
        raise UsageError("--t must be positive")
    G = _grow_one(w, args, seed)
    _emit(growth.write_tree_csv(G), args.out)
    summary = {
        "generator": G.generator,
        "size": G.size,
        "final_time": G.clock,
        "total_weight": growth.total_weight(G),
        "max_depth": G.max_depth,
        "saturated": G.saturated,
        "seed": seed.base_seed,
    }
    text = _dump_json(summary)
    if args.summary:
        _emit(text, args.summary)
    else:
        sys.stderr.write(text)
    return EXIT_OK


ENTROPY_HEADER = ["replica", "n", "H_n", "h_hat", "coverage", "flagged", "se", "h_closed_form"]


def cmd_entropy(args) -> int:
    w = _parse_weights(args)
    levels = _parse_int_list(args.levels, "--levels")
    if not levels or any(n < 1 for n in levels):
        raise UsageError("levels must be >= 1 (entropy per level is undefined at n=0)")
    h = malthus.entropy_closed_form(w)

    if args.selftest_uniform:
        G = growth.complete_tree(w, max(levels))
        rows = []
        for n in levels:
            est = estimators.entropy_estimate(G, n)
            rows.append(["selftest", n, est.H_n, est.h_hat, est.coverage, 0, None, math.log(w.K)])
        _emit(_csv_text(ENTROPY_HEADER, rows), args.out)
        return EXIT_OK

    base = _require_seed(args)
    R = _require_replicas(args)
    if args.n is None and args.t is None:
        raise UsageError("give --n and/or --t")

    def one(r):
        G = growth.grow_continuous(w, max_time=args.t, max_size=args.n, seed=growth.SeedSpec(base, r))
        out = []
        for n in levels:
            try:
                est = estimators.entropy_estimate(G, n)
            except estimators.EmptyLevelError:
                out.append([r, n, None, None, 0.0, 1])
                continue
            out.append([r, n, est.H_n, est.h_hat, est.coverage, int(est.coverage < args.coverage_min)])
        return out

    per = _replica_map(one, R, _threads(args))
    rows = [row + [None, None] for rs in per for row in rs]
    agg = []
    for n in levels:
        ok = [row for row in rows if row[1] == n and not row[5]]
        flagged = sum(1 for row in rows if row[1] == n and row[5])
        if ok:
            hh = np.array([row[3] for row in ok])
            se = float(hh.std(ddof=1) / math.sqrt(len(hh))) if len(hh) > 1 else math.nan
            agg.append(["aggregate", n, float(np.mean([row[2] for row in ok])), float(hh.mean()),
                        float(np.mean([row[4] for row in ok])), flagged, se, h])
        else:
            agg.append(["aggregate", n, None, None, None, flagged, None, h])
    if args.format == "json":
        keys = ENTROPY_HEADER
        _emit(_dump_json({
            "rows": [dict(zip(keys, r)) for r in rows],
            "aggregate": [dict(zip(keys, r)) for r in agg],
        }), args.out)
    else:
        _emit(_csv_text(ENTROPY_HEADER, rows + agg), args.out)
    return EXIT_OK


LEAFWALK_HEADER = ["replica", "path", "neg_log_delta_over_n", "local_dim"]


def cmd_leafwalk(args) -> int:
    w = _parse_weights(args)
    if args.level < 1:
        raise UsageError("--level must be >= 1")
    if not 0 < args.a < 1:
        raise UsageError("--a must lie in (0, 1)")
    if args.paths < 1:
        raise UsageError("--paths must be >= 1")
    n = args.level
    log_a = math.log(args.a)
    base = _require_seed(args)

    if args.selftest_uniform:
        G = growth.complete_tree(w, n)
        batch = leafwalk.sample_leaf_paths(G, n, args.paths, growth.SeedSpec(base, 0), args.rule)
        v = batch.neg_log_weight_over_n()
        rows = [["selftest", k, v[k], -v[k] / log_a] for k in range(len(v))]
        _emit(_csv_text(LEAFWALK_HEADER, rows), args.out)
        return EXIT_OK

    R = _require_replicas(args)
    if args.n is None and args.t is None:
        raise UsageError("give --n and/or --t")
    lam = malthus.solve_malthusian(w)

    def one(r):
        seed = growth.SeedSpec(base, r)
        G = growth.grow_continuous(w, max_time=args.t, max_size=args.n, seed=seed)
        batch = leafwalk.sample_leaf_paths(G, n, args.paths, seed.child(0), args.rule)
        v = batch.neg_log_weight_over_n()
        X = estimators.theta_hat_many(G, lam, batch.vertices)
        return v, estimators.entropy_estimate(G, n).h_hat, X

    try:
        per = _replica_map(one, R, _threads(args))
    except leafwalk.InsufficientGrowthError as exc:
        raise UsageError(f"{exc}; raise --n")
    except estimators.EmptyLevelError as exc:
        raise UsageError(f"{exc}; raise --n")
    rows = []
    for r, (v, _, _) in enumerate(per):
        rows.extend([r, k, v[k], -v[k] / log_a] for k in range(len(v)))
    _emit(_csv_text(LEAFWALK_HEADER, rows), args.out)

    means = np.array([p[0].mean() for p in per])
    ens = np.array([p[1] for p in per])
    X = np.concatenate([p[2] for p in per])
    half = (n + 1) // 2
    early, late = X[:, 1:half + 1].ravel(), X[:, half + 1:].ravel()
    ks = stats.ks_2samp(early, late) if late.size and early.size else None
    se = float(means.std(ddof=1) / math.sqrt(R)) if R > 1 else math.nan
    h = malthus.entropy_closed_form(w)
    summary = {
        "level": n,
        "a": args.a,
        "rule": args.rule,
        "replicas": R,
        "paths": args.paths,
        "ergodic_entropy_mean": float(means.mean()),
        "ergodic_entropy_se": se,
        "ensemble_entropy_mean": float(ens.mean()),
        "local_dim_mean": float(means.mean()) / -log_a,
        "h_closed_form": h,
        "dimension_closed_form": h / -log_a,
        "theta_chain_mean_by_depth": X.mean(axis=0).tolist(),
        "theta_chain_ks_early_vs_late": None if ks is None else {
            "statistic": float(ks.statistic), "p_value": float(ks.pvalue)},
    }
    text = _dump_json(summary)
    if args.summary:
        _emit(text, args.summary)
    else:
        sys.stderr.write(text)
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    w = _parse_weights(args)
    if not 1 <= args.n <= oracle.MAX_ORACLE_VERTICES:
        raise UsageError(f"--n must be in 1..{oracle.MAX_ORACLE_VERTICES}")
    if args.samples < 1:
        raise UsageError("--samples must be >= 1")
    base = _require_seed(args)
    raw = [int(v) if float(v).is_integer() else v for v in w.w]
    dist = oracle.enumerate_discrete_distribution(raw, args.n)
    sim = oracle.uniform_attachment_impostor if args.negative_control else growth.grow_discrete
    shapes = [sim(w, args.n, growth.SeedSpec(base, r)).shape() for r in range(args.samples)]
    res = oracle.compare_to_simulator(dist, shapes)
    passed = res.p_value >= args.threshold
    verdict = {
        "chi2": res.chi2 if math.isfinite(res.chi2) else None,
        "p_value": res.p_value,
        "cells": res.cells,
        "samples": args.samples,
        "threshold": args.threshold,
        "simulator": "impostor" if args.negative_control else "discrete",
        "passed": bool(passed),
        "note": res.note,
    }
    _emit(_dump_json(verdict), args.out)
    return EXIT_OK if passed else EXIT_STAT_FAIL


# -- parser -----------------------------------------------------------------


def _common(p):
    p.add_argument("--config", help="JSON file with default values for any flag")
    p.add_argument("--k", type=int, help="maximum number of children (checked against --w)")
    p.add_argument("--w", help="comma-separated weights w(0),...,w(K-1)")
    p.add_argument("--a", type=float, default=math.exp(-1.0), help="metric contraction factor in (0,1)")
    p.add_argument("--tol", type=float, default=malthus.DEFAULT_TOL)
    p.add_argument("--seed", type=int)
    p.add_argument("--replicas", type=int, default=1)
    p.add_argument("--threads", type=int)
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--format", choices=("json", "csv"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="treedim", description=__doc__.split("\n\n")[1])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="Malthusian parameter, entropy and dimension")
    _common(p)
    p.set_defaults(func=cmd_solve, format="json")

    p = sub.add_parser("grow", help="grow one tree and dump it as CSV")
    _common(p)
    p.add_argument("--n", type=int, help="stop at this many vertices")
    p.add_argument("--t", type=float, help="stop at this time")
    p.add_argument("--discrete", action="store_true", help="embedded jump chain")
    p.add_argument("--recursive", action="store_true", help="per-vertex exponential construction")
    p.add_argument("--summary", help="summary JSON file (default stderr)")
    p.set_defaults(func=cmd_grow, format="csv")

    p = sub.add_parser("entropy", help="level-entropy convergence table")
    _common(p)
    p.add_argument("--n", type=int, help="grow each replica to this many vertices")
    p.add_argument("--t", type=float, help="or to this time")
    p.add_argument("--levels", default="10", help="comma-separated generations")
    p.add_argument("--coverage-min", type=float, default=0.99)
    p.add_argument("--selftest-uniform", action="store_true")
    p.set_defaults(func=cmd_entropy, format="csv")

    p = sub.add_parser("leafwalk", help="size-biased path statistics")
    _common(p)
    p.add_argument("--n", type=int, help="grow each replica to this many vertices")
    p.add_argument("--t", type=float)
    p.add_argument("--level", type=int, default=10)
    p.add_argument("--paths", type=int, default=1000)
    p.add_argument("--rule", choices=leafwalk.RULES, default="level")
    p.add_argument("--summary", help="summary JSON file (default stderr)")
    p.add_argument("--selftest-uniform", action="store_true")
    p.set_defaults(func=cmd_leafwalk, format="csv")

    p = sub.add_parser("oracle-check", help="discrete simulator vs exact enumeration")
    _common(p)
    p.add_argument("--n", type=int, default=5, help="vertices (at most 9)")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--threshold", type=float, default=1e-3)
    p.add_argument("--negative-control", action="store_true")
    p.set_defaults(func=cmd_oracle_check, format="json")
    return parser


def _load_config(argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return {}
    with open(known.config) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in cfg.items()}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        cfg = _load_config(argv)
        if cfg:
            for sp in parser._subparsers._group_actions[0].choices.values():
                known = {a.dest for a in sp._actions}
                unknown = set(cfg) - known
                if unknown and argv and sp.prog.endswith(" " + argv[0]):
                    raise UsageError(f"unknown config keys: {sorted(unknown)}")
                sp.set_defaults(**{k: v for k, v in cfg.items() if k in known})
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"treedim: error: {exc}\n")
        return EXIT_USAGE
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"treedim: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
