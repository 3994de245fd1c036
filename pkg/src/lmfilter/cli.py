"""Command-line interface: ``lmfilter <command> [options]``.

Every command accepts ``--config FILE`` holding ``key=value`` lines (``#``
comments allowed); keys are option names without the leading dashes.  Flags
given on the command line override config values.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import io
from .filtersvm import FilterModel, StoppingRule
from .harness import (DEFAULT_CS, DEFAULT_LAMBDAS, KINDS, METHOD_NAMES, GridSpec, HyperParams,
                      OvaModel, default_jobs, error_rate, fit, grid_search, predict,
                      run_bci_table1, run_figure2_experiment, run_toy_figure1)
from .toy import (DEFAULT_SEEDS, NBTOT_SWEEP, SIGMA_SWEEP, TEST_SAMPLES, TRAIN_SAMPLES,
                  VALID_SAMPLES, ToySpec, generate_toy)

log = logging.getLogger("lmfilter")

EXPERIMENTS = ("figure2-left", "figure2-right", "toy-figure1", "bci-table1")


class UsageError(Exception):
    pass


def _floats(s: str) -> tuple:
    return tuple(float(v) for v in s.replace(";", ",").split(",") if v.strip())


def _ints(s: str) -> tuple:
    return tuple(int(v) for v in s.replace(";", ",").split(",") if v.strip())


def _manifest(args, path, **extra):
    items = {"command": args.command, "argv": " ".join(sys.argv[1:])}
    for k, v in sorted(vars(args).items()):
        if k not in ("func", "command"):
            items[f"arg.{k}"] = v
    items.update(extra)
    items.update(io.environment_info())
    io.write_keyvalue(path, items)


# -- commands ---------------------------------------------------------------

def cmd_toygen(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lags = _ints(args.lags) if args.lags else None
    base = ToySpec(nbtot=args.nbtot, nbrel=args.nbrel, sigma=args.sigma, n_samples=args.n_train,
                   region_len_min=args.region_min, region_len_max=args.region_max,
                   lags=lags, seed=args.seed)
    meta = {}
    for role, n in (("train", args.n_train), ("valid", args.n_valid), ("test", args.n_test)):
        spec = base.with_role(role, n)
        x, y = generate_toy(spec)
        io.write_signal_csv(out / f"{role}.csv", x, y)
        meta[f"{role}.n_samples"] = n
    md = base.metadata()
    md.pop("n_samples")
    md.pop("role")
    io.write_keyvalue(out / "toy.meta", {**md, **meta})
    log.info("wrote train/valid/test CSVs to %s", out)


def _parse_grid(text: str):
    Cs, lams = DEFAULT_CS, DEFAULT_LAMBDAS
    if text != "default":
        for part in text.split(";"):
            if not part.strip():
                continue
            key, _, val = part.partition("=")
            key = key.strip()
            if key == "C":
                Cs = _floats(val)
            elif key in ("lambda", "lam"):
                lams = _floats(val)
            else:
                raise UsageError(f"--grid: unknown key {key!r} (expected C or lambda)")
    return Cs, lams


def _grid_from_args(args) -> GridSpec | None:
    if not args.grid:
        return None
    Cs, lams = _parse_grid(args.grid)
    return GridSpec(args.method, Cs, lams, (args.f,), (args.n0,))


def cmd_train(args):
    x, y = io.read_signal_csv(args.data, require_labels=True)
    hp = HyperParams(args.C, args.lam, args.f, args.n0)
    grid = _grid_from_args(args)
    stop = StoppingRule(args.rel_obj_tol, args.filter_change_tol, args.max_outer_iter)
    restarts = _ints(args.restarts) if args.restarts else ()
    t0 = time.perf_counter()
    extra = {}
    if grid is not None:
        if not args.valid:
            raise UsageError("--grid needs --valid with a labelled validation CSV")
        xv, yv = io.read_signal_csv(args.valid, require_labels=True)
        res = grid_search(args.method, (x, y), (xv, yv), grid, jobs=args.jobs)
        hp = res.best
        extra.update({"grid.cells": len(res.table), "grid.best_valid_error": min(e for _, e in res.table)})
        for i, (cell, err) in enumerate(res.table):
            extra[f"grid.cell{i}"] = f"C={cell.C!r},lambda={cell.lam!r},f={cell.f},n0={cell.n0},valid_error={err!r}"
    model = fit(args.method, x, y, hp, jobs=args.jobs, stop=stop, restart_seeds=restarts) \
        if args.method == "filter" else fit(args.method, x, y, hp, jobs=args.jobs)
    hp = hp.for_kind(args.method)
    elapsed = time.perf_counter() - t0

    subs = model.models if isinstance(model, OvaModel) else (model,)
    converged = all(m.trace.inner_converged if isinstance(m, FilterModel) else m.converged for m in subs)
    if not converged:
        log.warning("solver did not converge for at least one model (converged=false recorded)")
    io.save_model(args.model_out, model, kind=args.method)

    trace_rows = []
    for k, m in enumerate(subs):
        if isinstance(m, FilterModel):
            steps = [0.0] + list(m.trace.steps)
            for it, obj in enumerate(m.trace.objectives):
                trace_rows.append({"model": k + 1, "iteration": it, "objective": obj, "step": steps[it]})
    if trace_rows:
        io.write_table_csv(str(args.model_out) + ".trace.csv", trace_rows)
    _manifest(args, str(args.model_out) + ".manifest", **{
        "chosen.C": hp.C, "chosen.lambda": hp.lam, "chosen.f": hp.f, "chosen.n0": hp.n0,
        "converged": str(converged).lower(), "seconds": f"{elapsed:.3f}", **extra})
    log.info("trained %s model (C=%g, lambda=%g, f=%d, n0=%d) in %.2fs",
             METHOD_NAMES[args.method], hp.C, hp.lam, hp.f, hp.n0, elapsed)


def _load_data_for(model, path, require_labels=False):
    x, y = io.read_signal_csv(path, require_labels=require_labels)
    sub = model.models[0] if isinstance(model, OvaModel) else model
    if x.shape[1] != sub.n_channels:
        raise UsageError(f"model expects {sub.n_channels} channels, {path} has {x.shape[1]}")
    return x, y


def cmd_predict(args):
    model, _ = io.load_model(args.model)
    x, _ = _load_data_for(model, args.data)
    scores, labels = predict(model, x)
    rows = []
    for i in range(x.shape[0]):
        r = {"t": i}
        if scores.ndim == 2:
            for k, c in enumerate(model.classes):
                r[f"score_{c}"] = float(scores[i, k])
        else:
            r["score"] = float(scores[i])
        r["label"] = int(labels[i])
        rows.append(r)
    io.write_table_csv(args.out or sys.stdout, rows)


def cmd_eval(args):
    model, header = io.load_model(args.model)
    x, y = _load_data_for(model, args.data, require_labels=True)
    err = error_rate(predict(model, x)[1], y)
    print(f"error_rate={err!r}")
    if args.report:
        row = {"model": str(args.model), "data": str(args.data), "kind": header.get("kind"),
               "n_samples": x.shape[0], "error_rate": err}
        io.write_table_csv(args.report, [row], append=True)


def cmd_export_filter(args):
    model, _ = io.load_model(args.model)
    if isinstance(model, OvaModel):
        stem = Path(args.out)
        for c, m in zip(model.classes, model.models):
            io.write_map_csv(stem.with_name(f"{stem.stem}_class{c}{stem.suffix or '.csv'}"), io.space_time_map(m))
    else:
        io.write_map_csv(args.out, io.space_time_map(model))


def cmd_experiment(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seeds = _ints(args.seeds) if args.seeds else DEFAULT_SEEDS
    t0 = time.perf_counter()
    extra = {"seeds": ",".join(map(str, seeds))}
    if args.name in ("figure2-left", "figure2-right"):
        side = "sigma" if args.name == "figure2-left" else "nbtot"
        values = _floats(args.values) if args.values else (SIGMA_SWEEP if side == "sigma" else NBTOT_SWEEP)
        kinds = tuple(args.methods.split(",")) if args.methods else KINDS
        for k in kinds:
            if k not in KINDS:
                raise UsageError(f"--methods: unknown method {k!r}")
        grids = None
        if args.grid:
            Cs, lams = _parse_grid(args.grid)
            grids = {k: GridSpec(k, Cs, lams) for k in kinds}
        res = run_figure2_experiment(side, seeds, values, kinds=kinds, grids=grids, jobs=args.jobs)
        rows = [{**r, "method": METHOD_NAMES[r["method"]]} for r in res.rows()]
        io.write_table_csv(out / f"{args.name}.csv", rows)
        runs = []
        for (value, kind, seed), hp in sorted(res.chosen.items(), key=lambda kv: (kv[0][0], KINDS.index(kv[0][1]), kv[0][2])):
            runs.append({"value": value, "method": METHOD_NAMES[kind], "seed": seed,
                         "test_error": res.errors[(value, kind)][seeds.index(seed)],
                         "C": hp.C, "lambda": hp.lam, "f": hp.f, "n0": hp.n0,
                         "seconds": res.wall_times[(value, kind, seed)]})
        io.write_table_csv(out / f"{args.name}_runs.csv", runs)
        extra["values"] = ",".join(map(repr, values))
        sys.stdout.write(io.format_table(rows))
    elif args.name == "toy-figure1":
        Cs, lams = _parse_grid(args.grid or "default")
        errors, hist = run_toy_figure1(seeds, jobs=args.jobs, Cs=Cs, lams=lams)
        rows = [{"method": METHOD_NAMES[k], "mean_error": float(np.mean(v)), "std_error": float(np.std(v)),
                 "n_seeds": len(v)} for k, v in errors.items()]
        io.write_table_csv(out / "toy-figure1.csv", rows)
        io.write_table_csv(out / "toy-figure1_hist.csv", hist)
        sys.stdout.write(io.format_table(rows))
    else:
        if not (args.train and args.valid and args.test):
            raise UsageError("bci-table1 needs --train, --valid and --test CSV files")
        data = [io.read_signal_csv(p, require_labels=True) for p in (args.train, args.valid, args.test)]
        Cs, lams = _parse_grid(args.grid or "default")
        rows = run_bci_table1(*data, Cs=Cs, lams=lams, jobs=args.jobs)
        io.write_table_csv(out / "bci-table1.csv", rows)
        sys.stdout.write(io.format_table(rows))
    extra["seconds"] = f"{time.perf_counter() - t0:.3f}"
    _manifest(args, out / f"{args.name}.manifest", **extra)


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lmfilter", description="Large-margin FIR filtering for signal sequence labeling.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help):
        sp = sub.add_parser(name, help=help)
        sp.add_argument("--config", help="key=value file with option defaults")
        sp.set_defaults(func=func)
        return sp

    sp = add("toygen", cmd_toygen, "write a seeded toy train/valid/test triple")
    sp.add_argument("--nbtot", type=int, default=1)
    sp.add_argument("--nbrel", type=int, default=1)
    sp.add_argument("--sigma", type=float, default=1.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--lags", help="comma-separated per-channel lags (default: spread over 0..10)")
    sp.add_argument("--region-min", type=int, default=30)
    sp.add_argument("--region-max", type=int, default=40)
    sp.add_argument("--n-train", type=int, default=TRAIN_SAMPLES)
    sp.add_argument("--n-valid", type=int, default=VALID_SAMPLES)
    sp.add_argument("--n-test", type=int, default=TEST_SAMPLES)
    sp.add_argument("--out", required=True, help="output directory")

    sp = add("train", cmd_train, "train a model on a labelled CSV")
    sp.add_argument("--method", choices=KINDS, default="filter")
    sp.add_argument("--data", required=True)
    sp.add_argument("--valid", help="validation CSV (required with --grid)")
    sp.add_argument("--f", type=int, default=21)
    sp.add_argument("--n0", type=int, default=11)
    sp.add_argument("--C", type=float, default=1.0)
    sp.add_argument("--lambda", dest="lam", type=float, default=1.0)
    sp.add_argument("--grid", help="'default' or e.g. 'C=0.1,1,10;lambda=1,10'")
    sp.add_argument("--rel-obj-tol", type=float, default=1e-4)
    sp.add_argument("--filter-change-tol", type=float, default=1e-5)
    sp.add_argument("--max-outer-iter", type=int, default=100)
    sp.add_argument("--restarts", help="comma-separated seeds for extra perturbed starts (filter only)")
    sp.add_argument("--jobs", type=int, default=default_jobs())
    sp.add_argument("--model-out", required=True)

    sp = add("predict", cmd_predict, "write per-sample scores and labels")
    sp.add_argument("--model", required=True)
    sp.add_argument("--data", required=True)
    sp.add_argument("--out", help="output CSV (default: standard output)")

    sp = add("eval", cmd_eval, "print the error rate of a model on labelled data")
    sp.add_argument("--model", required=True)
    sp.add_argument("--data", required=True)
    sp.add_argument("--report", help="CSV to append a result row to")

    sp = add("export-filter", cmd_export_filter, "export the f x d space-time map of a model")
    sp.add_argument("--model", required=True)
    sp.add_argument("--out", required=True)

    sp = add("experiment", cmd_experiment, "run a scripted experiment")
    sp.add_argument("name", choices=EXPERIMENTS)
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--seeds", help="comma-separated seeds (default 0..9)")
    sp.add_argument("--values", help="comma-separated sweep values")
    sp.add_argument("--methods", help="comma-separated subset of " + ",".join(KINDS))
    sp.add_argument("--grid", help="override the search grid, e.g. 'C=0.1,1;lambda=10'")
    sp.add_argument("--train")
    sp.add_argument("--valid")
    sp.add_argument("--test")
    sp.add_argument("--jobs", type=int, default=default_jobs())
    return p


def _apply_config(parser, argv):
    """Parse ``argv``, folding in ``--config`` values as defaults."""
    subparsers = parser._subparsers._group_actions[0].choices
    required = [a for sp in subparsers.values() for a in sp._actions if a.required]
    for a in required:
        a.required = False
    try:
        args = parser.parse_args(argv)
    finally:
        for a in required:
            a.required = True
    if getattr(args, "config", None):
        sub = subparsers[args.command]
        by_name = {}
        for a in sub._actions:
            for opt in a.option_strings:
                by_name[opt.lstrip("-")] = a
            by_name.setdefault(a.dest, a)
        defaults = {}
        for key, raw in io.read_keyvalue(args.config).items():
            a = by_name.get(key) or by_name.get(key.replace("_", "-"))
            if a is None or a.dest in ("help", "config"):
                raise UsageError(f"{args.config}: unknown config key {key!r}")
            try:
                val = a.type(raw) if a.type else raw
            except (TypeError, ValueError):
                raise UsageError(f"{args.config}: bad value {raw!r} for key {key!r}") from None
            if a.choices and val not in a.choices:
                raise UsageError(f"{args.config}: value {raw!r} for key {key!r} not in {list(a.choices)}")
            a.required = False
            defaults[a.dest] = val
        sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _error(msg):
    print(f"lmfilter: error: {msg}", file=sys.stderr)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except (UsageError, io.FormatError, OSError) as e:
        _error(e)
        return 2
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        args.func(args)
    except UsageError as e:
        _error(e)
        return 2
    except (io.FormatError, ValueError, OSError, RuntimeError) as e:
        _error(e)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
