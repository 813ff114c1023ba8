"""Configuration-driven experiment harness and command-line interface.

A grid run simulates each cell, splits it, fits every requested model,
and scores test-set predictions next to the exact-model reference.
Rows append to a CSV as they finish, so interrupted runs resume without
recomputing completed work; all seeds derive deterministically from
(base seed, cell index, repetition), which makes reruns bit-stable.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
import traceback
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import SurvivalDataset, train_test_split
from .metrics import metric_report, reference_metrics
from .models import MODEL_NAMES, fit_model, load_model, save_model
from .nnet import TrainConfig
from .simgen import (
    LogNormal,
    ModelFamily,
    SimulationSpec,
    Weibull,
    generate,
)

ENV_OUTDIR = "SURVBENCH_OUTDIR"
CONFIG_VERSION = 1
RESULT_COLUMNS = ("family", "baseline", "n", "p", "model", "rep", "seed",
                  "c_td", "ibs", "wall_seconds")
REFERENCE_MODEL = "reference"


@dataclass(frozen=True)
class ResultRow:
    family: str
    baseline: str
    n: int
    p: int
    model: str
    rep: int
    seed: int
    c_td: float
    ibs: float
    wall_seconds: float

    def key(self):
        return (self.family, self.baseline, self.n, self.p, self.model, self.rep)

    def as_record(self) -> list:
        return [self.family, self.baseline, self.n, self.p, self.model,
                self.rep, self.seed, repr(self.c_td), repr(self.ibs),
                repr(self.wall_seconds)]


@dataclass(frozen=True)
class ExperimentConfig:
    cells: tuple
    models: tuple = MODEL_NAMES
    repetitions: int = 5
    base_seed: int = 0
    train_fraction: float = 2.0 / 3.0
    output_dir: str | None = None  # CLI fallback when --out is absent

    def __post_init__(self):
        if not self.cells:
            raise ValueError("experiment grid is empty")
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        for name in self.models:
            if name not in MODEL_NAMES:
                raise ValueError(f"unknown model {name!r}")


def _baseline_label(baseline) -> str:
    # no commas: the label lands in CSV fields unquoted
    if isinstance(baseline, Weibull):
        return f"weibull(a={baseline.a:g};lam={baseline.lam:g})"
    return f"lognormal(mu={baseline.mu:g};sigma={baseline.sigma:g})"


def _derived_seed(base_seed: int, *path: int) -> int:
    return int(np.random.SeedSequence((base_seed,) + path).generate_state(1)[0])


# ---------------------------------------------------------------------------
# configuration files

def _baseline_to_json(baseline) -> dict:
    if isinstance(baseline, Weibull):
        return {"kind": "weibull", "a": baseline.a, "lam": baseline.lam}
    return {"kind": "lognormal", "mu": baseline.mu, "sigma": baseline.sigma}


def _baseline_from_json(d: dict):
    if d["kind"] == "weibull":
        return Weibull(a=float(d["a"]), lam=float(d["lam"]))
    if d["kind"] == "lognormal":
        return LogNormal(mu=float(d["mu"]), sigma=float(d["sigma"]))
    raise ValueError(f"unknown baseline kind {d['kind']!r}")


def config_to_json(config: ExperimentConfig) -> dict:
    return {
        "config_version": CONFIG_VERSION,
        "base_seed": config.base_seed,
        "repetitions": config.repetitions,
        "train_fraction": config.train_fraction,
        "output_dir": config.output_dir,
        "models": list(config.models),
        "cells": [
            {
                "family": spec.family.value,
                "baseline": _baseline_to_json(spec.baseline),
                "n": spec.n, "p": spec.p, "k": spec.k,
                "beta_scale": spec.beta_scale,
                "censor_target": spec.censor_target,
            }
            for spec in config.cells
        ],
    }


def config_from_json(d: dict) -> ExperimentConfig:
    version = d.get("config_version")
    if version != CONFIG_VERSION:
        raise ValueError(f"unsupported config version {version!r}")
    cells = tuple(
        SimulationSpec(
            family=ModelFamily(c["family"]),
            baseline=_baseline_from_json(c["baseline"]),
            n=int(c["n"]), p=int(c["p"]), k=int(c["k"]),
            beta_scale=float(c["beta_scale"]),
            censor_target=float(c["censor_target"]),
            seed=0,
        )
        for c in d["cells"]
    )
    return ExperimentConfig(
        cells=cells,
        models=tuple(d.get("models", MODEL_NAMES)),
        repetitions=int(d.get("repetitions", 5)),
        base_seed=int(d.get("base_seed", 0)),
        train_fraction=float(d.get("train_fraction", 2.0 / 3.0)),
        output_dir=d.get("output_dir"),
    )


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return config_from_json(json.load(fh))


def save_config(config: ExperimentConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_json(config), fh, indent=2)


def builtin_config(name: str, repetitions: int = 5,
                   models: tuple = MODEL_NAMES) -> ExperimentConfig:
    """The three built-in simulation grids (dense coefficients, k = p)."""
    grids = {
        "table1": (ModelFamily.COX, Weibull(a=2.0, lam=1.3e-7)),
        "table2": (ModelFamily.AH, LogNormal(mu=7.73, sigma=0.7)),
        "table3": (ModelFamily.AFT, LogNormal(mu=7.73, sigma=0.176)),
    }
    if name not in grids:
        raise ValueError(f"unknown built-in config {name!r}; "
                         f"choose from {sorted(grids)}")
    family, baseline = grids[name]
    cells = tuple(
        SimulationSpec(family=family, baseline=baseline, n=n, p=p, k=p,
                       censor_target=0.3, seed=0)
        for n in (200, 1000) for p in (10, 100, 1000)
    )
    return ExperimentConfig(cells=cells, models=models, repetitions=repetitions)


# ---------------------------------------------------------------------------
# result persistence

def read_results(path) -> list:
    rows = []
    path = Path(path)
    if not path.exists():
        return rows
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is not None and tuple(reader.fieldnames) != RESULT_COLUMNS:
            raise ValueError(f"unexpected results header {reader.fieldnames}")
        for rec in reader:
            rows.append(ResultRow(
                family=rec["family"], baseline=rec["baseline"],
                n=int(rec["n"]), p=int(rec["p"]), model=rec["model"],
                rep=int(rec["rep"]), seed=int(rec["seed"]),
                c_td=float(rec["c_td"]), ibs=float(rec["ibs"]),
                wall_seconds=float(rec["wall_seconds"])))
    return rows


class _ResultWriter:
    """Append-only CSV sink; each row is flushed as soon as it lands."""

    def __init__(self, path):
        self.path = Path(path)
        new = not self.path.exists()
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "a", newline="", encoding="utf-8")
        self._writer = csv.writer(self._fh)
        if new:
            self._writer.writerow(RESULT_COLUMNS)
            self._fh.flush()

    def write(self, row: ResultRow) -> None:
        self._writer.writerow(row.as_record())
        self._fh.flush()
        os.fsync(self._fh.fileno())

    def close(self) -> None:
        self._fh.close()


# ---------------------------------------------------------------------------
# grid execution

def _evaluate_cell(spec: SimulationSpec, models, rep: int, base_seed: int,
                   cell_idx: int, train_fraction: float, train_config=None):
    """Simulate one (cell, repetition), fit the requested models, and
    yield finished ResultRows (reference first)."""
    from dataclasses import replace

    sim_seed = _derived_seed(base_seed, cell_idx, rep, 0)
    split_seed = _derived_seed(base_seed, cell_idx, rep, 1)
    spec = replace(spec, seed=sim_seed)
    sim = generate(spec)
    train, test, split = train_test_split(sim.data, train_fraction, split_seed)
    label = _baseline_label(spec.baseline)

    t0 = time.perf_counter()
    ref = reference_metrics(sim, split.test)
    yield ResultRow(family=spec.family.value, baseline=label, n=spec.n,
                    p=spec.p, model=REFERENCE_MODEL, rep=rep, seed=sim_seed,
                    c_td=ref.c_td, ibs=ref.ibs,
                    wall_seconds=time.perf_counter() - t0)

    for m_idx, name in enumerate(models):
        model_seed = _derived_seed(base_seed, cell_idx, rep, 2 + m_idx)
        t0 = time.perf_counter()
        model = fit_model(name, train, seed=model_seed, config=train_config)
        curves = model.predict_survival(test.X)
        rep_metrics = metric_report(curves, test.time, test.event)
        yield ResultRow(family=spec.family.value, baseline=label, n=spec.n,
                        p=spec.p, model=name, rep=rep, seed=model_seed,
                        c_td=rep_metrics.c_td, ibs=rep_metrics.ibs,
                        wall_seconds=time.perf_counter() - t0)


def run_grid(config: ExperimentConfig, output_dir, resume: bool = True,
             log=print, train_config=None) -> list:
    """Run every (cell, repetition), persisting rows incrementally.

    With ``resume`` (default), rows already in the results file are kept
    and their work skipped, so an interrupted run picks up where it
    stopped. Per-cell failures are recorded with NaN metrics and the run
    continues.
    """
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    results_path = output_dir / "results.csv"
    if not resume and results_path.exists():
        results_path.unlink()
    done_rows = read_results(results_path)
    done = {row.key() for row in done_rows}
    writer = _ResultWriter(results_path)
    rows = list(done_rows)
    try:
        for cell_idx, spec in enumerate(config.cells):
            label = _baseline_label(spec.baseline)
            for rep in range(config.repetitions):
                wanted = [m for m in (REFERENCE_MODEL,) + tuple(config.models)
                          if (spec.family.value, label, spec.n, spec.p, m, rep)
                          not in done]
                if not wanted:
                    continue
                log(f"cell {cell_idx} ({spec.family.value} n={spec.n} "
                    f"p={spec.p}) rep {rep}: running {wanted}")
                try:
                    for row in _evaluate_cell(spec, config.models, rep,
                                              config.base_seed, cell_idx,
                                              config.train_fraction,
                                              train_config):
                        if row.key() in done:
                            continue
                        writer.write(row)
                        rows.append(row)
                        done.add(row.key())
                except Exception:
                    err_path = output_dir / "errors.log"
                    with open(err_path, "a", encoding="utf-8") as fh:
                        fh.write(f"cell {cell_idx} rep {rep}\n")
                        fh.write(traceback.format_exc() + "\n")
                    for name in (REFERENCE_MODEL,) + tuple(config.models):
                        key = (spec.family.value, label, spec.n, spec.p, name, rep)
                        if key in done:
                            continue
                        row = ResultRow(family=spec.family.value, baseline=label,
                                        n=spec.n, p=spec.p, model=name, rep=rep,
                                        seed=-1, c_td=float("nan"),
                                        ibs=float("nan"), wall_seconds=0.0)
                        writer.write(row)
                        rows.append(row)
                        done.add(key)
                    log(f"cell {cell_idx} rep {rep} failed; see {err_path}")
    finally:
        writer.close()
    return rows


# ---------------------------------------------------------------------------
# table emission

def _format_stat(values) -> str:
    values = [v for v in values if not np.isnan(v)]
    if not values:
        return "nan"
    if len(values) == 1:
        return f"{values[0]:.4f}"
    return f"{np.mean(values):.4f}±{np.std(values, ddof=1):.4f}"


def emit_table(rows, fmt: str = "markdown") -> str:
    """Mean (+-sd over repetitions) of C_td and IBS per cell and model."""
    if not rows:
        raise ValueError("no rows to tabulate")
    if fmt not in ("markdown", "csv"):
        raise ValueError("format must be 'markdown' or 'csv'")
    cells = sorted({(r.family, r.baseline, r.n, r.p) for r in rows})
    models = [REFERENCE_MODEL] + [m for m in MODEL_NAMES
                                  if any(r.model == m for r in rows)]
    lines = []
    if fmt == "csv":
        lines.append("family,baseline,n,p,model,c_td,ibs")
    for family, baseline, n, p in cells:
        if fmt == "markdown":
            lines.append(f"### {family} / {baseline} / n={n} p={p}")
            lines.append("| model | C_td | IBS |")
            lines.append("|---|---|---|")
        for model in models:
            sel = [r for r in rows
                   if (r.family, r.baseline, r.n, r.p, r.model)
                   == (family, baseline, n, p, model)]
            if not sel:
                continue
            ctd = _format_stat([r.c_td for r in sel])
            ibs = _format_stat([r.ibs for r in sel])
            if fmt == "markdown":
                lines.append(f"| {model} | {ctd} | {ibs} |")
            else:
                lines.append(f"{family},{baseline},{n},{p},{model},{ctd},{ibs}")
        if fmt == "markdown":
            lines.append("")
    return "\n".join(lines).rstrip() + "\n"


# ---------------------------------------------------------------------------
# dataset files

def load_csv(path) -> SurvivalDataset:
    """Read a dataset CSV: a header with reserved ``time`` and ``event``
    columns, every other column a numeric covariate. Rows are validated
    individually and rejected with their line number."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError("empty file") from None
        if "time" not in header or "event" not in header:
            raise ValueError("header must contain 'time' and 'event' columns")
        if len(set(header)) != len(header):
            raise ValueError("duplicate column names in header")
        t_col = header.index("time")
        e_col = header.index("event")
        x_cols = [j for j in range(len(header)) if j not in (t_col, e_col)]
        times, events, xrows = [], [], []
        for line_no, rec in enumerate(reader, start=2):
            if len(rec) != len(header):
                raise ValueError(f"row {line_no}: expected {len(header)} fields, "
                                 f"got {len(rec)}")
            try:
                values = [float(v) for v in rec]
            except ValueError:
                raise ValueError(f"row {line_no}: non-numeric cell") from None
            if any(np.isnan(v) for v in values):
                raise ValueError(f"row {line_no}: missing value")
            t = values[t_col]
            e = values[e_col]
            if not np.isfinite(t) or t <= 0:
                raise ValueError(f"row {line_no}: time must be positive, got {t!r}")
            if e not in (0.0, 1.0):
                raise ValueError(f"row {line_no}: event must be 0 or 1, got {e!r}")
            times.append(t)
            events.append(int(e))
            xrows.append([values[j] for j in x_cols])
    if not times:
        raise ValueError("no data rows")
    return SurvivalDataset(np.asarray(xrows, dtype=np.float64),
                           np.asarray(times), np.asarray(events))


def save_csv(data: SurvivalDataset, path) -> None:
    """Write a dataset in the same CSV format load_csv reads."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "event"] + [f"x{j + 1}" for j in range(data.p)])
        for i in range(data.n):
            writer.writerow([repr(float(data.time[i])), int(data.event[i])]
                            + [repr(float(v)) for v in data.X[i]])


def run_real(path, models=MODEL_NAMES, seed: int = 0,
             train_fraction: float = 2.0 / 3.0, log=print,
             train_config=None) -> list:
    """Fit and score every model on a real dataset file (no reference row)."""
    data = load_csv(path)
    train, test, _ = train_test_split(data, train_fraction, seed)
    rows = []
    for m_idx, name in enumerate(models):
        model_seed = _derived_seed(seed, 0, 0, m_idx)
        t0 = time.perf_counter()
        model = fit_model(name, train, seed=model_seed, config=train_config)
        rep = metric_report(model.predict_survival(test.X), test.time, test.event)
        row = ResultRow(family="real", baseline=Path(path).name, n=data.n,
                        p=data.p, model=name, rep=0, seed=model_seed,
                        c_td=rep.c_td, ibs=rep.ibs,
                        wall_seconds=time.perf_counter() - t0)
        log(f"{name}: C_td={rep.c_td:.4f} IBS={rep.ibs:.4f} "
            f"({row.wall_seconds:.1f}s)")
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# CLI

def _default_outdir() -> str:
    return os.environ.get(ENV_OUTDIR, "survbench-results")


def _spec_from_args(args) -> SimulationSpec:
    if args.baseline == "weibull":
        baseline = Weibull(a=args.shape, lam=args.rate)
    else:
        baseline = LogNormal(mu=args.mu, sigma=args.sigma)
    k = args.k if args.k is not None else args.p
    return SimulationSpec(family=ModelFamily(args.family), baseline=baseline,
                          n=args.n, p=args.p, k=k, beta_scale=args.beta_scale,
                          censor_target=args.censor, seed=args.seed)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="survbench",
        description="survival-analysis benchmark toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="draw a dataset and write it as CSV")
    p_sim.add_argument("--family", choices=[f.value for f in ModelFamily],
                       default="cox")
    p_sim.add_argument("--baseline", choices=["weibull", "lognormal"],
                       default="weibull")
    p_sim.add_argument("--shape", type=float, default=2.0,
                       help="Weibull shape")
    p_sim.add_argument("--rate", type=float, default=1.3e-7,
                       help="Weibull rate")
    p_sim.add_argument("--mu", type=float, default=7.73)
    p_sim.add_argument("--sigma", type=float, default=0.7)
    p_sim.add_argument("--n", type=int, default=1000)
    p_sim.add_argument("--p", type=int, default=10)
    p_sim.add_argument("--k", type=int, default=None,
                       help="relevant covariates (default: all)")
    p_sim.add_argument("--beta-scale", type=float,
                       default=SimulationSpec.__dataclass_fields__["beta_scale"].default)
    p_sim.add_argument("--censor", type=float, default=0.3)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", required=True)

    p_fit = sub.add_parser("fit", help="fit one model and serialize it")
    p_fit.add_argument("--data", required=True, help="dataset CSV")
    p_fit.add_argument("--model", choices=MODEL_NAMES, required=True)
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--ridge", type=float, default=None,
                       help="fixed ridge weight (networks); default cross-validates")
    p_fit.add_argument("--epochs", type=int, default=None)
    p_fit.add_argument("--out", required=True)

    p_eval = sub.add_parser("eval", help="score a serialized model on a dataset")
    p_eval.add_argument("--model", required=True, help="model JSON file")
    p_eval.add_argument("--data", required=True, help="dataset CSV")

    p_bench = sub.add_parser("bench", help="run an experiment grid from a config")
    p_bench.add_argument("--config", required=True)
    p_bench.add_argument("--out", default=None)
    p_bench.add_argument("--no-resume", action="store_true")
    p_bench.add_argument("--format", choices=["markdown", "csv"],
                         default="markdown")

    p_repro = sub.add_parser("reproduce",
                             help="run one of the built-in simulation grids")
    p_repro.add_argument("--table", choices=["table1", "table2", "table3"],
                         required=True)
    p_repro.add_argument("--repetitions", type=int, default=5)
    p_repro.add_argument("--models", nargs="+", choices=MODEL_NAMES,
                         default=list(MODEL_NAMES))
    p_repro.add_argument("--out", default=None)
    p_repro.add_argument("--no-resume", action="store_true")
    p_repro.add_argument("--format", choices=["markdown", "csv"],
                         default="markdown")

    p_real = sub.add_parser("real", help="fit every model on a dataset CSV")
    p_real.add_argument("--data", required=True)
    p_real.add_argument("--seed", type=int, default=0)
    p_real.add_argument("--models", nargs="+", choices=MODEL_NAMES,
                        default=list(MODEL_NAMES))

    args = parser.parse_args(argv)

    if args.command == "simulate":
        sim = generate(_spec_from_args(args))
        save_csv(sim.data, args.out)
        print(f"wrote {sim.data.n} subjects ({1 - sim.data.event.mean():.1%} "
              f"censored) to {args.out}")
        return 0

    if args.command == "fit":
        data = load_csv(args.data)
        overrides = {}
        if args.ridge is not None:
            overrides["ridge"] = args.ridge
        if args.epochs is not None:
            overrides["epochs"] = args.epochs
        config = TrainConfig(seed=args.seed, **overrides) if overrides else None
        model = fit_model(args.model, data, seed=args.seed, config=config)
        save_model(model, args.out)
        print(f"fitted {args.model} on {data.n} subjects -> {args.out}")
        return 0

    if args.command == "eval":
        data = load_csv(args.data)
        model = load_model(args.model)
        rep = metric_report(model.predict_survival(data.X), data.time,
                            data.event)
        print(f"c_td={rep.c_td:.4f} ibs={rep.ibs:.4f}")
        return 0

    if args.command in ("bench", "reproduce"):
        if args.command == "bench":
            config = load_config(args.config)
            out = args.out or config.output_dir or _default_outdir()
        else:
            config = builtin_config(args.table, repetitions=args.repetitions,
                                    models=tuple(args.models))
            out = args.out or os.path.join(_default_outdir(), args.table)
        rows = run_grid(config, out, resume=not args.no_resume)
        table = emit_table(rows, args.format)
        suffix = "md" if args.format == "markdown" else "csv"
        table_path = Path(out) / f"table.{suffix}"
        table_path.write_text(table, encoding="utf-8")
        print(table)
        print(f"rows: {Path(out) / 'results.csv'}  table: {table_path}")
        return 0

    if args.command == "real":
        run_real(args.data, models=tuple(args.models), seed=args.seed)
        return 0

    return 1


if __name__ == "__main__":
    sys.exit(main())
