"""Experiment grid: sample, fit, conformalize, score coverage, aggregate.

One cell is a full coordinate tuple (benchmark, degree, oversampling, method,
score, seed). Cells are independent and deterministic: the training and test
sets are drawn from separate streams keyed by (degree, oversampling, seed),
so rerunning a configuration reproduces every record byte for byte. Fit
failures are captured into the record instead of aborting the grid, because
poorly oversampled cells are themselves part of the study.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .basis import build_total_degree_set
from .benchmarks import design_size, get_benchmark, sample_design
from .conformal import ConformalConfig, METHODS, SCORES, empirical_coverage, prediction_intervals
from .errors import ConfpceError, UnderdeterminedError
from .pce import VARIANCE_FLOOR, fit, output_variance, relative_loo_error

RECORD_COLUMNS = (
    "benchmark",
    "P",
    "C",
    "method",
    "score",
    "seed",
    "coverage",
    "mean_width",
    "median_width",
    "rel_loo_error",
    "n_unbounded",
    "failure",
)

AGGREGATE_COLUMNS = (
    "benchmark",
    "P",
    "C",
    "method",
    "score",
    "n_seeds",
    "n_failed",
    "coverage_mean",
    "coverage_median",
    "coverage_q1",
    "coverage_q3",
    "coverage_min",
    "coverage_max",
    "width_mean",
    "width_median",
    "width_q1",
    "width_q3",
    "width_min",
    "width_max",
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Grid definition mirrored by the JSON config document."""

    benchmark: str
    degrees: tuple[int, ...]
    oversampling: tuple[int, ...]
    methods: tuple[str, ...] = METHODS
    scores: tuple[str, ...] = ("absolute",)
    significance: float = 0.05
    n_seeds: int = 100
    test_size: int = 10_000
    output: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "degrees", tuple(int(p) for p in self.degrees))
        object.__setattr__(self, "oversampling", tuple(int(c) for c in self.oversampling))
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "scores", tuple(self.scores))
        if not self.degrees:
            raise ValueError("degrees list must be non-empty")
        if not self.oversampling:
            raise ValueError("oversampling list must be non-empty")
        if not self.methods:
            raise ValueError("methods list must be non-empty")
        if not self.scores:
            raise ValueError("scores list must be non-empty")
        for method in self.methods:
            if method not in METHODS:
                raise ValueError(f"unknown method {method!r}; known: {METHODS}")
        for score in self.scores:
            if score not in SCORES:
                raise ValueError(f"unknown score {score!r}; known: {SCORES}")
        if not 0.0 < self.significance < 1.0:
            raise ValueError(f"significance must lie in (0, 1), got {self.significance!r}")
        if self.n_seeds < 1:
            raise ValueError(f"n_seeds must be >= 1, got {self.n_seeds}")
        if self.test_size < 1:
            raise ValueError(f"test_size must be >= 1, got {self.test_size}")
        get_benchmark(self.benchmark)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        if "benchmark" not in doc or "degrees" not in doc or "oversampling" not in doc:
            raise ValueError("config requires benchmark, degrees and oversampling")
        return cls(**doc)

    def quick(self) -> "ExperimentConfig":
        """Desk-scale profile: 20 seeds, 2000 test points."""
        return replace(self, n_seeds=20, test_size=2000)


@dataclass(frozen=True)
class RunRecord:
    """Outcome of one cell; failed cells keep their coordinates and reason."""

    benchmark: str
    degree: int
    oversampling: int
    method: str
    score: str
    seed: int
    coverage: float | None = None
    mean_width: float | None = None
    median_width: float | None = None
    rel_loo_error: float | None = None
    condition_number: float | None = None
    n_unbounded: int | None = None
    failure: str | None = None

    @property
    def failed(self) -> bool:
        return self.failure is not None


@dataclass(frozen=True)
class CoverageReport:
    """All per-seed records plus per-cell aggregates over seeds."""

    records: tuple[RunRecord, ...]
    aggregates: tuple[dict, ...]

    @property
    def failures(self) -> tuple[RunRecord, ...]:
        return tuple(r for r in self.records if r.failed)


def run_cell(
    benchmark: str,
    degree: int,
    oversampling: int,
    method: str,
    score: str,
    significance: float,
    seed: int,
    test_size: int,
) -> RunRecord:
    """Runs one experiment cell; never raises for fit/score failures.

    The training set has design_size(benchmark, degree, oversampling) points
    from the train stream; the test set has test_size points from the test
    stream; both are keyed by (degree, oversampling, seed). A degenerate
    zero-variance target yields rel_loo_error = nan rather than a failure.
    """
    coords = dict(
        benchmark=benchmark,
        degree=degree,
        oversampling=oversampling,
        method=method,
        score=score,
        seed=seed,
    )
    bench = get_benchmark(benchmark)
    n_basis = len(build_total_degree_set(bench.dim, degree))
    m = design_size(benchmark, degree, oversampling)
    if m < n_basis:
        failure = UnderdeterminedError(
            f"underdetermined cell: M={m} < K={n_basis} for P={degree}, C={oversampling}"
        )
        return RunRecord(**coords, failure=f"{type(failure).__name__}: {failure}")

    cell_seed = (degree, oversampling, seed)
    try:
        train = sample_design(benchmark, m, seed=cell_seed, stream="train")
        model = fit(train, build_total_degree_set(bench.dim, degree), bench.input_spec)
        test = sample_design(benchmark, test_size, seed=cell_seed, stream="test")
        cfg = ConformalConfig(method=method, score=score, significance=significance)
        intervals = prediction_intervals(model, test.inputs, cfg)
        coverage = empirical_coverage(intervals, test.outputs)
    except ConfpceError as exc:
        return RunRecord(**coords, failure=f"{type(exc).__name__}: {exc}")

    widths = np.array([iv.width for iv in intervals])
    if output_variance(model) <= VARIANCE_FLOOR:
        rel_loo = float("nan")
    else:
        rel_loo = relative_loo_error(model)
    return RunRecord(
        **coords,
        coverage=coverage,
        mean_width=float(np.mean(widths)),
        median_width=float(np.median(widths)),
        rel_loo_error=rel_loo,
        condition_number=model.condition_number,
        n_unbounded=int(sum(iv.is_unbounded for iv in intervals)),
    )


def run_grid(config: ExperimentConfig) -> CoverageReport:
    """Runs the full Cartesian grid of the config, seeds innermost.

    Record order follows the config's coordinate lists with seeds innermost,
    so identical configs yield identical reports; aggregates are reduced
    after a stable sort by coordinates.
    """
    records = []
    for degree in config.degrees:
        for oversampling in config.oversampling:
            for method in config.methods:
                for score in config.scores:
                    for seed in range(config.n_seeds):
                        records.append(
                            run_cell(
                                config.benchmark,
                                degree,
                                oversampling,
                                method,
                                score,
                                config.significance,
                                seed,
                                config.test_size,
                            )
                        )
    return CoverageReport(records=tuple(records), aggregates=tuple(aggregate_records(records)))


def aggregate_records(records) -> list[dict]:
    """Per-(benchmark, P, C, method, score) statistics over seeds.

    Aggregates use only successful records; failures are counted, never
    silently dropped. Coverage statistics summarize per-seed coverages, width
    statistics per-seed median widths.
    """
    groups: dict[tuple, list[RunRecord]] = {}
    for rec in records:
        key = (rec.benchmark, rec.degree, rec.oversampling, rec.method, rec.score)
        groups.setdefault(key, []).append(rec)

    rows = []
    for key in sorted(groups):
        cell = groups[key]
        ok = [r for r in cell if not r.failed]
        row = dict(zip(("benchmark", "P", "C", "method", "score"), key))
        row["n_seeds"] = len(cell)
        row["n_failed"] = len(cell) - len(ok)
        for prefix, values in (
            ("coverage", [r.coverage for r in ok]),
            ("width", [r.median_width for r in ok]),
        ):
            stats = _summary(np.asarray(values, dtype=float)) if ok else dict.fromkeys(
                ("mean", "median", "q1", "q3", "min", "max"), float("nan")
            )
            for stat, value in stats.items():
                row[f"{prefix}_{stat}"] = value
        rows.append(row)
    return rows


def _summary(values: np.ndarray) -> dict:
    ordered = np.sort(values)
    return {
        "mean": float(np.mean(values)),
        "median": _quantile_linear(ordered, 0.5),
        "q1": _quantile_linear(ordered, 0.25),
        "q3": _quantile_linear(ordered, 0.75),
        "min": float(ordered[0]),
        "max": float(ordered[-1]),
    }


def _quantile_linear(ordered: np.ndarray, q: float) -> float:
    """Linear-interpolation quantile that tolerates infinite samples.

    Matches numpy's default convention on finite data but avoids the
    inf - inf = nan artifact when both bracketing order statistics are
    infinite (e.g. widths of unbounded intervals).
    """
    pos = q * (ordered.size - 1)
    i = int(math.floor(pos))
    frac = pos - i
    lo = ordered[i]
    hi = ordered[min(i + 1, ordered.size - 1)]
    if frac == 0.0 or lo == hi:
        return float(lo)
    return float(lo + frac * (hi - lo))


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _record_row(rec: RunRecord) -> list[str]:
    return [
        rec.benchmark,
        str(rec.degree),
        str(rec.oversampling),
        rec.method,
        rec.score,
        str(rec.seed),
        _fmt(rec.coverage),
        _fmt(rec.mean_width),
        _fmt(rec.median_width),
        _fmt(rec.rel_loo_error),
        _fmt(rec.n_unbounded),
        rec.failure or "",
    ]


def _jsonable(value):
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return value


def emit_report(report: CoverageReport, fmt: str, out_dir) -> list[Path]:
    """Writes the report files and returns their paths.

    csv: records.csv (one row per seed, columns per RECORD_COLUMNS) and
    aggregates.csv (keyed without seed). json: report.json mirroring both
    tables; non-finite reals are rendered as "inf"/"-inf"/"nan" strings to
    stay parseable by strict JSON readers. Output is byte-stable for a given
    report.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt == "csv":
        records_path = out_dir / "records.csv"
        with open(records_path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(RECORD_COLUMNS)
            for rec in report.records:
                writer.writerow(_record_row(rec))
        aggregates_path = out_dir / "aggregates.csv"
        with open(aggregates_path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(AGGREGATE_COLUMNS)
            for row in report.aggregates:
                writer.writerow([_fmt(row[col]) for col in AGGREGATE_COLUMNS])
        written += [records_path, aggregates_path]
    elif fmt == "json":
        doc = {
            "records": [
                {col: _jsonable(v) for col, v in zip(RECORD_COLUMNS, _typed_row(rec))}
                for rec in report.records
            ],
            "aggregates": [
                {col: _jsonable(row[col]) for col in AGGREGATE_COLUMNS}
                for row in report.aggregates
            ],
        }
        json_path = out_dir / "report.json"
        with open(json_path, "w") as fh:
            json.dump(doc, fh, indent=2, allow_nan=False)
            fh.write("\n")
        written.append(json_path)
    else:
        raise ValueError(f"unknown report format {fmt!r}; use 'csv' or 'json'")
    return written


def _typed_row(rec: RunRecord) -> list:
    return [
        rec.benchmark,
        rec.degree,
        rec.oversampling,
        rec.method,
        rec.score,
        rec.seed,
        rec.coverage,
        rec.mean_width,
        rec.median_width,
        rec.rel_loo_error,
        rec.n_unbounded,
        rec.failure or "",
    ]
