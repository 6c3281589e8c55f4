"""Experiment runner: split, scale, quantize, cast, timed fit, score.

Cells of the technique x precision grid run strictly one after another on a
single thread; BLAS pools are pinned to one thread while a fit is timed.
"""

from __future__ import annotations

import enum
import math
import statistics
import time
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np
from threadpoolctl import threadpool_limits

from . import model as lrmod
from . import transforms as tf
from .core import Matrix, Precision, as_labels, cast
from .errors import CellError, ClockError, ConfigError, ParameterError, StratificationError


class Technique(enum.Enum):
    QUANTILE = "QuantileTransform"
    ROUND = "RoundQuantize"
    KBINS = "KBinsDiscretize"
    NONE = "None"

    @property
    def label(self) -> str:
        """Name used in tables and charts."""
        return _LABELS[self]

    @classmethod
    def parse(cls, value) -> "Technique":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        for tech, names in _ALIASES.items():
            if key in names:
                return tech
        raise ValueError(f"unknown technique {value!r}")

    def __str__(self):
        return self.value


_LABELS = {
    Technique.QUANTILE: "QuantileTransformer",
    Technique.ROUND: "Numpy.round",
    Technique.KBINS: "KBinsDiscretizer",
    Technique.NONE: "Baseline",
}

_ALIASES = {
    Technique.QUANTILE: {"quantiletransform", "quantiletransformer", "qt", "quantile"},
    Technique.ROUND: {"roundquantize", "numpy.round", "round"},
    Technique.KBINS: {"kbinsdiscretize", "kbinsdiscretizer", "kbins", "bins"},
    Technique.NONE: {"none", "baseline"},
}

ROUND_MODES = ("decimals", "levels")


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str
    target_column: str
    test_fraction: float = 0.10
    split_seed: int = 0
    techniques: tuple = (Technique.QUANTILE, Technique.ROUND, Technique.KBINS)
    precisions: tuple = (Precision.F64, Precision.F32, Precision.I32)
    n_quantiles: int = tf.DEFAULT_N_QUANTILES
    n_bins: int = tf.DEFAULT_N_BINS
    decimals: int = tf.DEFAULT_DECIMALS
    n_levels: int = tf.DEFAULT_N_LEVELS
    round_mode: str = "decimals"
    timing_repetitions: int = 11
    lr: lrmod.LRConfig = field(default_factory=lrmod.LRConfig)
    name: str = ""

    def __post_init__(self):
        if not 0 < self.test_fraction < 1:
            raise ConfigError(f"test_fraction must be in (0, 1), got {self.test_fraction}",
                              key="test_fraction")
        if self.timing_repetitions < 1 or self.timing_repetitions % 2 == 0:
            raise ConfigError("timing_repetitions must be a positive odd count, got "
                              f"{self.timing_repetitions}", key="timing_repetitions")
        if self.round_mode not in ROUND_MODES:
            raise ConfigError(f"round_mode must be one of {ROUND_MODES}", key="round_mode")
        for key in ("n_quantiles", "n_bins", "n_levels"):
            if getattr(self, key) < 2:
                raise ConfigError(f"{key} must be >= 2", key=key)
        if self.decimals < 0:
            raise ConfigError("decimals must be >= 0", key="decimals")
        object.__setattr__(self, "techniques", tuple(Technique.parse(t) for t in self.techniques))
        object.__setattr__(self, "precisions", tuple(Precision.parse(p) for p in self.precisions))
        if not self.name:
            object.__setattr__(self, "name", Path(self.dataset).stem)

    def with_(self, **changes) -> "ExperimentConfig":
        doc = {f.name: getattr(self, f.name) for f in fields(self)}
        doc.update(changes)
        return ExperimentConfig(**doc)

    def to_dict(self) -> dict:
        doc = {f.name: getattr(self, f.name) for f in fields(self)}
        doc["techniques"] = [t.value for t in self.techniques]
        doc["precisions"] = [p.value for p in self.precisions]
        doc["lr"] = self.lr.to_dict()
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a mapping of keys to values")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ConfigError(f"unknown config key {unknown[0]!r}", key=unknown[0])
        for key in ("dataset", "target_column"):
            if key not in doc:
                raise ConfigError(f"config is missing required key {key!r}", key=key)
        doc = dict(doc)
        try:
            doc["lr"] = lrmod.LRConfig.from_dict(dict(doc.get("lr", {})))
        except (ParameterError, TypeError) as exc:
            raise ConfigError(f"bad lr section: {exc}", key="lr") from exc
        for key, parse in (("techniques", Technique.parse), ("precisions", Precision.parse)):
            if key in doc:
                try:
                    doc[key] = tuple(parse(v) for v in doc[key])
                except ValueError as exc:
                    raise ConfigError(str(exc), key=key) from exc
        doc["dataset"] = str(doc["dataset"])
        return cls(**doc)


CONFIG_KEYS = {
    "dataset": "path to the CSV file (required)",
    "target_column": "name of the binary label column (required)",
    "name": "dataset label in reports (default: file stem)",
    "test_fraction": "held-out fraction, default 0.10",
    "split_seed": "seed of the stratified split, default 0",
    "techniques": "list of QuantileTransform, RoundQuantize, KBinsDiscretize, None",
    "precisions": "list of F64, F32, I32 (F64 is the baseline)",
    "n_quantiles": "quantile transform resolution, default 100",
    "n_bins": "k-bins count, default 10",
    "decimals": "decimal places for RoundQuantize, default 4",
    "n_levels": "level count for round_mode = levels, default 4096",
    "round_mode": "'decimals' (round to decimal places) or 'levels'",
    "timing_repetitions": "odd number of timed fits per cell, default 11",
    "lr": "table: l2_strength, learning_rate, max_iters, tolerance, seed, momentum",
}


@dataclass
class BenchResult:
    technique: Technique
    precision: Precision
    accuracy: float | None
    fit_time_s: float | None
    time_min_s: float | None = None
    time_max_s: float | None = None
    time_reduction_pct: float | None = None
    iterations_run: int | None = None
    converged: bool | None = None
    dataset: str = ""
    n_train: int = 0
    n_test: int = 0
    error: str | None = None
    fitted: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def is_baseline(self) -> bool:
        return self.technique is Technique.NONE and self.precision is Precision.F64

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_dict(self) -> dict:
        doc = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "fitted"}
        doc["technique"] = self.technique.value
        doc["precision"] = self.precision.value
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "BenchResult":
        doc = dict(doc)
        doc["technique"] = Technique.parse(doc["technique"])
        doc["precision"] = Precision.parse(doc["precision"])
        return cls(**doc)


# -- splitting -----------------------------------------------------------------


class Split(NamedTuple):
    x_train: Matrix
    y_train: np.ndarray
    x_test: Matrix
    y_test: np.ndarray
    train_index: np.ndarray
    test_index: np.ndarray


class _Rng:
    """Uniform integers from PCG64 raw 64-bit outputs.

    Bounded draws use rejection sampling on the raw words rather than
    numpy's sampling routines, so the permutation is fixed by the PCG64
    stream alone.
    """

    def __init__(self, seed: int):
        self._bits = np.random.PCG64(np.random.SeedSequence(int(seed)))

    def below(self, bound: int) -> int:
        limit = (1 << 64) - (1 << 64) % bound
        while True:
            r = int(self._bits.random_raw())
            if r < limit:
                return r % bound

    def shuffle(self, items: list) -> list:
        items = list(items)
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]
        return items


def held_out_count(n: int, test_fraction: float) -> int:
    """Number of held-out rows: ceil(fraction * n), ignoring float fuzz."""
    return math.ceil(test_fraction * n - 1e-9)


def split_indices(y, test_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Stratified train/test indices, each sorted ascending.

    The held-out total is ceil(fraction * n). It is shared between the
    classes by largest remainder (ties go to the larger class, then the
    lower label). Each class is shuffled with a PCG64 stream seeded by
    ``seed`` and its first rows go to the test set.
    """
    y = as_labels(y)
    if not 0 < test_fraction < 1:
        raise ParameterError(f"test_fraction must be in (0, 1), got {test_fraction}")
    n = y.shape[0]
    n_test = held_out_count(n, test_fraction)
    if n_test < 1 or n_test >= n:
        raise StratificationError(f"{n} rows cannot give nonempty train and test sets")
    classes = [0, 1]
    members = {c: np.flatnonzero(y == c).tolist() for c in classes}
    exact = {c: n_test * len(members[c]) / n for c in classes}
    quota = {c: math.floor(exact[c] + 1e-9) for c in classes}
    left = n_test - sum(quota.values())
    order = sorted(classes, key=lambda c: (-(exact[c] - quota[c]), -len(members[c]), c))
    for c in order[:left]:
        quota[c] += 1
    for c in classes:
        if len(members[c]) - quota[c] < 1:
            raise StratificationError(f"class {c} would be absent from the training split")

    rng = _Rng(seed)
    train, test = [], []
    for c in classes:
        perm = rng.shuffle(members[c])
        test.extend(perm[:quota[c]])
        train.extend(perm[quota[c]:])
    return np.array(sorted(train), dtype=np.intp), np.array(sorted(test), dtype=np.intp)


def split(x: Matrix, y, test_fraction: float = 0.10, seed: int = 0) -> Split:
    y = as_labels(y, x.rows)
    tr, te = split_indices(y, test_fraction, seed)
    return Split(x.take_rows(tr), as_labels(y[tr]), x.take_rows(te), as_labels(y[te]), tr, te)


# -- timing --------------------------------------------------------------------


@dataclass(frozen=True)
class Timing:
    median_s: float
    min_s: float
    max_s: float
    samples: tuple


def time_fit(fn: Callable[[], object], repetitions: int = 11) -> tuple[Timing, object]:
    """Median wall-clock time of ``fn`` over ``repetitions`` runs.

    One untimed warm-up call comes first. Runs use ``perf_counter`` with
    BLAS/OpenMP pools limited to one thread. Returns the timing and the
    value of the last call.
    """
    if repetitions < 1 or repetitions % 2 == 0:
        raise ParameterError(f"repetitions must be a positive odd count, got {repetitions}")
    samples = []
    with threadpool_limits(limits=1):
        result = fn()
        for _ in range(repetitions):
            t0 = time.perf_counter()
            result = fn()
            dt = time.perf_counter() - t0
            if not dt > 0:
                raise ClockError(f"non-positive duration {dt!r} from perf_counter")
            samples.append(dt)
    return Timing(statistics.median(samples), min(samples), max(samples), tuple(samples)), result


def time_reduction_pct(fit_time_s: float, baseline_fit_time_s: float) -> float:
    return 100.0 * (1.0 - fit_time_s / baseline_fit_time_s)


# -- cells and grid ------------------------------------------------------------


@dataclass(frozen=True)
class Dataset:
    x: Matrix
    y: np.ndarray
    schema: object = None


def load_dataset(cfg: ExperimentConfig) -> Dataset:
    from .io import load_csv

    x, y, schema = load_csv(cfg.dataset, cfg.target_column)
    return Dataset(x, y, schema)


def fit_technique(cfg: ExperimentConfig, technique: Technique, x_train: Matrix):
    if technique is Technique.QUANTILE:
        return tf.fit_quantile(x_train, cfg.n_quantiles)
    if technique is Technique.ROUND:
        return tf.fit_round(x_train, cfg.decimals, cfg.n_levels)
    if technique is Technique.KBINS:
        return tf.fit_bins(x_train, cfg.n_bins)
    return None


def apply_technique(cfg: ExperimentConfig, technique: Technique, params, x: Matrix) -> Matrix:
    if technique is Technique.QUANTILE:
        return tf.apply_quantile(params, x)
    if technique is Technique.ROUND:
        if cfg.round_mode == "levels":
            return tf.level_quantize(params, x)
        return tf.round_quantize(x, params.decimals)
    if technique is Technique.KBINS:
        return tf.apply_bins(params, x)
    return x


def run_cell(cfg: ExperimentConfig, technique, precision, dataset: Dataset | None = None,
             baseline_time_s: float | None = None) -> BenchResult:
    """Run one (technique, precision) cell end to end.

    Transform statistics come from training rows only. Only the model fit
    is timed. Stage failures are re-raised as :class:`CellError`.
    """
    technique = Technique.parse(technique)
    precision = Precision.parse(precision)
    stage = "load"
    try:
        data = dataset if dataset is not None else load_dataset(cfg)
        stage = "split"
        sp = split(data.x, data.y, cfg.test_fraction, cfg.split_seed)
        stage = "scale"
        scaler = tf.fit_scaler(sp.x_train)
        tr = tf.apply_scaler(scaler, sp.x_train)
        te = tf.apply_scaler(scaler, sp.x_test)
        stage = "transform"
        params = fit_technique(cfg, technique, tr)
        tr = apply_technique(cfg, technique, params, tr)
        te = apply_technique(cfg, technique, params, te)
        stage = "cast"
        tr = cast(tr, precision)
        te = cast(te, precision)
        stage = "fit"
        timing, fitted = time_fit(lambda: lrmod.fit(tr, sp.y_train, cfg.lr), cfg.timing_repetitions)
        stage = "score"
        acc = lrmod.accuracy(lrmod.predict(fitted, te), sp.y_test)
    except Exception as exc:
        raise CellError(technique.value, precision.value, stage, exc) from exc

    result = BenchResult(
        technique=technique,
        precision=precision,
        accuracy=acc,
        fit_time_s=timing.median_s,
        time_min_s=timing.min_s,
        time_max_s=timing.max_s,
        iterations_run=fitted.iterations_run,
        converged=fitted.converged,
        dataset=cfg.name,
        n_train=sp.x_train.rows,
        n_test=sp.x_test.rows,
        fitted={"scaler": scaler.to_dict(),
                "technique": params.to_dict() if params is not None else None},
    )
    if baseline_time_s is not None:
        result.time_reduction_pct = time_reduction_pct(result.fit_time_s, baseline_time_s)
    elif result.is_baseline:
        result.time_reduction_pct = 0.0
    return result


def grid_cells(cfg: ExperimentConfig) -> list[tuple[Technique, Precision]]:
    """Baseline first, then technique-major / precision-minor non-F64 cells."""
    cells = [(Technique.NONE, Precision.F64)]
    for tech in cfg.techniques:
        for prec in cfg.precisions:
            if prec is not Precision.F64:
                cells.append((tech, prec))
    return cells


def run_grid(cfg: ExperimentConfig, allow_partial: bool = False,
             dataset: Dataset | None = None) -> list[BenchResult]:
    """All cells of the grid, with time reductions against the baseline.

    A failing cell aborts the grid unless ``allow_partial``; then it is kept
    as a result with ``error`` set and empty measurements. A failing baseline
    always aborts.
    """
    data = dataset if dataset is not None else load_dataset(cfg)
    cells = grid_cells(cfg)
    base = run_cell(cfg, *cells[0], dataset=data)
    results = [base]
    for tech, prec in cells[1:]:
        try:
            results.append(run_cell(cfg, tech, prec, dataset=data,
                                    baseline_time_s=base.fit_time_s))
        except CellError as exc:
            if not allow_partial:
                raise
            results.append(BenchResult(tech, prec, None, None, dataset=cfg.name, error=str(exc)))
    return results


def sweep(cfg: ExperimentConfig, technique, values, precisions=None,
          dataset: Dataset | None = None) -> list[tuple[int, BenchResult]]:
    """Rerun one technique over a grid of its resolution parameter.

    The swept parameter is ``n_quantiles`` (QuantileTransform), ``n_bins``
    (KBinsDiscretize) or ``decimals`` / ``n_levels`` (RoundQuantize).
    """
    technique = Technique.parse(technique)
    if not values:
        raise ParameterError("sweep needs at least one parameter value")
    key = sweep_parameter(cfg, technique)
    data = dataset if dataset is not None else load_dataset(cfg)
    out = []
    for prec in precisions or cfg.precisions:
        for v in values:
            cell_cfg = cfg.with_(**{key: int(v)})
            out.append((int(v), run_cell(cell_cfg, technique, prec, dataset=data)))
    return out


def sweep_parameter(cfg: ExperimentConfig, technique: Technique) -> str:
    if technique is Technique.QUANTILE:
        return "n_quantiles"
    if technique is Technique.KBINS:
        return "n_bins"
    if technique is Technique.ROUND:
        return "n_levels" if cfg.round_mode == "levels" else "decimals"
    raise ParameterError("the baseline has no parameter to sweep")
