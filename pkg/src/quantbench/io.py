"""CSV ingestion and persistence of configs, fitted params and results."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, serial
from .core import Matrix, Precision, as_labels
from .errors import ConfigError, DatasetError

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

MISSING_MARKERS = frozenset({"", "?", "na", "nan", "n/a", "null"})

RESULT_CSV_COLUMNS = (
    "technique", "precision", "accuracy_pct", "fit_time_s", "time_reduction_pct",
    "iterations_run", "converged", "time_min_s", "time_max_s",
    "n_train", "n_test", "dataset", "error",
)


@dataclass(frozen=True)
class DatasetSchema:
    feature_columns: tuple
    target_column: str
    rows_loaded: int
    rows_dropped: int
    label_mapping: dict = field(default_factory=dict)


def _parse_float(token: str):
    """Finite float or None for missing/unparseable/non-finite tokens."""
    t = token.strip()
    if t.lower() in MISSING_MARKERS:
        return None
    try:
        v = float(t)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def _read_rows(path) -> tuple[list, list]:
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        rows = list(reader)
    if not header or not any(h.strip() for h in header):
        raise DatasetError(f"{path}: missing header row")
    header = [h.strip() for h in header]
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    return header, rows


def _label_mapping(raw: list[str]) -> dict:
    distinct = sorted(set(raw))
    numeric = [_parse_float(v) for v in distinct]
    if all(v is not None for v in numeric):
        pairs = sorted(zip(numeric, distinct))
        if {p[0] for p in pairs} == {0.0, 1.0} and len(pairs) == 2:
            return {s: int(v) for v, s in pairs}
        distinct = [s for _, s in pairs]
    if len(distinct) != 2:
        raise DatasetError(
            f"target column must have exactly 2 distinct values, found {len(distinct)}"
            + (f": {distinct[:6]}" if distinct else "")
        )
    return {distinct[0]: 0, distinct[1]: 1}


def load_csv(path, target_column: str) -> tuple[Matrix, np.ndarray, DatasetSchema]:
    """Load a CSV with a header into an F64 feature matrix and 0/1 labels.

    Every non-target column is a feature, in header order. Rows holding a
    missing marker, an unparseable or non-finite token, or the wrong number
    of fields are dropped and counted. A non-0/1 two-valued target is mapped
    to 0/1 by sorted order (numeric order when all values are numbers).
    """
    header, rows = _read_rows(path)
    if target_column not in header:
        raise DatasetError(f"target column {target_column!r} not in header {header}")
    t = header.index(target_column)
    feat_idx = [i for i in range(len(header)) if i != t]

    kept_x, kept_y, dropped = [], [], 0
    for row in rows:
        if len(row) != len(header):
            dropped += 1
            continue
        target = row[t].strip()
        vals = [_parse_float(row[i]) for i in feat_idx]
        if target.lower() in MISSING_MARKERS or any(v is None for v in vals):
            dropped += 1
            continue
        kept_x.append(vals)
        kept_y.append(target)
    if not kept_x:
        raise DatasetError(f"{path}: no rows left after dropping {dropped} incomplete rows")

    mapping = _label_mapping(kept_y)
    y = as_labels([mapping[v] for v in kept_y])
    x = Matrix(np.array(kept_x, dtype=np.float64).reshape(len(kept_x), len(feat_idx)),
               Precision.F64)
    schema = DatasetSchema(tuple(header[i] for i in feat_idx), target_column,
                           len(kept_x), dropped, mapping)
    return x, y, schema


def read_matrix_csv(path, passthrough: str | None = None):
    """All columns except ``passthrough`` as an F64 matrix.

    Returns (matrix, feature names, passthrough values or None, rows dropped).
    """
    header, rows = _read_rows(path)
    if passthrough is not None and passthrough not in header:
        raise DatasetError(f"column {passthrough!r} not in header {header}")
    p = header.index(passthrough) if passthrough is not None else -1
    feat_idx = [i for i in range(len(header)) if i != p]
    data, extra, dropped = [], [], 0
    for row in rows:
        vals = [_parse_float(row[i]) for i in feat_idx] if len(row) == len(header) else [None]
        if any(v is None for v in vals):
            dropped += 1
            continue
        data.append(vals)
        if p >= 0:
            extra.append(row[p])
    if not data:
        raise DatasetError(f"{path}: no complete numeric rows")
    x = Matrix(np.array(data, dtype=np.float64), Precision.F64)
    return x, [header[i] for i in feat_idx], (extra if p >= 0 else None), dropped


def write_matrix_csv(path, x: Matrix, names, passthrough_name=None, passthrough=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(names) + ([passthrough_name] if passthrough is not None else []))
        as_text = str if x.precision is Precision.I32 else repr
        for i, row in enumerate(x.data.tolist()):
            cells = [as_text(v) for v in row]
            if passthrough is not None:
                cells.append(passthrough[i])
            w.writerow(cells)


# -- configs -------------------------------------------------------------------


def read_config(path):
    """Parse a TOML or JSON experiment config into an ExperimentConfig.

    A relative ``dataset`` path is resolved against the config's directory.
    """
    from .bench import ExperimentConfig

    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}", key=None)
    text = path.read_text(encoding="utf-8")
    try:
        if path.suffix.lower() == ".json":
            doc = json.loads(text)
        else:
            doc = tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"{path}: cannot parse config: {exc}") from exc
    if isinstance(doc, dict) and "dataset" in doc:
        ds = Path(str(doc["dataset"])).expanduser()
        if not ds.is_absolute():
            doc["dataset"] = str((path.parent / ds).resolve())
    return ExperimentConfig.from_dict(doc)


def write_config(cfg, path):
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2) + "\n", encoding="utf-8")


# -- fitted params -------------------------------------------------------------


def save_params(params, path):
    Path(path).write_text(json.dumps(params.to_dict(), indent=2) + "\n", encoding="utf-8")


def load_params(path):
    from .model import LRModel
    from .transforms import params_from_dict

    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(doc, dict) and doc.get("kind") == LRModel.kind:
        return LRModel.from_dict(doc)
    return params_from_dict(doc)


# -- results -------------------------------------------------------------------


def _fmt(value, spec):
    return "" if value is None else format(value, spec)


def result_csv_row(r) -> list[str]:
    acc = None if r.accuracy is None else 100.0 * r.accuracy
    return [
        r.technique.label, r.precision.value, _fmt(acc, ".2f"), _fmt(r.fit_time_s, ".4f"),
        _fmt(r.time_reduction_pct, ".2f"),
        "" if r.iterations_run is None else str(r.iterations_run),
        "" if r.converged is None else str(r.converged).lower(),
        _fmt(r.time_min_s, ".4f"), _fmt(r.time_max_s, ".4f"),
        str(r.n_train), str(r.n_test), r.dataset, r.error or "",
    ]


def results_document(results, config=None) -> dict:
    return serial.envelope("results", {
        "toolkit_version": __version__,
        "config": config.to_dict() if config is not None else None,
        "results": [r.to_dict() for r in results],
    })


def write_results(results, path, format: str | None = None, config=None):
    """Write results as CSV (2-decimal percentages, 4-decimal seconds) or JSON (exact floats)."""
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).lower()
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if fmt == "json":
            text = json.dumps(results_document(results, config), indent=2, allow_nan=False)
            path.write_text(text + "\n", encoding="utf-8")
        elif fmt == "csv":
            with open(path, "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(RESULT_CSV_COLUMNS)
                for r in results:
                    w.writerow(result_csv_row(r))
        else:
            raise ValueError(f"unknown results format {fmt!r}")
    except OSError as exc:
        raise DatasetError(f"cannot write results to {path}: {exc}") from exc


def read_results(path) -> list:
    """Read a JSON results document back into BenchResult objects."""
    from .bench import BenchResult

    doc = serial.open_envelope(json.loads(Path(path).read_text(encoding="utf-8")), "results")
    return [BenchResult.from_dict(d) for d in doc["results"]]
