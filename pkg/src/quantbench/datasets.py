"""Fetch the two public benchmark datasets as CSV files.

* ``wdbc.csv``: Wisconsin Diagnostic Breast Cancer, 569 rows, 30 features,
  ``diagnosis`` in {B, M}. Written from the copy of the UCI file that ships
  inside scikit-learn.
* ``heart.csv``: Cleveland heart-disease data, 303 rows (6 with a missing
  ``ca``/``thal`` marked ``?``), 13 features in the UCI numeric coding and a
  0/1 ``target``. Extracted from the orange3 wheel on PyPI, which bundles the
  table; the wheel and the extracted table are SHA-256 pinned.

Files are cached in ``$QUANTBENCH_DATA`` (default ``~/.cache/quantbench``).
"""

from __future__ import annotations

import csv
import hashlib
import io as _io
import os
import urllib.request
import zipfile
from pathlib import Path

from .errors import DatasetError

ORANGE_WHEEL_URL = (
    "https://files.pythonhosted.org/packages/4c/40/"
    "258c24c83149eb1d4d08ab2a375170666f9ad802a06ee85be7ce747df940/"
    "orange3-3.39.0-cp310-cp310-manylinux_2_27_x86_64.manylinux_2_28_x86_64.whl"
)
ORANGE_WHEEL_SHA256 = "4dcfe3234c6cfea7d4cb5fa6a7d1cb92355d73d778d565c1f5b85178b216a941"
HEART_TAB_MEMBER = "Orange/datasets/heart_disease.tab"
HEART_TAB_SHA256 = "954e44e3d93a97682b5466c7ea166e16f376f8dd93deef5855f511734e4d6224"
WDBC_CSV_SHA256 = "85ccf4c1e5ec3108e00295ade644cdfb50406597893197f21cdd15a34af23470"
HEART_CSV_SHA256 = "ed78f1a7b8d25d5d368a835ee6d45eca7eea8a78483760971070a30b6e2728e9"

HEART_COLUMNS = ("age", "sex", "cp", "trestbps", "chol", "fbs", "restecg", "thalach",
                 "exang", "oldpeak", "slope", "ca", "thal", "target")

# UCI processed.cleveland.data coding of the categorical fields
_HEART_CODES = {
    1: {"female": "0", "male": "1"},
    2: {"typical ang": "1", "atypical ang": "2", "non-anginal": "3", "asymptomatic": "4"},
    6: {"normal": "0", "ST-T abnormal": "1", "left vent hypertrophy": "2"},
    10: {"upsloping": "1", "flat": "2", "downsloping": "3"},
    12: {"normal": "3", "fixed defect": "6", "reversable defect": "7"},
}


def data_dir() -> Path:
    return Path(os.environ.get("QUANTBENCH_DATA", Path.home() / ".cache" / "quantbench"))


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _check(data: bytes, expected: str | None, what: str):
    if expected is not None and _sha256(data) != expected:
        raise DatasetError(f"checksum mismatch for {what}: got {_sha256(data)}")


def _csv_bytes(header, rows) -> bytes:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue().encode("utf-8")


def wdbc_csv_bytes() -> bytes:
    from sklearn.datasets import load_breast_cancer

    bunch = load_breast_cancer()
    header = [n.replace(" ", "_") for n in bunch.feature_names] + ["diagnosis"]
    # sklearn codes malignant as 0, benign as 1
    rows = [[repr(float(v)) for v in x] + ["B" if t == 1 else "M"]
            for x, t in zip(bunch.data, bunch.target)]
    return _csv_bytes(header, rows)


def heart_csv_bytes(tab_text: str) -> bytes:
    lines = tab_text.splitlines()
    rows = []
    for line in lines[3:]:  # three header lines: names, types, roles
        if not line.strip():
            continue
        cells = line.split("\t")
        if len(cells) != len(HEART_COLUMNS):
            raise DatasetError(f"unexpected heart table row: {line!r}")
        out = []
        for j, cell in enumerate(cells):
            cell = cell.strip()
            if cell in ("?", ""):
                out.append("?")
            elif j in _HEART_CODES:
                out.append(_HEART_CODES[j][cell])
            else:
                out.append(cell)
        rows.append(out)
    return _csv_bytes(HEART_COLUMNS, rows)


def _download(url: str, timeout: float = 300.0) -> bytes:
    with urllib.request.urlopen(url, timeout=timeout) as resp:
        return resp.read()


def heart_tab_text(wheel: bytes | None = None) -> str:
    if wheel is None:
        wheel = _download(ORANGE_WHEEL_URL)
    _check(wheel, ORANGE_WHEEL_SHA256, "orange3 wheel")
    with zipfile.ZipFile(_io.BytesIO(wheel)) as zf:
        raw = zf.read(HEART_TAB_MEMBER)
    _check(raw, HEART_TAB_SHA256, HEART_TAB_MEMBER)
    return raw.decode("utf-8")


def fetch_wdbc(dest: Path | None = None) -> Path:
    path = Path(dest or data_dir()) / "wdbc.csv"
    if not path.is_file():
        data = wdbc_csv_bytes()
        _check(data, WDBC_CSV_SHA256, "wdbc.csv")
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
    return path


def fetch_heart(dest: Path | None = None, wheel: bytes | None = None) -> Path:
    path = Path(dest or data_dir()) / "heart.csv"
    if not path.is_file():
        data = heart_csv_bytes(heart_tab_text(wheel))
        _check(data, HEART_CSV_SHA256, "heart.csv")
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
    return path


def fetch_all(dest: Path | None = None) -> dict:
    return {"wdbc": fetch_wdbc(dest), "heart": fetch_heart(dest)}
