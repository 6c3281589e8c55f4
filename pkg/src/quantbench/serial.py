"""Versioned JSON envelope shared by fitted transforms, models and results.

Floats are written as decimal strings with 17 significant digits, which
round-trips every IEEE double exactly.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError

FORMAT = "quantbench"
VERSION = 1


def enc(x) -> str:
    return format(float(x), ".17g")


def dec(s) -> float:
    return float(s)


def enc_list(values) -> list:
    return [enc(v) for v in np.asarray(values, dtype=np.float64).ravel()]


def dec_array(values) -> np.ndarray:
    return np.array([dec(v) for v in values], dtype=np.float64)


def envelope(kind: str, body: dict) -> dict:
    return {"format": FORMAT, "version": VERSION, "kind": kind, **body}


def open_envelope(doc: dict, kind: str) -> dict:
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise ConfigError("not a quantbench document", key="format")
    if doc.get("version") != VERSION:
        raise ConfigError(
            f"unsupported document version {doc.get('version')!r}", key="version"
        )
    if doc.get("kind") != kind:
        raise ConfigError(f"expected a {kind!r} document, got {doc.get('kind')!r}",
                          key="kind")
    return doc
