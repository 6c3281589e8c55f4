"""Small fixtures-on-disk shared by several test modules."""

from pathlib import Path

import numpy as np


def write_csv(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8")
    return path


def synthetic_csv(path: Path, n: int = 120, d: int = 4, seed: int = 0) -> Path:
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, d)) * [1.0, 10.0, 0.1, 3.0][:d] + 5.0
    y = ((x - 5.0) @ rng.normal(size=d) + rng.logistic(size=n) > 0).astype(int)
    lines = [",".join([f"f{j}" for j in range(d)] + ["label"])]
    lines += [",".join([repr(float(v)) for v in row] + [str(t)]) for row, t in zip(x, y)]
    return write_csv(path, "\n".join(lines) + "\n")
