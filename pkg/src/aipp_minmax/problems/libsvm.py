"""LIBSVM sparse text format: `label idx:val idx:val ...` with 1-based feature indices."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from ..core.errors import LibsvmFormatError
from ..core.schemas import Vector

logger = logging.getLogger(__name__)


def _parse_line(line_no: int, line: str) -> tuple[float, list[int], list[float]]:
    tokens = line.split()
    try:
        label = float(tokens[0])
    except ValueError:
        raise LibsvmFormatError(line_no, f"invalid label {tokens[0]!r}") from None
    cols: list[int] = []
    vals: list[float] = []
    for tok in tokens[1:]:
        idx, sep, val = tok.partition(":")
        if not sep:
            raise LibsvmFormatError(line_no, f"expected idx:val, got {tok!r}")
        try:
            col = int(idx)
            value = float(val)
        except ValueError:
            raise LibsvmFormatError(line_no, f"malformed feature {tok!r}") from None
        if col < 1:
            raise LibsvmFormatError(line_no, f"feature index {col} is not 1-based")
        cols.append(col - 1)
        vals.append(value)
    return label, cols, vals


def normalize_labels(raw: Vector, line_numbers: list[int]) -> Vector:
    """Map binary labels onto {-1, +1}: {-1, +1} is kept, otherwise the smaller value becomes -1."""
    distinct = np.unique(raw)
    if distinct.size > 2:
        third = distinct[2]
        first_bad = line_numbers[int(np.flatnonzero(raw == third)[0])]
        raise LibsvmFormatError(first_bad, f"labels are not binary: found {distinct.tolist()}")
    if set(distinct.tolist()) <= {-1.0, 1.0}:
        return raw.astype(float)
    if distinct.size == 1:
        value = float(distinct[0])
        if value == 0.0:
            return -np.ones_like(raw, dtype=float)
        raise LibsvmFormatError(line_numbers[0], f"cannot map the single label {value} to +-1")
    return np.where(raw == distinct[0], -1.0, 1.0)


def parse_libsvm(text: str, n_features: int | None = None) -> tuple[sp.csr_matrix, Vector]:
    """(features, labels in {-1, +1}); blank lines and `#` comments are skipped."""
    labels: list[float] = []
    line_numbers: list[int] = []
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        label, c, v = _parse_line(line_no, line)
        rows.extend([len(labels)] * len(c))
        cols.extend(c)
        vals.extend(v)
        labels.append(label)
        line_numbers.append(line_no)
    if not labels:
        raise LibsvmFormatError(max(len(text.splitlines()), 1), "no samples found")
    width = max(cols, default=-1) + 1
    if n_features is not None:
        if n_features < width:
            raise ValueError(f"n_features={n_features} is smaller than the largest index {width}")
        width = n_features
    features = sp.csr_matrix((vals, (rows, cols)), shape=(len(labels), max(width, 1)))
    features.sum_duplicates()
    features.sort_indices()
    return features, normalize_labels(np.asarray(labels), line_numbers)


def read_libsvm(path: str | Path, n_features: int | None = None) -> tuple[sp.csr_matrix, Vector]:
    return parse_libsvm(Path(path).read_text(), n_features)


def format_libsvm(features: sp.spmatrix, labels: Vector) -> str:
    csr = sp.csr_matrix(features)
    lines = []
    for i, label in enumerate(labels):
        start, end = csr.indptr[i], csr.indptr[i + 1]
        pairs = zip(csr.indices[start:end], csr.data[start:end], strict=True)
        feats = " ".join(f"{j + 1}:{np.format_float_positional(v, trim='-')}" for j, v in pairs)
        head = "+1" if label > 0 else "-1"
        lines.append(f"{head} {feats}".rstrip())
    return "\n".join(lines) + "\n"


def write_libsvm(path: str | Path, features: sp.spmatrix, labels: Vector) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_libsvm(features, labels))
    return path


def synthetic_libsvm(
    path: str | Path,
    n_samples: int = 100,
    n_features: int = 20,
    density: float = 0.3,
    seed: int = 0,
    flip: float = 0.1,
) -> Path:
    """Write a seeded linearly separable-plus-noise dataset; `flip` is the label-noise rate."""
    if n_samples < 1 or n_features < 1:
        raise ValueError("n_samples and n_features must be positive")
    rng = np.random.default_rng(seed)
    features = sp.random(n_samples, n_features, density, "csr", np.float64, rng).tocsr()
    w = rng.standard_normal(n_features)
    margin = features @ w - float(np.median(features @ w))
    labels = np.where(margin >= 0.0, 1.0, -1.0)
    labels[rng.random(n_samples) < flip] *= -1.0
    logger.info("wrote synthetic LIBSVM data %dx%d to %s", n_samples, n_features, path)
    return write_libsvm(path, features, labels)
