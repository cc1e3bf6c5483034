"""CSV ingestion, preprocessing, splits, and results persistence."""
from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "Dataset",
    "StandardizeParams",
    "load_csv",
    "standardize",
    "apply_standardize",
    "split",
    "save_results",
    "load_results",
    "write_manifest",
    "make_susy_fixture",
]


class DataError(ValueError):
    pass


class ParseError(DataError):
    pass


@dataclass(frozen=True)
class Dataset:
    inputs: np.ndarray           # (n, d_in)
    outputs: np.ndarray          # (n, d_v)
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    def __post_init__(self):
        if self.inputs.shape[0] != self.outputs.shape[0]:
            raise DataError("inputs and outputs are misaligned")
        if not (np.all(np.isfinite(self.inputs)) and np.all(np.isfinite(self.outputs))):
            raise DataError("dataset contains NaN or Inf")


def load_csv(
    path,
    label_column: int = 0,
    feature_columns: Sequence[int] | None = None,
    row_limit: int | None = None,
    skip_header: bool = False,
) -> Dataset:
    """Parse a numeric CSV into a Dataset.

    `feature_columns` defaults to the first 14 columns after the label.  A
    malformed cell raises ParseError naming the row and column; row_limit = 0
    is rejected.
    """
    path = Path(path)
    if row_limit is not None and row_limit < 1:
        raise DataError(f"row_limit must be >= 1, got {row_limit}")
    if not path.exists():
        raise IOError(f"no such file: {path}")
    rows: list[list[float]] = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        for i, raw in enumerate(reader):
            if skip_header and i == 0:
                continue
            if not raw:
                continue
            parsed = []
            for j, cell in enumerate(raw):
                try:
                    value = float(cell)
                except ValueError:
                    value = math.nan
                if not math.isfinite(value):
                    raise ParseError(f"malformed cell at row {i}, column {j}: {cell!r}")
                parsed.append(value)
            rows.append(parsed)
            if row_limit is not None and len(rows) >= row_limit:
                break
    if not rows:
        raise DataError(f"{path} contains no data rows")
    table = np.asarray(rows, dtype=float)
    n_cols = table.shape[1]
    if not 0 <= label_column < n_cols:
        raise DataError(f"label column {label_column} out of range for {n_cols} columns")
    if feature_columns is None:
        candidates = [c for c in range(n_cols) if c != label_column]
        feature_columns = candidates[:14]
    feature_columns = list(feature_columns)
    bad = [c for c in feature_columns if not 0 <= c < n_cols or c == label_column]
    if bad:
        raise DataError(f"invalid feature columns: {bad}")
    return Dataset(
        inputs=table[:, feature_columns],
        outputs=table[:, [label_column]],
        meta={"source": str(path), "label_column": label_column,
              "feature_columns": feature_columns},
    )


@dataclass(frozen=True)
class StandardizeParams:
    mean: np.ndarray
    scale: np.ndarray            # 1.0 where the column had zero variance
    constant_columns: tuple[int, ...]


def standardize(ds: Dataset) -> tuple[Dataset, StandardizeParams]:
    """Center and scale features to mean 0, variance 1 (population convention).

    Zero-variance columns are left unscaled and flagged in the params.
    """
    if ds.n < 2:
        raise DataError("standardize needs at least 2 rows")
    mean = ds.inputs.mean(axis=0)
    var = ds.inputs.var(axis=0)
    constant = np.flatnonzero(var == 0.0)
    scale = np.sqrt(np.where(var == 0.0, 1.0, var))
    params = StandardizeParams(
        mean=mean, scale=scale, constant_columns=tuple(int(c) for c in constant)
    )
    return apply_standardize(ds, params), params


def apply_standardize(ds: Dataset, params: StandardizeParams) -> Dataset:
    """Apply previously fitted parameters (e.g. train statistics to a test split)."""
    inputs = (ds.inputs - params.mean) / params.scale
    meta = dict(ds.meta)
    meta["standardized"] = True
    if params.constant_columns:
        meta["constant_columns"] = list(params.constant_columns)
    return Dataset(inputs=inputs, outputs=ds.outputs.copy(), meta=meta)


def split(ds: Dataset, n_train: int, n_test: int, seed: int) -> tuple[Dataset, Dataset]:
    """Disjoint seeded shuffle split."""
    if n_train < 0 or n_test < 0 or n_train + n_test > ds.n:
        raise DataError(
            f"cannot split {ds.n} rows into {n_train} train + {n_test} test"
        )
    perm = np.random.default_rng(seed).permutation(ds.n)
    tr, te = perm[:n_train], perm[n_train:n_train + n_test]
    meta_tr = dict(ds.meta, split="train", split_seed=seed)
    meta_te = dict(ds.meta, split="test", split_seed=seed)
    return (
        Dataset(ds.inputs[tr], ds.outputs[tr], meta_tr),
        Dataset(ds.inputs[te], ds.outputs[te], meta_te),
    )


def _format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def save_results(table: Sequence[dict] | Sequence[Sequence], path, header=None) -> None:
    """Deterministic CSV: RFC-4180 quoting, '.' decimals, LF endings, floats
    at 17 significant digits so values reparse bit-identically."""
    path = Path(path)
    rows = list(table)
    if rows and isinstance(rows[0], dict):
        header = list(rows[0].keys()) if header is None else list(header)
        body = [[row[k] for k in header] for row in rows]
    else:
        body = [list(r) for r in rows]
    if header is None:
        raise DataError("save_results needs a header")
    if any(len(row) != len(header) for row in body):
        raise DataError("table is not rectangular")
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in body:
                writer.writerow([_format_cell(c) for c in row])
    except OSError as exc:
        raise IOError(f"cannot write {path}: {exc}") from exc


def load_results(path) -> tuple[list[str], np.ndarray]:
    """Reload a results CSV written by save_results.

    Numeric cells round-trip exactly; non-numeric cells (e.g. a filter-name
    column) come back as NaN."""
    path = Path(path)

    def cell(c: str) -> float:
        try:
            return float(c)
        except ValueError:
            return math.nan

    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        body = [[cell(c) for c in row] for row in reader if row]
    return header, np.asarray(body, dtype=float)


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path, config: dict, seed: int, outputs: Sequence, extra: dict | None = None) -> None:
    """JSON manifest from which a run can be replayed: config echo, seed, and
    content hashes of every output file."""
    manifest = {
        "config": config,
        "seed": seed,
        "outputs": {Path(p).name: file_sha256(p) for p in outputs},
    }
    if extra:
        manifest.update(extra)
    with Path(path).open("w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def make_susy_fixture(path, n: int = 200, seed: int = 0, n_features: int = 18) -> None:
    """Emit a synthetic SUSY-like numeric CSV: binary label followed by
    standardized-looking feature columns (for CI; no network download)."""
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, n_features))
    logits = x[:, :4].sum(axis=1) / 2.0
    labels = (rng.uniform(size=n) < 1.0 / (1.0 + np.exp(-logits))).astype(float)
    rows = np.column_stack([labels, x])
    header = ["label"] + [f"f{i}" for i in range(1, n_features + 1)]
    save_results(rows.tolist(), path, header=header)
