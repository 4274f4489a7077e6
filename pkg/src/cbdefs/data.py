"""Loading, validation, splitting, sharding and projection of binary-class datasets.

Datasets are immutable after construction: feature matrices are dense float64
arrays or CSR sparse matrices, labels are 0/1 int8 vectors.  All routines are
deterministic given their seed.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy import sparse


class DataFormatError(ValueError):
    """A file violated the expected format; the message carries row/column context."""


# Default label-token mapping for CSV files.
POSITIVE_TOKENS = ("1", "+1")
NEGATIVE_TOKENS = ("0", "-1")


@dataclass(frozen=True)
class Dataset:
    features: object  # (rows, n_features) float64 ndarray or CSR matrix
    labels: np.ndarray
    feature_names: tuple[str, ...] | None = None

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int8)
        object.__setattr__(self, "labels", labels)
        feats = self.features
        if not sparse.issparse(feats):
            feats = np.asarray(feats, dtype=np.float64)
            if feats.ndim != 2:
                raise ValueError("features must be a 2-D matrix")
            object.__setattr__(self, "features", feats)
        if feats.shape[0] != labels.shape[0]:
            raise ValueError(
                f"row mismatch: {feats.shape[0]} feature rows vs {labels.shape[0]} labels"
            )
        if labels.size and not np.isin(labels, (0, 1)).all():
            raise ValueError("labels must contain only 0 and 1")
        if self.n_features < 1:
            raise ValueError("datasets need at least one feature column")
        if self.feature_names is not None:
            names = tuple(self.feature_names)
            if len(names) != self.n_features:
                raise ValueError("feature_names length must equal the feature count")
            object.__setattr__(self, "feature_names", names)

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def is_sparse(self) -> bool:
        return sparse.issparse(self.features)

    def dense_features(self) -> np.ndarray:
        if self.is_sparse:
            return np.asarray(self.features.todense(), dtype=np.float64)
        return self.features

    def class_counts(self) -> tuple[int, int]:
        pos = int(self.labels.sum())
        return self.n_rows - pos, pos

    def take_rows(self, rows: np.ndarray) -> "Dataset":
        return Dataset(self.features[rows], self.labels[rows], self.feature_names)


@dataclass(frozen=True)
class DataShard:
    """One island's slice of the training set."""

    island_id: int
    subset: Dataset


def _parse_label_token(token: str, positive, negative, row: int, col_name: str) -> int:
    token = token.strip()
    if token in positive:
        return 1
    if token in negative:
        return 0
    raise DataFormatError(
        f"row {row}, column {col_name}: label {token!r} not in {positive + negative}"
    )


def load_csv(
    path,
    label_column,
    *,
    has_header: bool | None = None,
    positive_tokens=POSITIVE_TOKENS,
    negative_tokens=NEGATIVE_TOKENS,
) -> Dataset:
    """Load a comma-delimited dense dataset.

    ``label_column`` is a header name (requires a header row) or a 0-based
    column index.  ``has_header`` defaults to True when the label is named,
    False when it is an index.  Errors name the offending data row (1-based)
    and column.
    """
    by_name = isinstance(label_column, str)
    if has_header is None:
        has_header = by_name
    if by_name and not has_header:
        raise DataFormatError("a named label column requires a header row")

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows:
        raise DataFormatError(f"{path}: empty file")

    header = None
    if has_header:
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
    if not rows:
        raise DataFormatError(f"{path}: no data rows")

    width = len(rows[0])
    if by_name:
        if label_column not in header:
            raise DataFormatError(f"unknown label column {label_column!r}")
        label_idx = header.index(label_column)
    else:
        label_idx = int(label_column)
        if not 0 <= label_idx < width:
            raise DataFormatError(f"label column index {label_idx} out of range for width {width}")

    def col_name(j: int) -> str:
        return header[j] if header is not None else f"column {j}"

    n_features = width - 1
    if n_features < 1:
        raise DataFormatError(f"{path}: needs at least one feature column besides the label")

    features = np.empty((len(rows), n_features), dtype=np.float64)
    labels = np.empty(len(rows), dtype=np.int8)
    for r, cells in enumerate(rows, start=1):
        if len(cells) != width:
            raise DataFormatError(f"row {r}: expected {width} cells, got {len(cells)}")
        labels[r - 1] = _parse_label_token(
            cells[label_idx], positive_tokens, negative_tokens, r, col_name(label_idx)
        )
        k = 0
        for j, cell in enumerate(cells):
            if j == label_idx:
                continue
            try:
                value = float(cell)
            except ValueError:
                raise DataFormatError(
                    f"row {r}, column {col_name(j)}: non-numeric cell {cell.strip()!r}"
                ) from None
            if not np.isfinite(value):
                raise DataFormatError(f"row {r}, column {col_name(j)}: non-finite value {cell!r}")
            features[r - 1, k] = value
            k += 1

    names = None
    if header is not None:
        names = tuple(h for j, h in enumerate(header) if j != label_idx)
    return Dataset(features, labels, names)


def write_csv(ds: Dataset, path, label_name: str = "label") -> None:
    """Write a dense dataset with a header; floats use shortest round-trip repr."""
    names = ds.feature_names or tuple(f"f{j}" for j in range(ds.n_features))
    feats = ds.dense_features()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(names) + [label_name])
        for i in range(ds.n_rows):
            writer.writerow([repr(float(v)) for v in feats[i]] + [int(ds.labels[i])])


def load_libsvm(path, n_features="auto") -> Dataset:
    """Load a sparse "label idx:val ..." file with 1-based, strictly increasing indices.

    Labels in {-1, +1} or {0, 1} map to {0, 1}.  ``n_features`` fixes the
    width; "auto" uses the maximum observed index.
    """
    data: list[float] = []
    indices: list[int] = []
    indptr = [0]
    labels = []
    max_index = 0
    fixed_n = None if n_features == "auto" else int(n_features)

    with open(path, encoding="utf-8") as fh:
        for r, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            tokens = line.split()
            try:
                raw = float(tokens[0])
            except ValueError:
                raise DataFormatError(f"line {r}: unparseable label {tokens[0]!r}") from None
            if raw == 1.0:
                labels.append(1)
            elif raw in (0.0, -1.0):
                labels.append(0)
            else:
                raise DataFormatError(f"line {r}: label {tokens[0]!r} not in {{-1,+1}} or {{0,1}}")
            prev = 0
            for tok in tokens[1:]:
                try:
                    idx_s, val_s = tok.split(":", 1)
                    idx = int(idx_s)
                    val = float(val_s)
                except ValueError:
                    raise DataFormatError(f"line {r}: unparseable token {tok!r}") from None
                if idx <= prev:
                    raise DataFormatError(
                        f"line {r}: index {idx} not strictly increasing after {prev}"
                    )
                if fixed_n is not None and idx > fixed_n:
                    raise DataFormatError(f"line {r}: index {idx} exceeds n_features={fixed_n}")
                indices.append(idx - 1)
                data.append(val)
                prev = idx
            max_index = max(max_index, prev)
            indptr.append(len(indices))

    if not labels:
        raise DataFormatError(f"{path}: no data lines")
    width = fixed_n if fixed_n is not None else max_index
    if width < 1:
        raise DataFormatError(f"{path}: no feature indices observed and n_features is auto")
    matrix = sparse.csr_matrix(
        (np.asarray(data), np.asarray(indices, dtype=np.int32), np.asarray(indptr, dtype=np.int32)),
        shape=(len(labels), width),
    )
    return Dataset(matrix, np.asarray(labels, dtype=np.int8))


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def stratified_split(ds: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Per-class split: round-half-up(count * fraction) rows go to test.

    Sampling is uniform without replacement from a seeded generator; row
    order within each side follows the original dataset.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    test_rows: list[np.ndarray] = []
    for cls in (0, 1):
        idx = np.flatnonzero(ds.labels == cls)
        n_test = _round_half_up(idx.size * test_fraction)
        if idx.size < 2 or n_test < 1 or n_test >= idx.size:
            raise ValueError(
                f"class {cls} too small for the per-class minimum: "
                f"{idx.size} rows, {n_test} requested for test"
            )
        test_rows.append(rng.choice(idx, size=n_test, replace=False))
    test_mask = np.zeros(ds.n_rows, dtype=bool)
    test_mask[np.concatenate(test_rows)] = True
    return ds.take_rows(np.flatnonzero(~test_mask)), ds.take_rows(np.flatnonzero(test_mask))


def shard(train: Dataset, k: int, seed: int) -> list[DataShard]:
    """Stratified, disjoint, near-equal shards via seeded shuffle + round-robin."""
    neg, pos = train.class_counts()
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > min(neg, pos):
        raise ValueError(f"k={k} exceeds the smallest class count {min(neg, pos)}")
    rng = np.random.default_rng(seed)
    assign: list[list[int]] = [[] for _ in range(k)]
    for cls in (0, 1):
        idx = np.flatnonzero(train.labels == cls)
        perm = rng.permutation(idx)
        for pos_i, row in enumerate(perm):
            assign[pos_i % k].append(int(row))
    return [
        DataShard(i, train.take_rows(np.asarray(sorted(rows), dtype=np.intp)))
        for i, rows in enumerate(assign)
    ]


def project(ds: Dataset, mask: np.ndarray) -> Dataset:
    """Column selection by bit mask; labels unchanged, column order preserved."""
    mask = np.asarray(mask)
    if mask.shape[0] != ds.n_features:
        raise ValueError(f"mask length {mask.shape[0]} != feature count {ds.n_features}")
    cols = np.flatnonzero(mask)
    if cols.size == 0:
        raise ValueError("cannot project with an empty mask")
    names = None
    if ds.feature_names is not None:
        names = tuple(ds.feature_names[j] for j in cols)
    return Dataset(ds.features[:, cols], ds.labels, names)


@dataclass(frozen=True)
class ColumnStats:
    mean: np.ndarray
    std: np.ndarray


def standardize(train: Dataset, test: Dataset) -> tuple[Dataset, Dataset, ColumnStats]:
    """Center/scale both sets by the training columns' mean and (population) std.

    Zero-variance columns are shifted by their mean only and report std 0.
    Sparse inputs are densified: centering destroys sparsity anyway.
    """
    if train.n_rows == 0:
        raise ValueError("train must be nonempty")
    if train.n_features != test.n_features:
        raise ValueError("train and test must share the feature count")
    x_train = train.dense_features()
    x_test = test.dense_features()
    mean = x_train.mean(axis=0)
    std = x_train.std(axis=0)
    scale = np.where(std > 0.0, std, 1.0)
    out_train = Dataset((x_train - mean) / scale, train.labels, train.feature_names)
    out_test = Dataset((x_test - mean) / scale, test.labels, test.feature_names)
    return out_train, out_test, ColumnStats(mean, std)
