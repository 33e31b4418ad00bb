import os
import struct

import numpy as np

from dataclasses import dataclass, field
from typing import List, Optional, Sequence
from .utils import *

#   --------------------------------------------------------------------------------------------------------------------
#
#   Feature containers, [0, 1] min-max normalization, centroids and on-disk feature / normalizer formats
#
#   --------------------------------------------------------------------------------------------------------------------


def _block_offsets() -> dict:
    offsets, start = dict(), 0
    for name, dim in FEATURE_BLOCKS:
        offsets[name] = (start, start + dim)
        start += dim
    return offsets


FEATURE_BLOCK_OFFSETS = _block_offsets()


@dataclass
class FeatureMatrix:
    rows: np.ndarray  # (n_frames, dim)
    labels: Optional[np.ndarray] = None
    utterance_ids: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.rows = np.atleast_2d(np.asarray(self.rows, dtype=np.float64))
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int8)
            if self.labels.shape[0] != self.rows.shape[0]:
                raise LabelLengthMismatch("feature matrix", self.labels.shape[0], self.rows.shape[0])

    def __len__(self) -> int:
        return self.rows.shape[0]

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    @property
    def is_labeled(self) -> bool:
        return self.labels is not None

    def block(self, name: str) -> np.ndarray:
        start, stop = FEATURE_BLOCK_OFFSETS[name]
        return self.rows[:, start:stop]

    def unlabeled(self) -> "FeatureMatrix":
        return FeatureMatrix(self.rows, None, list(self.utterance_ids))

    @staticmethod
    def concat(matrices: Sequence["FeatureMatrix"], keep_labels: bool = True) -> "FeatureMatrix":
        matrices = [m for m in matrices if len(m)]
        if not matrices:
            return FeatureMatrix(np.empty((0, FEATURE_DIM)))
        labels = None
        if keep_labels and all(m.is_labeled for m in matrices):
            labels = np.concatenate([m.labels for m in matrices])
        ids = [uid for m in matrices for uid in m.utterance_ids]
        return FeatureMatrix(np.vstack([m.rows for m in matrices]), labels, ids)


@dataclass(frozen=True)
class Normalizer:
    minimum: np.ndarray
    maximum: np.ndarray
    source: str = ""

    @property
    def dim(self) -> int:
        return self.minimum.shape[0]

    @property
    def constant(self) -> np.ndarray:
        return self.maximum == self.minimum


@dataclass(frozen=True)
class Centroid:
    values: np.ndarray
    name: str = ""

    @property
    def dim(self) -> int:
        return self.values.shape[0]


def fit_normalizer(matrices: Sequence[FeatureMatrix], source: str = "") -> Normalizer:
    non_empty = [m.rows for m in matrices if len(m)]
    if not non_empty:
        raise EmptyFeatureInput("fit_normalizer")
    dims = {rows.shape[1] for rows in non_empty}
    if len(dims) != 1:
        raise DimensionMismatch(min(dims), max(dims))
    minimum = np.min([rows.min(axis=0) for rows in non_empty], axis=0)
    maximum = np.max([rows.max(axis=0) for rows in non_empty], axis=0)
    return Normalizer(minimum, maximum, source)


def apply_normalizer(normalizer: Normalizer, matrix: FeatureMatrix) -> FeatureMatrix:
    if matrix.dim != normalizer.dim:
        raise DimensionMismatch(normalizer.dim, matrix.dim)
    constant = normalizer.constant
    span = np.where(constant, 1.0, normalizer.maximum - normalizer.minimum)
    scaled = np.clip((matrix.rows - normalizer.minimum) / span, 0.0, 1.0)
    scaled[:, constant] = 0.5
    return FeatureMatrix(scaled, matrix.labels, list(matrix.utterance_ids))


def compute_centroid(matrix: FeatureMatrix, name: str = "") -> Centroid:
    if not len(matrix):
        raise EmptyFeatureInput("compute_centroid")
    return Centroid(np.mean(matrix.rows, axis=0), name)

# ========= File formats


def write_feature_file(path: str, rows: np.ndarray):
    rows = np.ascontiguousarray(rows, dtype="<f4")
    header = struct.pack(FeatureFileParams.HeaderFormat, FeatureFileParams.Magic,
                         rows.shape[0], rows.shape[1], FeatureFileParams.Version)
    with open(path, "wb") as ff:
        ff.write(header)
        ff.write(rows.tobytes(order="C"))


def read_feature_file(path: str) -> np.ndarray:
    header_size = struct.calcsize(FeatureFileParams.HeaderFormat)
    try:
        with open(path, "rb") as ff:
            header = ff.read(header_size)
            payload = ff.read()
    except OSError:
        raise MissingCorpusFile(path)
    if len(header) != header_size:
        raise InvalidFeatureFile(path, "truncated header")
    magic, n_rows, dim, version = struct.unpack(FeatureFileParams.HeaderFormat, header)
    if magic != FeatureFileParams.Magic:
        raise InvalidFeatureFile(path, f"bad magic {magic!r}")
    if version != FeatureFileParams.Version:
        raise InvalidFeatureFile(path, f"unsupported version {version}")
    if len(payload) != n_rows * dim * 4:
        raise InvalidFeatureFile(path, f"expected {n_rows}x{dim} floats, found {len(payload) // 4}")
    return np.frombuffer(payload, dtype="<f4").reshape(n_rows, dim).astype(np.float64)


def export_feature_csv(path: str, rows: np.ndarray, labels: Optional[np.ndarray] = None):
    header = ",".join(f"{name}_{i}" for name, dim in FEATURE_BLOCKS for i in range(dim))
    data = rows
    if labels is not None:
        header = "label," + header
        data = np.column_stack([labels, rows])
    np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.8g")


def write_normalizer_csv(path: str, normalizer: Normalizer):
    table = np.column_stack([np.arange(normalizer.dim), normalizer.minimum, normalizer.maximum])
    np.savetxt(path, table, delimiter=",", fmt=["%d", "%.17g", "%.17g"],
               header=f"source={normalizer.source}\ndim,min,max", comments="# ")


def read_normalizer_csv(path: str) -> Normalizer:
    if not os.path.isfile(path):
        raise MissingCorpusFile(path)
    source = ""
    with open(path, "r") as nf:
        first = nf.readline()
    if first.startswith("# source="):
        source = first[len("# source="):].rstrip("\n")
    table = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    return Normalizer(table[:, 1].copy(), table[:, 2].copy(), source)
