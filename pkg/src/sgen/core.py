"""Shape and structure-graph data model.

A shape is a point cloud plus a structure graph: one-hot part labels per
point, a part-existence vector and a symmetric part-adjacency matrix. This
module owns validation, normalization, the default equal-split segmentation
used at sampling time, automatic adjacency from geometry, and the cyclomatic
complexity of the part graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import SgenError


@dataclass
class PointCloud:
    """n x 3 float32 coordinates in unitless model space."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float32)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 1:
            raise SgenError("EMPTY_CLOUD", f"expected n x 3 points, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise SgenError("NONFINITE_STATE", "point cloud contains non-finite values")
        self.points = pts

    @property
    def n(self) -> int:
        return self.points.shape[0]


@dataclass
class StructureGraph:
    """One-hot labels (n x m), existence vector (m,) and adjacency matrix (m x m)."""

    labels: np.ndarray
    existence: np.ndarray
    adjacency: np.ndarray

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.uint8)
        self.existence = np.asarray(self.existence, dtype=np.uint8)
        self.adjacency = np.asarray(self.adjacency, dtype=np.uint8)

    @property
    def m(self) -> int:
        return self.existence.shape[0]

    @property
    def label_indices(self) -> np.ndarray:
        return np.argmax(self.labels, axis=1).astype(np.uint8)


@dataclass
class ShapeRecord:
    cloud: PointCloud
    graph: StructureGraph
    structure_code: str
    shape_id: str


@dataclass
class ManifestEntry:
    shape_id: str
    structure_code: str
    split: str
    blob: str


@dataclass
class DatasetManifest:
    category: str
    m: int
    entries: list[ManifestEntry] = field(default_factory=list)

    def split_ids(self, split: str) -> list[str]:
        return [e.shape_id for e in self.entries if e.split == split]


@dataclass
class ValidationResult:
    ok: bool
    error: str | None = None

    def __bool__(self) -> bool:
        return self.ok


def validate_structure_graph(graph: StructureGraph, n: int) -> ValidationResult:
    """Check all structure-graph invariants; report the first violated one by name."""
    s, v, e = graph.labels, graph.existence, graph.adjacency
    m = graph.m
    if s.shape != (n, m):
        return ValidationResult(False, "ROW_COUNT_MISMATCH")
    if m < 1:
        return ValidationResult(False, "ROW_COUNT_MISMATCH")
    if not np.all(np.isin(s, (0, 1))) or not np.all(s.sum(axis=1) == 1):
        return ValidationResult(False, "NON_ONEHOT_ROW")
    absent = v == 0
    if np.any(s[:, absent].sum() > 0):
        return ValidationResult(False, "LABEL_ON_ABSENT_PART")
    if e.shape != (m, m) or not np.array_equal(e, e.T):
        return ValidationResult(False, "ASYMMETRIC_E")
    if np.any(np.diag(e) != 0):
        return ValidationResult(False, "SELF_LOOP")
    if np.any(e[absent, :] > 0) or np.any(e[:, absent] > 0):
        return ValidationResult(False, "EDGE_ON_ABSENT_PART")
    return ValidationResult(True)


def normalize_cloud(cloud: PointCloud) -> PointCloud:
    """Translate to zero mean and scale so the 3n coordinate residuals have unit variance.

    One uniform scale factor is used (aspect ratio preserved). Raises
    DEGENERATE_CLOUD when every point coincides.
    """
    pts = cloud.points.astype(np.float64)
    mean = pts.mean(axis=0)
    centered = pts - mean
    var = float(np.mean(centered**2))
    if var <= 0.0:
        raise SgenError("DEGENERATE_CLOUD", "all points coincide; variance is zero")
    return PointCloud((centered / np.sqrt(var)).astype(np.float32))


def default_segmentation(n: int, existence: np.ndarray) -> np.ndarray:
    """Equal split of n points over the existing parts, as contiguous index blocks.

    Part sizes differ by at most one; when n is not divisible the extra points
    go to the lowest-indexed existing parts. Returns an n x m one-hot matrix.
    """
    v = np.asarray(existence).astype(np.uint8)
    m = v.shape[0]
    existing = np.flatnonzero(v)
    if existing.size == 0:
        raise SgenError("NO_EXISTING_PART", "existence vector is all-zero")
    base, extra = divmod(n, existing.size)
    labels = np.zeros((n, m), dtype=np.uint8)
    start = 0
    for rank, j in enumerate(existing):
        count = base + (1 if rank < extra else 0)
        labels[start : start + count, j] = 1
        start += count
    return labels


def adjacency_from_parts(
    cloud: PointCloud, labels: np.ndarray, threshold: float = 0.05
) -> np.ndarray:
    """Derive the part-adjacency matrix from geometry.

    Two non-empty parts are adjacent iff the minimum Euclidean distance between
    their point sets is <= threshold. Symmetric, zero diagonal; empty parts
    yield all-zero rows and columns.
    """
    if threshold <= 0:
        raise SgenError("INVALID_RANGE", "threshold must be positive")
    labels = np.asarray(labels)
    m = labels.shape[1]
    pts = cloud.points.astype(np.float64)
    groups = [pts[labels[:, j] == 1] for j in range(m)]
    e = np.zeros((m, m), dtype=np.uint8)
    for j in range(m):
        if groups[j].shape[0] == 0:
            continue
        for k in range(j + 1, m):
            if groups[k].shape[0] == 0:
                continue
            d2 = np.sum((groups[j][:, None, :] - groups[k][None, :, :]) ** 2, axis=-1)
            if np.sqrt(d2.min()) <= threshold:
                e[j, k] = e[k, j] = 1
    return e


def graph_complexity(graph: StructureGraph) -> int:
    """Cyclomatic complexity M = |edges| - |existing nodes| + 2 * |components|."""
    v = graph.existence.astype(bool)
    idx = np.flatnonzero(v)
    if idx.size == 0:
        return 0
    sub = graph.adjacency[np.ix_(idx, idx)]
    n_edges = int(sub.sum()) // 2
    n_comp, _ = connected_components(csr_matrix(sub), directed=False)
    return n_edges - idx.size + 2 * n_comp
