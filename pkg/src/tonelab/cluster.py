"""Agglomerative clustering, density clustering, and classical MDS.

Hierarchical clustering supports the seven standard linkage updates:

    sl  single link            min(d_ik, d_jk)
    cl  complete link          max(d_ik, d_jk)
    ga  group average          (n_i d_ik + n_j d_jk) / (n_i + n_j)
    wa  weighted average       (d_ik + d_jk) / 2
    uc  unweighted centroid    centroid update on squared dissimilarities
    wc  weighted centroid      median update on squared dissimilarities
    mv  minimum variance       Ward update on squared dissimilarities

uc/wc/mv run on squared dissimilarities internally and report merge heights
as the square root of the updated value. Ties at equal merge height are
broken by the smallest (i, j) cluster-id pair, and all routines are
deterministic for a fixed input.
"""
from __future__ import annotations

import io
import math
import os
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConvergenceError, InputError
from .tones import DistanceMatrix

LINKAGES = ("sl", "cl", "ga", "wa", "uc", "wc", "mv")
_SQUARED_LINKAGES = frozenset({"uc", "wc", "mv"})

NOISE = -1


@dataclass(frozen=True)
class Dendrogram:
    """Merge history: item ids are 0..n-1, merge m creates cluster id n+m."""

    n_items: int
    steps: tuple[tuple[int, int, float, int], ...]  # (a, b, height, new_size)

    def __post_init__(self) -> None:
        if len(self.steps) != self.n_items - 1:
            raise InputError(
                f"dendrogram for {self.n_items} items needs {self.n_items - 1} steps"
            )

    def to_csv(self, path: str | os.PathLike | None = None) -> str:
        buf = io.StringIO()
        buf.write("cluster_a,cluster_b,height,new_size\n")
        for a, b, h, size in self.steps:
            buf.write(f"{a},{b},{h:.6f},{size}\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text


@dataclass(frozen=True)
class ClusterAssignment:
    """Per-item cluster labels; NOISE (-1) marks unclustered points."""

    labels: tuple[int, ...]

    @property
    def n_clusters(self) -> int:
        return len({l for l in self.labels if l != NOISE})

    def to_csv(self, items: Sequence[str] | None = None,
               path: str | os.PathLike | None = None) -> str:
        names = list(items) if items is not None else [str(i) for i in range(len(self.labels))]
        if len(names) != len(self.labels):
            raise InputError("item name count does not match label count")
        buf = io.StringIO()
        buf.write("item,label\n")
        for name, label in zip(names, self.labels):
            buf.write(f"{name},{label}\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text


def _lance_williams_update(linkage: str, d_ik: float, d_jk: float, d_ij: float,
                           n_i: int, n_j: int, n_k: int) -> float:
    if linkage == "sl":
        return min(d_ik, d_jk)
    if linkage == "cl":
        return max(d_ik, d_jk)
    if linkage == "ga":
        return (n_i * d_ik + n_j * d_jk) / (n_i + n_j)
    if linkage == "wa":
        return 0.5 * (d_ik + d_jk)
    if linkage == "uc":
        n_ij = n_i + n_j
        return (n_i * d_ik + n_j * d_jk) / n_ij - (n_i * n_j * d_ij) / (n_ij * n_ij)
    if linkage == "wc":
        return 0.5 * d_ik + 0.5 * d_jk - 0.25 * d_ij
    if linkage == "mv":
        n_all = n_i + n_j + n_k
        return ((n_i + n_k) * d_ik + (n_j + n_k) * d_jk - n_k * d_ij) / n_all
    raise InputError(f"unknown linkage {linkage!r}; choose one of {LINKAGES}")


def hierarchical_cluster(d: DistanceMatrix, linkage: str) -> Dendrogram:
    """Agglomerate a distance matrix bottom-up under the given linkage."""
    if linkage not in LINKAGES:
        raise InputError(f"unknown linkage {linkage!r}; choose one of {LINKAGES}")
    n = len(d)
    if n < 2:
        raise InputError("hierarchical clustering needs at least 2 items")

    squared = linkage in _SQUARED_LINKAGES
    total = 2 * n - 1
    # Working dissimilarities between all cluster ids, filled as merges happen.
    work = np.full((total, total), np.inf)
    base = d.values.astype(float)
    work[:n, :n] = base * base if squared else base
    sizes = {i: 1 for i in range(n)}

    steps = []
    for step in range(n - 1):
        active = sorted(sizes)
        best = math.inf
        pair = None
        for ai, i in enumerate(active):
            row = work[i]
            for j in active[ai + 1:]:
                v = row[j]
                if v < best:  # strict: ties keep the smallest (i, j) seen first
                    best = v
                    pair = (i, j)
        i, j = pair
        new_id = n + step
        d_ij = float(work[i, j])
        n_i, n_j = sizes[i], sizes[j]
        for k in active:
            if k == i or k == j:
                continue
            upd = _lance_williams_update(linkage, work[i, k], work[j, k], d_ij,
                                         n_i, n_j, sizes[k])
            work[new_id, k] = upd
            work[k, new_id] = upd
        del sizes[i], sizes[j]
        sizes[new_id] = n_i + n_j
        height = math.sqrt(max(d_ij, 0.0)) if squared else d_ij
        steps.append((i, j, height, n_i + n_j))
    return Dendrogram(n, tuple(steps))


def cut_tree(dg: Dendrogram, k: int) -> ClusterAssignment:
    """Partition into k clusters by undoing the last k-1 merges.

    Components are labelled 0..k-1 in order of their first member item.
    """
    n = dg.n_items
    if not 1 <= k <= n:
        raise InputError(f"k must be in 1..{n}, got {k}")
    parent = list(range(2 * n - 1))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for step, (a, b, _h, _size) in enumerate(dg.steps[: n - k]):
        new_id = n + step
        parent[find(a)] = new_id
        parent[find(b)] = new_id

    label_of_root: dict[int, int] = {}
    labels = []
    for item in range(n):
        root = find(item)
        if root not in label_of_root:
            label_of_root[root] = len(label_of_root)
        labels.append(label_of_root[root])
    return ClusterAssignment(tuple(labels))


def dbscan(points: Sequence[Sequence[float]], eps: float, min_samples: int) -> ClusterAssignment:
    """Euclidean density clustering.

    A point is core iff it has >= min_samples neighbours within eps (itself
    included). Clusters grow from core points scanned in ascending index
    order; border points keep the first cluster that reaches them. Unreached
    points are NOISE.
    """
    if eps <= 0:
        raise InputError("eps must be positive")
    if min_samples < 1:
        raise InputError("min_samples must be >= 1")
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        raise InputError("dbscan needs at least one point")
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2:
        raise InputError("points must share a single vector dimension")
    n = len(pts)

    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2))
    neighbors = [np.flatnonzero(dist[i] <= eps) for i in range(n)]
    is_core = np.array([len(nb) >= min_samples for nb in neighbors])

    labels = [NOISE] * n
    visited = [False] * n
    cluster = 0
    for seed in range(n):
        if visited[seed] or not is_core[seed]:
            continue
        queue = deque([seed])
        visited[seed] = True
        labels[seed] = cluster
        while queue:
            p = queue.popleft()
            if not is_core[p]:
                continue
            for q in neighbors[p]:  # ascending index
                if labels[q] == NOISE:
                    labels[q] = cluster
                if not visited[q]:
                    visited[q] = True
                    queue.append(q)
        cluster += 1
    return ClusterAssignment(tuple(labels))


def classical_mds(d: DistanceMatrix, dims: int) -> np.ndarray:
    """Torgerson MDS coordinates, shape (n, dims).

    Double-centers the squared distances and extracts the top eigenpairs by
    shifted power iteration with deflation; each coordinate column is sign-
    fixed so the first item is nonnegative.
    """
    if dims not in (1, 2):
        raise InputError("dims must be 1 or 2")
    n = len(d)
    if n < dims + 1:
        raise InputError(f"need at least {dims + 1} items for a {dims}-D embedding")

    d2 = d.values * d.values
    centering = np.eye(n) - np.full((n, n), 1.0 / n)
    b = -0.5 * centering @ d2 @ centering
    b = 0.5 * (b + b.T)  # enforce exact symmetry

    # Shift makes the matrix positive semidefinite so power iteration finds
    # the largest *algebraic* eigenvalue of b. The Gershgorin lower bound
    # keeps the shift small; an oversized shift would flatten the eigengap
    # ratios and stall convergence.
    off_diag = np.abs(b).sum(axis=1) - np.abs(np.diag(b))
    shift = max(0.0, -float((np.diag(b) - off_diag).min()))
    m = b + shift * np.eye(n)
    scale = max(1.0, float(np.abs(m).sum(axis=1).max()))

    coords = np.zeros((n, dims))
    # Fixed-seed start vectors keep the routine deterministic. Each deflation
    # stage draws a fresh start and re-orthogonalizes against the eigenvectors
    # already found: with a degenerate top eigenvalue the first stage absorbs
    # the start vector's entire eigenspace component, so reusing it would
    # leave nothing pointing along the remaining eigendirection.
    rng = np.random.default_rng(1729)
    tol = 1e-10
    found: list[np.ndarray] = []
    for dim in range(dims):
        vec = rng.standard_normal(n)
        theta = 0.0
        residual = math.inf
        for _ in range(10000):
            for prev in found:
                vec = vec - prev * (prev @ vec)
            norm = np.linalg.norm(vec)
            if norm == 0.0:
                break  # eigenvalue 0: any unit vector in the null space works
            vec = vec / norm
            theta = float(vec @ (m @ vec))
            residual = float(np.linalg.norm(m @ vec - theta * vec))
            if residual <= tol * scale:
                break
            vec = m @ vec
        else:
            raise ConvergenceError(
                f"power iteration did not converge for dimension {dim}: "
                f"residual {residual:.3e}"
            )
        eigenvalue = theta - shift
        coords[:, dim] = vec * math.sqrt(max(eigenvalue, 0.0))
        m = m - theta * np.outer(vec, vec)
        found.append(vec.copy())

    for dim in range(dims):
        if coords[0, dim] < 0:
            coords[:, dim] = -coords[:, dim]
    return coords


def mds_to_csv(labels: Sequence[str], coords: np.ndarray,
               path: str | os.PathLike | None = None) -> str:
    """CSV export of MDS coordinates: item,x[,y] with 6 decimals."""
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    if coords.shape[0] != len(labels):
        raise InputError("coordinate row count does not match labels")
    header = ["item", "x", "y"][: 1 + coords.shape[1]]
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for label, row in zip(labels, coords):
        buf.write(label + "," + ",".join(f"{x:.6f}" for x in row) + "\n")
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def two_cluster_accuracy(pred: ClusterAssignment | Sequence[int],
                         gold: Sequence[int]) -> float:
    """Best agreement with binary gold labels over the two label permutations."""
    labels = pred.labels if isinstance(pred, ClusterAssignment) else tuple(pred)
    if len(labels) != len(gold):
        raise InputError("prediction and gold label counts differ")
    ids = {l for l in labels if l != NOISE}
    if len(ids) > 2:
        raise InputError(f"expected at most 2 cluster ids, got {sorted(ids)}")
    gold = [int(g) for g in gold]
    direct = sum(1 for p, g in zip(labels, gold) if p == g)
    swapped = sum(1 for p, g in zip(labels, gold) if p == 1 - g)
    return max(direct, swapped) / len(gold)
