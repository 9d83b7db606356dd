"""Triplet-constraint mining from labels, closed-form counts, and bit-flip noise.

Items live in a combined index space: points occupy [0, n) and centroids
[n, n+k). A constraint (anchor, near, far) asserts that the anchor's
embedding is closer to `near` than to `far`; each such one-bit query appears
at most once per mined set.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from math import comb

import numpy as np

from .labels import LabelKind, LabelSet, SOFT_MINEABLE_KINDS

_EMPTY = np.empty((0, 3), dtype=np.int64)


@dataclass(frozen=True)
class ConstraintSet:
    n_points: int
    n_centroids: int
    triplets: np.ndarray  # (T, 3) int64 rows of (anchor, near, far)
    source_kind: str
    flip_rate: float = 0.0

    @property
    def m(self) -> int:
        """Total number of indexable items."""
        return self.n_points + self.n_centroids

    def __len__(self) -> int:
        return self.triplets.shape[0]


def _sorted(triplets: np.ndarray) -> np.ndarray:
    """Lexicographic (anchor, near, far) order, for deterministic output."""
    if triplets.shape[0] == 0:
        return _EMPTY
    order = np.lexsort((triplets[:, 2], triplets[:, 1], triplets[:, 0]))
    return np.ascontiguousarray(triplets[order])


def mine_from_hard(labels: LabelSet) -> ConstraintSet:
    """All constraints implied by one-hot labels.

    Centroid-anchored: each class centroid is closer to every point labeled
    with that class than to every point labeled otherwise. Point-anchored:
    each point is closer to its labeled centroid than to every other
    centroid.
    """
    if labels.kind is not LabelKind.HARD:
        raise TypeError(f"mine_from_hard requires hard labels, got {labels.kind.value}")
    values = labels.values
    n, k = values.shape
    classes = np.argmax(values, axis=1)
    chunks = []
    for i in range(k):
        pos = np.flatnonzero(classes == i)
        neg = np.flatnonzero(classes != i)
        if pos.size and neg.size:
            pp, nn = np.meshgrid(pos, neg, indexing="ij")
            block = np.empty((pp.size, 3), dtype=np.int64)
            block[:, 0] = n + i
            block[:, 1] = pp.ravel()
            block[:, 2] = nn.ravel()
            chunks.append(block)
    others = np.array([[j for j in range(k) if j != c] for c in classes], dtype=np.int64)
    if k > 1:
        block = np.empty((n * (k - 1), 3), dtype=np.int64)
        block[:, 0] = np.repeat(np.arange(n), k - 1)
        block[:, 1] = n + np.repeat(classes, k - 1)
        block[:, 2] = n + others.ravel()
        chunks.append(block)
    triplets = np.concatenate(chunks) if chunks else _EMPTY
    return ConstraintSet(n_points=n, n_centroids=k, triplets=_sorted(triplets),
                         source_kind=labels.kind.value)


def mine_from_soft(labels: LabelSet) -> ConstraintSet:
    """All constraints implied by strict value comparisons in a soft-type label matrix.

    Centroid-anchored: for each class column, any point with strictly larger
    mass is nearer to that centroid than any point with smaller mass.
    Point-anchored: within each row, a class with strictly larger mass is
    nearer than one with smaller mass. Ties (including zero-vs-zero ties
    created by sparsification) emit nothing.
    """
    if labels.kind not in SOFT_MINEABLE_KINDS:
        raise TypeError(f"mine_from_soft requires a soft label variant, got {labels.kind.value}")
    values = labels.values
    n, k = values.shape
    chunks = []
    pi, pj = np.triu_indices(n, 1)
    for i in range(k):
        col = values[:, i]
        diff = col[pi] - col[pj]
        gt = diff > 0
        lt = diff < 0
        block = np.empty((int(gt.sum()) + int(lt.sum()), 3), dtype=np.int64)
        block[:, 0] = n + i
        block[: gt.sum(), 1] = pi[gt]
        block[: gt.sum(), 2] = pj[gt]
        block[gt.sum():, 1] = pj[lt]
        block[gt.sum():, 2] = pi[lt]
        if block.shape[0]:
            chunks.append(block)
    ci, cj = np.triu_indices(k, 1)
    for x in range(n):
        row = values[x]
        diff = row[ci] - row[cj]
        gt = diff > 0
        lt = diff < 0
        block = np.empty((int(gt.sum()) + int(lt.sum()), 3), dtype=np.int64)
        block[:, 0] = x
        block[: gt.sum(), 1] = n + ci[gt]
        block[: gt.sum(), 2] = n + cj[gt]
        block[gt.sum():, 1] = n + cj[lt]
        block[gt.sum():, 2] = n + ci[lt]
        if block.shape[0]:
            chunks.append(block)
    triplets = np.concatenate(chunks) if chunks else _EMPTY
    return ConstraintSet(n_points=n, n_centroids=k, triplets=_sorted(triplets),
                         source_kind=labels.kind.value)


def mine_from_coordinates(labels: LabelSet, n_points: int) -> ConstraintSet:
    """Answer every unique triplet query by Euclidean distance in the encoded space.

    With m items there are 3 * C(m, 3) unique queries (three anchors per
    unordered item triple); exact distance ties are skipped.
    """
    if labels.kind is not LabelKind.PCA_COORDS:
        raise TypeError(f"mine_from_coordinates requires coordinate labels, got {labels.kind.value}")
    coords = labels.values
    m = coords.shape[0]
    if not 0 <= n_points <= m:
        raise ValueError(f"n_points must lie in [0, {m}], got {n_points}")
    sq = _squared_distances(coords)
    chunks = []
    base_i, base_j = np.triu_indices(m - 1, 1)
    others = np.arange(m)
    for a in range(m):
        rest = np.delete(others, a)
        y = rest[base_i]
        z = rest[base_j]
        day = sq[a, y]
        daz = sq[a, z]
        nearer_y = day < daz
        nearer_z = daz < day
        total = int(nearer_y.sum()) + int(nearer_z.sum())
        block = np.empty((total, 3), dtype=np.int64)
        block[:, 0] = a
        block[: nearer_y.sum(), 1] = y[nearer_y]
        block[: nearer_y.sum(), 2] = z[nearer_y]
        block[nearer_y.sum():, 1] = z[nearer_z]
        block[nearer_y.sum():, 2] = y[nearer_z]
        if total:
            chunks.append(block)
    triplets = np.concatenate(chunks) if chunks else _EMPTY
    return ConstraintSet(n_points=n_points, n_centroids=m - n_points,
                         triplets=_sorted(triplets), source_kind=labels.kind.value)


def _squared_distances(coords: np.ndarray) -> np.ndarray:
    sq_norm = np.einsum("ij,ij->i", coords, coords)
    sq = sq_norm[:, None] + sq_norm[None, :] - 2.0 * coords @ coords.T
    np.fill_diagonal(sq, 0.0)
    return np.maximum(sq, 0.0)


def count_hard(n: int, k: int) -> Fraction:
    """Closed-form constraint count for n hard labels over k balanced classes.

    n(k-1) point-anchored constraints plus n^2(1-1/k) centroid-anchored
    ones; exact rational, integral whenever k divides n^2.
    """
    if n < 1 or k < 1:
        raise ValueError(f"n and k must be >= 1, got n={n}, k={k}")
    return Fraction(n) * (k - 1) + Fraction(n * n) * (k - 1) / k


def count_soft(n: int, k: int) -> int:
    """Closed-form constraint count for n tie-free soft labels over k classes."""
    if n < 1 or k < 1:
        raise ValueError(f"n and k must be >= 1, got n={n}, k={k}")
    prod = k * n * (k + n - 2)
    assert prod % 2 == 0
    return prod // 2


def information_ratio(constraint_count, n: int, k: int) -> float:
    """Fraction of all 3*C(n+k, 3) unique queries answered by a constraint set."""
    m = n + k
    if m < 3:
        raise ValueError(f"need n + k >= 3 items for any triplet query, got {m}")
    total = 3 * comb(m, 3)
    return float(Fraction(constraint_count) / total)


def apply_noise(constraints: ConstraintSet, epsilon: float, seed: int) -> ConstraintSet:
    """Independently swap near/far on each constraint with probability `epsilon`."""
    if not 0 <= epsilon <= 1:
        raise ValueError(f"flip rate must lie in [0, 1], got {epsilon}")
    triplets = constraints.triplets.copy()
    rng = np.random.default_rng(seed)
    flips = rng.random(triplets.shape[0]) < epsilon
    triplets[flips, 1], triplets[flips, 2] = (triplets[flips, 2].copy(),
                                              triplets[flips, 1].copy())
    return replace(constraints, triplets=triplets, flip_rate=epsilon)


def geometric_consistency_rate(constraints: ConstraintSet, coords: np.ndarray) -> float:
    """Fraction of constraints satisfied by the given item geometry.

    Diagnostic for centroid-anchored constraints mined from soft labels,
    which compare row-normalized masses across points and are therefore not
    guaranteed to respect the latent distances.
    """
    if len(constraints) == 0:
        raise ValueError("constraint set is empty")
    coords = np.asarray(coords, dtype=float)
    if coords.shape[0] != constraints.m:
        raise ValueError(f"geometry covers {coords.shape[0]} items, constraints expect {constraints.m}")
    sq = _squared_distances(coords)
    a, b, c = constraints.triplets.T
    return float(np.mean(sq[a, b] < sq[a, c]))


def constraints_to_csv(constraints: ConstraintSet) -> str:
    lines = ["n,k,source_kind,flip_rate",
             f"{constraints.n_points},{constraints.n_centroids},"
             f"{constraints.source_kind},{repr(constraints.flip_rate)}",
             "anchor,near,far"]
    lines.extend(f"{a},{b},{c}" for a, b, c in constraints.triplets)
    return "\n".join(lines) + "\n"


def constraints_from_csv(text: str) -> ConstraintSet:
    lines = [ln for ln in text.splitlines() if ln]
    if len(lines) < 3 or lines[0] != "n,k,source_kind,flip_rate" or lines[2] != "anchor,near,far":
        raise ValueError("malformed constraint CSV")
    n_str, k_str, kind, flip = lines[1].split(",")
    rows = [tuple(int(v) for v in ln.split(",")) for ln in lines[3:]]
    triplets = np.array(rows, dtype=np.int64) if rows else _EMPTY
    return ConstraintSet(n_points=int(n_str), n_centroids=int(k_str),
                         triplets=triplets, source_kind=kind, flip_rate=float(flip))
