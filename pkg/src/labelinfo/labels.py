"""Label construction and sparsification transforms over a latent dataset.

Every label is an n-by-k row per point. Hard labels one-hot the nearest
centroid; soft labels are the softmax of negative point-to-centroid
distances; the remaining kinds are derived transforms (smoothing,
typicality spreading, per-row sparsification, informative-column selection,
PCA coordinate encoding).
"""
from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .latentgen import LatentDataset, SimilarityMatrix


class LabelKind(enum.Enum):
    HARD = "hard"
    SOFT = "soft"
    SMOOTHED = "smoothed"
    TYPICALITY = "typicality"
    SPARSE_SOFT = "sparse"
    TOP_CLASS = "topclass"
    PCA_COORDS = "pca"


# Kinds whose rows are probability vectors (sum to 1, entries >= 0).
PROBABILITY_KINDS = frozenset(
    {LabelKind.HARD, LabelKind.SOFT, LabelKind.SMOOTHED, LabelKind.TYPICALITY})
# Kinds minable with the soft-label comparison rules.
SOFT_MINEABLE_KINDS = frozenset(
    {LabelKind.SOFT, LabelKind.SMOOTHED, LabelKind.TYPICALITY,
     LabelKind.SPARSE_SOFT, LabelKind.TOP_CLASS})


@dataclass(frozen=True)
class LabelSet:
    kind: LabelKind
    values: np.ndarray  # (n, k); for PCA_COORDS: (n_items, k_hat), may be negative
    k_hat: Optional[int] = None
    retained_columns: Optional[tuple[int, ...]] = None  # TOP_CLASS only


def _point_centroid_distances(dataset: LatentDataset) -> np.ndarray:
    diff = dataset.points[:, None, :] - dataset.centroids[None, :, :]
    return np.linalg.norm(diff, axis=2)


def hard_labels(dataset: LatentDataset) -> LabelSet:
    """One-hot at the nearest centroid; distance ties break toward the lowest class."""
    dist = _point_centroid_distances(dataset)
    nearest = np.argmin(dist, axis=1)  # argmin returns the first (lowest) index on ties
    values = np.zeros((dataset.n, dataset.k))
    values[np.arange(dataset.n), nearest] = 1.0
    return LabelSet(kind=LabelKind.HARD, values=values)


def soft_labels(dataset: LatentDataset) -> LabelSet:
    """Softmax of negative point-to-centroid Euclidean distances, row-normalized."""
    dist = _point_centroid_distances(dataset)
    logits = -dist
    logits -= logits.max(axis=1, keepdims=True)  # max-shift for numeric stability
    expd = np.exp(logits)
    values = expd / expd.sum(axis=1, keepdims=True)
    return LabelSet(kind=LabelKind.SOFT, values=values)


def smooth_labels(hard: LabelSet, epsilon: float) -> LabelSet:
    """Image-independent smoothing: 1-eps on the true class, eps/(k-1) on each other."""
    if hard.kind is not LabelKind.HARD:
        raise TypeError(f"smooth_labels requires hard labels, got {hard.kind.value}")
    if not 0 <= epsilon < 1:
        raise ValueError(f"smoothing rate must lie in [0, 1), got {epsilon}")
    n, k = hard.values.shape
    true_class = np.argmax(hard.values, axis=1)
    values = np.full((n, k), epsilon / (k - 1))
    values[np.arange(n), true_class] = 1.0 - epsilon
    return LabelSet(kind=LabelKind.SMOOTHED, values=values)


def typicality_labels(hard: LabelSet, typicality: Sequence[float]) -> LabelSet:
    """Put mass p_i on the true class and spread 1-p_i uniformly over the rest."""
    if hard.kind is not LabelKind.HARD:
        raise TypeError(f"typicality_labels requires hard labels, got {hard.kind.value}")
    p = np.asarray(typicality, dtype=float)
    n, k = hard.values.shape
    if p.shape != (n,):
        raise ValueError(f"expected one typicality score per point ({n}), got shape {p.shape}")
    if np.any(p <= 0) or np.any(p > 1):
        raise ValueError("typicality scores must lie in (0, 1]")
    true_class = np.argmax(hard.values, axis=1)
    values = np.repeat(((1.0 - p) / (k - 1))[:, None], k, axis=1)
    values[np.arange(n), true_class] = p
    return LabelSet(kind=LabelKind.TYPICALITY, values=values)


def sparsify_labels(soft: LabelSet, k_hat: int, renormalize: bool = False) -> LabelSet:
    """Keep the k_hat largest components of each row, zero the rest.

    Values are kept as-is (no renormalization) unless `renormalize` is set;
    downstream triplet mining only uses within-row and within-column order.
    Ties at the cutoff break toward the lowest class index.
    """
    if soft.kind not in (LabelKind.SOFT, LabelKind.SMOOTHED, LabelKind.TYPICALITY):
        raise TypeError(f"sparsify_labels requires a dense soft variant, got {soft.kind.value}")
    n, k = soft.values.shape
    if not 1 <= k_hat <= k:
        raise ValueError(f"k_hat must lie in [1, {k}], got {k_hat}")
    # Stable sort on negated values keeps the lowest class index first among ties.
    order = np.argsort(-soft.values, axis=1, kind="stable")
    keep = order[:, :k_hat]
    values = np.zeros_like(soft.values)
    rows = np.repeat(np.arange(n), k_hat)
    values[rows, keep.ravel()] = soft.values[rows, keep.ravel()]
    if renormalize:
        values = values / values.sum(axis=1, keepdims=True)
    return LabelSet(kind=LabelKind.SPARSE_SOFT, values=values, k_hat=k_hat)


def column_mutual_information(column: np.ndarray, reference: SimilarityMatrix,
                              bins: int = 8) -> float:
    """Plug-in mutual information (bits) between a label column and similarity structure.

    Forms the paired sample (|col_a - col_b|, sim_ab) over all point pairs,
    discretizes each marginal into `bins` equal-frequency bins and returns
    the mutual information of the joint histogram. Non-negative by
    construction; exactly 0 for a constant column.
    """
    col = np.asarray(column, dtype=float)
    n = col.shape[0]
    if n < 3:
        raise ValueError(f"need at least 3 points to estimate column information, got {n}")
    if reference.size != n:
        raise ValueError(f"reference covers {reference.size} points, column has {n}")
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    iu = np.triu_indices(n, 1)
    pair_dist = np.abs(col[iu[0]] - col[iu[1]])
    sims = reference.values
    x = _equal_frequency_codes(pair_dist, bins)
    y = _equal_frequency_codes(sims, bins)
    joint = np.zeros((bins, bins))
    np.add.at(joint, (x, y), 1.0)
    joint /= joint.sum()
    px = joint.sum(axis=1)
    py = joint.sum(axis=0)
    nz = joint > 0
    mi = float(np.sum(joint[nz] * np.log2(joint[nz] / np.outer(px, py)[nz])))
    return max(mi, 0.0)


def _equal_frequency_codes(x: np.ndarray, bins: int) -> np.ndarray:
    """Quantile-based bin codes in [0, bins); ties collapse into shared bins."""
    edges = np.quantile(x, np.linspace(0.0, 1.0, bins + 1)[1:-1])
    return np.searchsorted(edges, x, side="right")


def topclass_labels(soft: LabelSet, k_hat: int, reference: SimilarityMatrix,
                    bins: int = 8) -> LabelSet:
    """Zero out all but the k_hat columns most informative about the similarity structure.

    Column informativeness is the plug-in mutual information between the
    column and the ground-truth point-pairwise similarities; ties break
    toward the lowest column index.
    """
    if soft.kind is not LabelKind.SOFT:
        raise TypeError(f"topclass_labels requires soft labels, got {soft.kind.value}")
    n, k = soft.values.shape
    if not 1 <= k_hat <= k:
        raise ValueError(f"k_hat must lie in [1, {k}], got {k_hat}")
    if reference.size != n:
        raise ValueError(f"reference covers {reference.size} points, labels have {n}")
    mi = np.array([column_mutual_information(soft.values[:, j], reference, bins)
                   for j in range(k)])
    order = np.argsort(-mi, kind="stable")
    retained = tuple(sorted(int(j) for j in order[:k_hat]))
    values = np.zeros_like(soft.values)
    values[:, retained] = soft.values[:, retained]
    return LabelSet(kind=LabelKind.TOP_CLASS, values=values, k_hat=k_hat,
                    retained_columns=retained)


def pca_encode(dataset: LatentDataset, k_hat: int, on_soft_labels: bool = False) -> LabelSet:
    """Coordinates of all n+k items in the top-k_hat principal-component basis.

    By default PCA runs on the latent item coordinates (points then
    centroids), treating the curve over k_hat as a bound on how well any
    k_hat-vector encoding can communicate the geometry. With
    `on_soft_labels`, PCA instead runs on the matrix of softmax rows
    computed for every item (centroids included, via their own distances to
    all centroids), so the encoded index space stays points+centroids.

    Each component's sign is fixed by making its largest-magnitude loading
    positive, so repeated runs are deterministic.
    """
    if on_soft_labels:
        items = dataset.all_items()
        dist = np.linalg.norm(items[:, None, :] - dataset.centroids[None, :, :], axis=2)
        logits = -dist
        logits -= logits.max(axis=1, keepdims=True)
        expd = np.exp(logits)
        matrix = expd / expd.sum(axis=1, keepdims=True)
    else:
        matrix = dataset.all_items()
    m, width = matrix.shape
    if not 1 <= k_hat <= min(width, m):
        raise ValueError(f"k_hat must lie in [1, {min(width, m)}], got {k_hat}")
    centered = matrix - matrix.mean(axis=0, keepdims=True)
    u, s, vt = np.linalg.svd(centered, full_matrices=False)
    scores = u[:, :k_hat] * s[:k_hat]
    for j in range(k_hat):
        lead = np.argmax(np.abs(vt[j]))
        if vt[j, lead] < 0:
            scores[:, j] = -scores[:, j]
    return LabelSet(kind=LabelKind.PCA_COORDS, values=scores, k_hat=k_hat)


def labelset_to_csv(labels: LabelSet) -> str:
    """Header block (`kind,k_hat`, plus retained columns for top-class) then one row per item."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["kind", "k_hat"])
    writer.writerow([labels.kind.value, "" if labels.k_hat is None else labels.k_hat])
    if labels.retained_columns is not None:
        writer.writerow(["retained_columns",
                         ";".join(str(j) for j in labels.retained_columns)])
    for row in labels.values:
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def labelset_from_csv(text: str) -> LabelSet:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != ["kind", "k_hat"]:
        raise ValueError("malformed label CSV header")
    meta = next(reader)
    kind = LabelKind(meta[0])
    k_hat = int(meta[1]) if meta[1] != "" else None
    retained = None
    rows = []
    for row in reader:
        if not row:
            continue
        if row[0] == "retained_columns":
            retained = tuple(int(j) for j in row[1].split(";"))
            continue
        rows.append([float(v) for v in row])
    if not rows:
        raise ValueError("label CSV contains no rows")
    return LabelSet(kind=kind, values=np.array(rows), k_hat=k_hat,
                    retained_columns=retained)
