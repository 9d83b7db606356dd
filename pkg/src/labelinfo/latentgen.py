"""Synthetic latent structure: points clustered around class centroids.

The generator works directly in latent space. Points are sampled from
isotropic Gaussians centered at k random centroid locations, with classes
assigned round-robin so balanced designs (k | n) have exactly n/k points
per class.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

_SEED_MAX = 2**64


@dataclass(frozen=True)
class LatentDataset:
    """Ground-truth latent points and centroids the learner must recover."""

    points: np.ndarray       # (n, d)
    centroids: np.ndarray    # (k, d)
    assignments: np.ndarray  # (n,) generating class per point
    d: int
    seed: int

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    def all_items(self) -> np.ndarray:
        """Combined item coordinates: points first, centroids after.

        This index layout (points in [0, n), centroids in [n, n+k)) is fixed
        project-wide so constraint sets, Gram matrices and similarity
        matrices align by construction.
        """
        return np.vstack([self.points, self.centroids])


@dataclass(frozen=True)
class SimilarityMatrix:
    """Upper triangle of a symmetric pairwise similarity matrix.

    `values` holds the m(m-1)/2 entries in row-major (i < j) order, the same
    order as numpy's ``triu_indices(m, 1)``.
    """

    size: int
    values: np.ndarray
    normalized: bool

    def to_dense(self) -> np.ndarray:
        """Dense symmetric matrix with zero diagonal."""
        out = np.zeros((self.size, self.size))
        iu = np.triu_indices(self.size, 1)
        out[iu] = self.values
        out.T[iu] = self.values
        return out


def generate_dataset(n: int, k: int, d: int, sigma: float = 0.5, seed: int = 0) -> LatentDataset:
    """Sample n points around k standard-normal centroids in R^d.

    Centroids are i.i.d. N(0, I_d). Point i belongs to class (i mod k) and
    equals its centroid plus isotropic Gaussian noise with per-coordinate
    standard deviation `sigma`. Pure function of its arguments: the same
    (n, k, d, sigma, seed) always yields bit-identical contents.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if not sigma > 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    if not 0 <= seed < _SEED_MAX:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")

    rng = np.random.default_rng(seed)
    centroids = rng.standard_normal((k, d))
    assignments = np.arange(n, dtype=np.int64) % k
    points = centroids[assignments] + sigma * rng.standard_normal((n, d))
    return LatentDataset(points=points, centroids=centroids,
                         assignments=assignments, d=d, seed=seed)


def similarity_matrix(items: np.ndarray, normalized: bool = True) -> SimilarityMatrix:
    """Pairwise similarities: cosine when `normalized`, raw inner products otherwise."""
    x = np.asarray(items, dtype=float)
    if x.ndim != 2:
        raise ValueError(f"items must be a 2-d array of vectors, got shape {x.shape}")
    m = x.shape[0]
    gram = x @ x.T
    if normalized:
        norms = np.sqrt(np.diagonal(gram))
        if np.any(norms == 0):
            raise ValueError("cosine similarity is undefined for zero vectors")
        gram = gram / np.outer(norms, norms)
        gram = np.clip(gram, -1.0, 1.0)
    iu = np.triu_indices(m, 1)
    return SimilarityMatrix(size=m, values=gram[iu], normalized=normalized)


def dataset_to_csv(dataset: LatentDataset) -> str:
    """Serialize a dataset: one row per item, points first, then centroids."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["role", "class"] + [f"x{i}" for i in range(dataset.d)])
    for i in range(dataset.n):
        writer.writerow(["point", int(dataset.assignments[i])]
                        + [repr(float(v)) for v in dataset.points[i]])
    for j in range(dataset.k):
        writer.writerow(["centroid", j] + [repr(float(v)) for v in dataset.centroids[j]])
    return buf.getvalue()


def dataset_from_csv(text: str) -> LatentDataset:
    """Parse the CSV form. Generation metadata (seed) is not stored in the CSV."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if len(header) < 3 or header[:2] != ["role", "class"]:
        raise ValueError("malformed dataset CSV header")
    d = len(header) - 2
    points, assignments, centroids = [], [], []
    for row in reader:
        if not row:
            continue
        role, cls, coords = row[0], int(row[1]), [float(v) for v in row[2:]]
        if len(coords) != d:
            raise ValueError("inconsistent dimensionality in dataset CSV")
        if role == "point":
            points.append(coords)
            assignments.append(cls)
        elif role == "centroid":
            centroids.append(coords)
        else:
            raise ValueError(f"unknown role {role!r} in dataset CSV")
    if not points or len(centroids) < 2:
        raise ValueError("dataset CSV must contain points and at least two centroids")
    return LatentDataset(points=np.array(points),
                         centroids=np.array(centroids),
                         assignments=np.array(assignments, dtype=np.int64),
                         d=d, seed=0)
