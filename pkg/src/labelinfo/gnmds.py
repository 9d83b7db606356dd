"""Gram-matrix embedding from triplet constraints (generalized non-metric MDS).

Fits a positive-semidefinite Gram matrix K over all items so that as many
constraints (a, near, far) as possible hold under the induced squared
distances D2(i, j) = K_ii + K_jj - 2 K_ij, by minimizing

    sum_t max(0, margin + D2(a_t, near_t) - D2(a_t, far_t)) + lam * trace(K)

with projected subgradient descent: gradient step, projection onto the PSD
cone, then double-centering (squared distances are centering-invariant, so
this only removes the translation gauge and can only shrink the trace term).
The best iterate seen is returned, so the reported final objective never
exceeds the initial one.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .triplets import ConstraintSet

# Convergence is declared when the best objective improves by less than
# tolerance (relative) over this many consecutive iterations.
_WINDOW = 10
_MIN_STEP = 1e-18
# Step growth on a non-increasing move. The subgradient iterate must keep
# moving through kinks of the hinge (strict descent stalls far from the
# optimum), so steps are always taken; the step size anneals by halving on
# increases and regrowing on successes, and the best iterate is returned.
_GROW = 1.2


@dataclass(frozen=True)
class SolverConfig:
    margin: float = 1.0
    lam: float = 0.05
    step_size: float | None = None  # None -> 1 / |constraints|
    max_iterations: int = 2000
    tolerance: float = 1e-6
    seed: int = 0  # reserved for optional random restarts; base run is deterministic

    def __post_init__(self):
        if self.margin <= 0:
            raise ValueError(f"margin must be positive, got {self.margin}")
        if self.lam <= 0:
            raise ValueError(f"trace weight must be positive, got {self.lam}")
        if self.step_size is not None and self.step_size <= 0:
            raise ValueError(f"step_size must be positive, got {self.step_size}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.tolerance <= 0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")


@dataclass(frozen=True)
class GramMatrix:
    size: int
    entries: np.ndarray
    diagnostics: dict


def project_psd(matrix: np.ndarray) -> np.ndarray:
    """Frobenius-nearest PSD matrix: clip negative eigenvalues at zero."""
    matrix = np.asarray(matrix, dtype=float)
    if not np.all(np.isfinite(matrix)):
        raise ValueError("matrix contains non-finite entries")
    sym = 0.5 * (matrix + matrix.T)
    eigvals, eigvecs = np.linalg.eigh(sym)
    if eigvals[0] >= 0.0:
        return sym
    clipped = (eigvecs * np.maximum(eigvals, 0.0)) @ eigvecs.T
    return 0.5 * (clipped + clipped.T)


def _double_center(matrix: np.ndarray) -> np.ndarray:
    row = matrix.mean(axis=1, keepdims=True)
    col = matrix.mean(axis=0, keepdims=True)
    return matrix - row - col + matrix.mean()


def solve(constraints: ConstraintSet, config: SolverConfig = SolverConfig()) -> GramMatrix:
    """Fit a Gram matrix to the constraint set by projected subgradient descent."""
    triplets = constraints.triplets
    n_constraints = triplets.shape[0]
    if n_constraints == 0:
        raise ValueError("cannot solve an empty constraint set")
    m = constraints.m
    if triplets.min() < 0 or triplets.max() >= m:
        raise IndexError(f"constraint indices must lie in [0, {m})")

    anchor, near, far = triplets[:, 0], triplets[:, 1], triplets[:, 2]
    # Flat scatter targets of each hinge subgradient: +1 at (near,near),
    # -1 at (far,far), -1 at (anchor,near)+(near,anchor), +1 at
    # (anchor,far)+(far,anchor). The (anchor,anchor) terms cancel.
    scatter_idx = np.concatenate([
        near * m + near, far * m + far,
        anchor * m + near, near * m + anchor,
        anchor * m + far, far * m + anchor,
    ])
    signs = np.repeat(np.array([1.0, -1.0, -1.0, -1.0, 1.0, 1.0]), n_constraints)
    flat_near = anchor * m + near
    flat_far = anchor * m + far

    margin, lam = config.margin, config.lam

    def hinge_terms(k: np.ndarray) -> np.ndarray:
        diag = np.einsum("ii->i", k)
        d2_near = diag[anchor] + diag[near] - 2.0 * k.ravel()[flat_near]
        d2_far = diag[anchor] + diag[far] - 2.0 * k.ravel()[flat_far]
        return margin + d2_near - d2_far

    def objective(k: np.ndarray) -> float:
        hinges = hinge_terms(k)
        return float(np.maximum(hinges, 0.0).sum() + lam * np.trace(k))

    gram = np.zeros((m, m))
    obj = objective(gram)
    initial_objective = obj
    best_gram, best_obj = gram, obj
    eta = config.step_size if config.step_size is not None else 1.0 / n_constraints
    history = [best_obj]
    iterations = 0

    for _ in range(config.max_iterations):
        iterations += 1
        active = np.flatnonzero(np.tile(hinge_terms(gram) > 0.0, 6))
        grad = np.bincount(scatter_idx[active], weights=signs[active],
                           minlength=m * m).reshape(m, m) + lam * np.eye(m)
        candidate = _double_center(project_psd(gram - eta * grad))
        candidate_obj = objective(candidate)
        eta = eta * 0.5 if candidate_obj > obj else eta * _GROW
        gram, obj = candidate, candidate_obj
        if obj < best_obj:
            best_gram, best_obj = gram, obj
        history.append(best_obj)
        if eta < _MIN_STEP:
            break
        if (len(history) > _WINDOW
                and history[-1 - _WINDOW] - history[-1]
                <= config.tolerance * max(1.0, abs(history[-1]))):
            break

    gram, obj = best_gram, best_obj
    hinges = hinge_terms(gram)
    satisfied = float(np.mean(hinges - margin < 0.0))
    diagnostics = {
        "initial_objective": initial_objective,
        "final_objective": obj,
        "iterations": iterations,
        "satisfied_fraction": satisfied,
    }
    return GramMatrix(size=m, entries=gram, diagnostics=diagnostics)


def extract_embedding(gram: GramMatrix, h: int) -> np.ndarray:
    """Coordinates from the top-h eigenpairs: row i is (sqrt(l_j) v_j[i])_j."""
    if not 1 <= h <= gram.size:
        raise ValueError(f"embedding rank must lie in [1, {gram.size}], got {h}")
    eigvals, eigvecs = np.linalg.eigh(gram.entries)
    top = np.argsort(eigvals)[::-1][:h]
    scale = np.sqrt(np.maximum(eigvals[top], 0.0))
    return eigvecs[:, top] * scale


def gram_to_csv(gram: GramMatrix) -> str:
    lines = [",".join(repr(float(v)) for v in row) for row in gram.entries]
    return "\n".join(lines) + "\n"


def gram_from_csv(text: str, diagnostics: dict | None = None) -> GramMatrix:
    rows = [[float(v) for v in ln.split(",")] for ln in text.splitlines() if ln]
    entries = np.array(rows, dtype=float)
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        raise ValueError("gram CSV must be a dense square matrix")
    return GramMatrix(size=entries.shape[0], entries=entries,
                      diagnostics=dict(diagnostics or {}))
