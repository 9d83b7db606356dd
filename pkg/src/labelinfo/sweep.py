"""Deterministic grid-sweep engine: dataset -> labels -> constraints -> solve -> score.

Cells are fully self-contained work items keyed by (n, k, d, signal,
epsilon, rep); every random draw comes from a seed derived by a stable
keyed hash, so results are identical regardless of worker count or
execution order. Wall-clock timings are collected separately from the
result rows to keep the emitted sweep CSV byte-reproducible.
"""
from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field
from multiprocessing import get_context

import numpy as np

from . import costbenefit, triplets
from .costbenefit import TradeoffConfig, UtilityKind
from .gnmds import SolverConfig, solve
from .labels import (LabelKind, LabelSet, hard_labels, pca_encode, smooth_labels,
                     soft_labels, sparsify_labels, topclass_labels,
                     typicality_labels)
from .latentgen import LatentDataset, generate_dataset, similarity_matrix
from .metrics import PcaCurve, effective_dimensionality, recovery_score

SWEEP_COLUMNS = ("n", "k", "d", "kind", "k_hat", "epsilon", "seed",
                 "constraint_count", "information_ratio", "rho",
                 "satisfied_fraction", "c_hat", "loss", "status")

_DEFAULT_SMOOTHING = 0.05


def derive_seed(base_seed: int, **fields) -> int:
    """Stable 64-bit seed from a base seed and named cell coordinates."""
    payload = "|".join(f"{name}={fields[name]!r}" for name in sorted(fields))
    digest = hashlib.blake2b(payload.encode(), digest_size=8,
                             key=int(base_seed).to_bytes(8, "little")).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class SignalSpec:
    kind: LabelKind
    k_hat: int | None = None
    param: float | None = None  # smoothing rate / constant typicality score

    def __post_init__(self):
        needs_k_hat = self.kind in (LabelKind.SPARSE_SOFT, LabelKind.TOP_CLASS,
                                    LabelKind.PCA_COORDS)
        if needs_k_hat and (self.k_hat is None or self.k_hat < 1):
            raise ValueError(f"signal {self.kind.value} requires k_hat >= 1")

    def to_dict(self) -> dict:
        out = {"kind": self.kind.value}
        if self.k_hat is not None:
            out["k_hat"] = self.k_hat
        if self.param is not None:
            out["param"] = self.param
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SignalSpec":
        return cls(kind=LabelKind(data["kind"]), k_hat=data.get("k_hat"),
                   param=data.get("param"))


@dataclass(frozen=True)
class SweepSpec:
    n_grid: tuple = (3, 5, 10, 20, 40)
    k_grid: tuple = (3, 5, 10, 20, 40)
    d_grid: tuple = (5, 25, 125)
    signals: tuple = (SignalSpec(LabelKind.HARD), SignalSpec(LabelKind.SOFT))
    epsilon_grid: tuple = (0.0,)
    reps: int = 3
    sigma: float = 0.5
    base_seed: int = 0
    solver: SolverConfig = field(default_factory=SolverConfig)
    tradeoff: TradeoffConfig = field(default_factory=lambda: TradeoffConfig(beta=0.1))

    def __post_init__(self):
        for name in ("n_grid", "k_grid", "d_grid", "signals", "epsilon_grid"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
            if not getattr(self, name):
                raise ValueError(f"{name} must be non-empty")
        if self.reps < 1:
            raise ValueError(f"reps must be >= 1, got {self.reps}")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if min(self.n_grid) + min(self.k_grid) < 3:
            raise ValueError("every (n, k) cell needs n + k >= 3")
        if any(not 0 <= e <= 1 for e in self.epsilon_grid):
            raise ValueError("flip rates must lie in [0, 1]")

    def cells(self):
        """Deterministic cell order; one result row per cell."""
        for n in self.n_grid:
            for k in self.k_grid:
                for d in self.d_grid:
                    for signal in self.signals:
                        for eps in self.epsilon_grid:
                            for rep in range(self.reps):
                                yield (n, k, d, signal, eps, rep)

    def to_dict(self) -> dict:
        return {
            "n_grid": list(self.n_grid),
            "k_grid": list(self.k_grid),
            "d_grid": list(self.d_grid),
            "signals": [s.to_dict() for s in self.signals],
            "epsilon_grid": list(self.epsilon_grid),
            "reps": self.reps,
            "sigma": self.sigma,
            "base_seed": self.base_seed,
            "solver": {
                "margin": self.solver.margin,
                "lam": self.solver.lam,
                "step_size": self.solver.step_size,
                "max_iterations": self.solver.max_iterations,
                "tolerance": self.solver.tolerance,
                "seed": self.solver.seed,
            },
            "tradeoff": {
                "beta": self.tradeoff.beta,
                "utility_kind": self.tradeoff.utility_kind.value,
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SweepSpec":
        kwargs = {}
        for name in ("n_grid", "k_grid", "d_grid", "epsilon_grid"):
            if name in data:
                kwargs[name] = tuple(data[name])
        if "signals" in data:
            kwargs["signals"] = tuple(SignalSpec.from_dict(s) for s in data["signals"])
        for name in ("reps", "sigma", "base_seed"):
            if name in data:
                kwargs[name] = data[name]
        if "solver" in data:
            kwargs["solver"] = SolverConfig(**data["solver"])
        if "tradeoff" in data:
            t = data["tradeoff"]
            kwargs["tradeoff"] = TradeoffConfig(
                beta=t["beta"],
                utility_kind=UtilityKind(t.get("utility_kind", "linear")))
        return cls(**kwargs)


def build_labels(dataset: LatentDataset, signal: SignalSpec) -> LabelSet:
    """Materialize one supervision signal for a dataset."""
    kind = signal.kind
    if kind is LabelKind.HARD:
        return hard_labels(dataset)
    if kind is LabelKind.SOFT:
        return soft_labels(dataset)
    if kind is LabelKind.SMOOTHED:
        eps = signal.param if signal.param is not None else _DEFAULT_SMOOTHING
        return smooth_labels(hard_labels(dataset), eps)
    if kind is LabelKind.TYPICALITY:
        hard = hard_labels(dataset)
        if signal.param is not None:
            scores = np.full(dataset.n, float(signal.param))
        else:
            # default: each point's soft mass on its hard class
            soft = soft_labels(dataset)
            scores = soft.values[np.arange(dataset.n), np.argmax(hard.values, axis=1)]
        return typicality_labels(hard, scores)
    if kind is LabelKind.SPARSE_SOFT:
        return sparsify_labels(soft_labels(dataset), signal.k_hat)
    if kind is LabelKind.TOP_CLASS:
        reference = similarity_matrix(dataset.points)
        return topclass_labels(soft_labels(dataset), signal.k_hat, reference)
    if kind is LabelKind.PCA_COORDS:
        k_eff = min(signal.k_hat, dataset.d, dataset.n + dataset.k)
        return pca_encode(dataset, k_eff)
    raise ValueError(f"no label builder for kind {kind!r}")


def mine_constraints(labels: LabelSet, n_points: int) -> triplets.ConstraintSet:
    if labels.kind is LabelKind.HARD:
        return triplets.mine_from_hard(labels)
    if labels.kind is LabelKind.PCA_COORDS:
        return triplets.mine_from_coordinates(labels, n_points)
    return triplets.mine_from_soft(labels)


def _effective_k_hat(signal: SignalSpec, dataset: LatentDataset) -> int | None:
    if signal.kind is LabelKind.PCA_COORDS:
        return min(signal.k_hat, dataset.d, dataset.n + dataset.k)
    return signal.k_hat


def evaluate_cell(spec: SweepSpec, cell) -> tuple[dict, float]:
    """Run one (n, k, d, signal, epsilon, rep) cell; never raises.

    Returns the result row and the cell wall time. Failures are recorded in
    the row's status field so a sweep survives individual bad cells.
    """
    n, k, d, signal, eps, rep = cell
    ds_seed = derive_seed(spec.base_seed, n=n, k=k, d=d, rep=rep)
    k_hat_requested = signal.k_hat
    row = {"n": n, "k": k, "d": d, "kind": signal.kind.value,
           "k_hat": "" if k_hat_requested is None else k_hat_requested,
           "epsilon": eps, "seed": ds_seed,
           "constraint_count": "", "information_ratio": "", "rho": "",
           "satisfied_fraction": "", "c_hat": "", "loss": "", "status": "ok"}
    start = time.perf_counter()
    try:
        dataset = generate_dataset(n=n, k=k, d=d, sigma=spec.sigma, seed=ds_seed)
        labels = build_labels(dataset, signal)
        k_hat_eff = _effective_k_hat(signal, dataset)
        if k_hat_eff is not None:
            row["k_hat"] = k_hat_eff
        constraints = mine_constraints(labels, dataset.n)
        if eps > 0:
            noise_seed = derive_seed(spec.base_seed, n=n, k=k, d=d, rep=rep,
                                     kind=signal.kind.value,
                                     k_hat=k_hat_eff, epsilon=eps, stage="noise")
            constraints = triplets.apply_noise(constraints, eps, noise_seed)
        gram = solve(constraints, spec.solver)
        truth = similarity_matrix(dataset.all_items())
        rho = recovery_score(gram, truth)
        c_hat = costbenefit.cost(signal.kind, n, k, k_hat_eff)
        option = costbenefit.SignalOption(
            kind=signal.kind, k_hat=k_hat_eff if k_hat_eff is not None else
            (k if signal.kind is LabelKind.SOFT else 1),
            rho=rho, cost_units=c_hat)
        row.update({
            "constraint_count": len(constraints),
            "information_ratio": triplets.information_ratio(len(constraints), n, k),
            "rho": rho,
            "satisfied_fraction": gram.diagnostics["satisfied_fraction"],
            "c_hat": c_hat,
            "loss": costbenefit.loss(option, spec.tradeoff),
        })
    except Exception as exc:  # cell failures are data, not crashes
        message = f"{type(exc).__name__}: {exc}".replace(",", ";").replace("\n", " ")
        row["status"] = f"error: {message}"
    return row, time.perf_counter() - start


def _worker(args):
    spec_dict, cell_key = args
    spec = SweepSpec.from_dict(spec_dict)
    n, k, d, signal_dict, eps, rep = cell_key
    cell = (n, k, d, SignalSpec.from_dict(signal_dict), eps, rep)
    return evaluate_cell(spec, cell)


def run_sweep(spec: SweepSpec, workers: int = 1):
    """All cells in deterministic order. Returns (rows, wall_times)."""
    cells = list(spec.cells())
    if workers <= 1:
        results = [evaluate_cell(spec, cell) for cell in cells]
    else:
        spec_dict = spec.to_dict()
        jobs = [(spec_dict, (n, k, d, s.to_dict(), eps, rep))
                for (n, k, d, s, eps, rep) in cells]
        with get_context("spawn").Pool(processes=workers) as pool:
            results = pool.map(_worker, jobs)  # map preserves submission order
    rows = [row for row, _ in results]
    times = [t for _, t in results]
    return rows, times


def _format_value(value) -> str:
    if isinstance(value, float):  # includes numpy scalars, whose repr differs
        return repr(float(value))
    return str(value)


def rows_to_csv(rows, columns=SWEEP_COLUMNS) -> str:
    lines = [",".join(columns)]
    lines.extend(",".join(_format_value(row[c]) for c in columns) for row in rows)
    return "\n".join(lines) + "\n"


def rows_from_csv(text: str):
    lines = [ln for ln in text.splitlines() if ln]
    columns = lines[0].split(",")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",", len(columns) - 1)
        rows.append(dict(zip(columns, parts)))
    return rows


def timings_to_csv(rows, times) -> str:
    lines = ["n,k,d,kind,k_hat,epsilon,seed,wall_time"]
    for row, t in zip(rows, times):
        key = ",".join(_format_value(row[c]) for c in
                       ("n", "k", "d", "kind", "k_hat", "epsilon", "seed"))
        lines.append(f"{key},{repr(t)}")
    return "\n".join(lines) + "\n"


def pca_recovery_curve(dataset: LatentDataset, k_hats,
                       solver: SolverConfig = SolverConfig()) -> PcaCurve:
    """Recovery rho as a function of retained principal components."""
    truth = similarity_matrix(dataset.all_items())
    cap = min(dataset.d, dataset.n + dataset.k)
    usable = sorted({min(int(kh), cap) for kh in k_hats})
    points = []
    for k_hat in usable:
        encoded = pca_encode(dataset, k_hat)
        constraints = triplets.mine_from_coordinates(encoded, dataset.n)
        gram = solve(constraints, solver)
        points.append((k_hat, recovery_score(gram, truth)))
    return PcaCurve(tuple(points))


def effective_dim_for_dataset(dataset: LatentDataset,
                              solver: SolverConfig = SolverConfig(),
                              k_hats=None):
    """Minimum retained-PC count matching the soft-label recovery of this dataset.

    Returns (k_hat, saturated, rho_soft, curve).
    """
    soft = soft_labels(dataset)
    gram = solve(triplets.mine_from_soft(soft), solver)
    rho_soft = recovery_score(gram, similarity_matrix(dataset.all_items()))
    if k_hats is None:
        k_hats = range(1, min(dataset.d, dataset.n + dataset.k) + 1)
    curve = pca_recovery_curve(dataset, k_hats, solver)
    k_hat, saturated = effective_dimensionality(rho_soft, curve)
    return k_hat, saturated, rho_soft, curve
