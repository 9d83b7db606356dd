"""Command-line harness: seeded sweeps, closed-form analysis, embedding,
cost-benefit tables, and sparsity curves, all emitted as CSV/JSON/SVG.

Exit codes: 0 success, 1 any cell failure (per-cell status still written),
2 usage/config error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, costbenefit, render, sweep, triplets
from .costbenefit import SignalOption, TradeoffConfig, UtilityKind
from .gnmds import SolverConfig, extract_embedding, gram_to_csv, solve
from .labels import LabelKind


class UsageError(Exception):
    pass


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config must be a JSON object")
    return data


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(outdir: Path, command: str, spec_dict: dict,
                    workers: int, wall_time: float) -> None:
    manifest = {
        "command": command,
        "tool_version": __version__,
        "spec": spec_dict,
        "workers": workers,
        "wall_time_seconds": wall_time,
    }
    (outdir / "run_manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def _sweep_spec(args) -> sweep.SweepSpec:
    try:
        spec = sweep.SweepSpec.from_dict(_load_config(args.config))
        if args.seed is not None:
            spec = dataclasses.replace(spec, base_seed=args.seed)
        return spec
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"bad sweep config: {exc}") from exc


def cmd_simulate(args) -> int:
    spec = _sweep_spec(args)
    outdir = _outdir(args)
    start = time.perf_counter()
    rows, times = sweep.run_sweep(spec, workers=args.workers)
    (outdir / "sweep.csv").write_text(sweep.rows_to_csv(rows))
    (outdir / "timings.csv").write_text(sweep.timings_to_csv(rows, times))
    try:
        svg, pivot_csv = render.render_heatmap(rows, "rho", "kind")
        (outdir / "heatmap_rho_kind.svg").write_text(svg)
        (outdir / "heatmap_rho_kind.csv").write_text(pivot_csv)
    except ValueError:
        pass  # every cell failed; sweep.csv still carries the statuses
    _write_manifest(outdir, "simulate", spec.to_dict(), args.workers,
                    time.perf_counter() - start)
    failures = sum(row["status"] != "ok" for row in rows)
    if failures:
        print(f"simulate: {failures}/{len(rows)} cells failed", file=sys.stderr)
        return 1
    return 0


def cmd_analyze(args) -> int:
    config = _load_config(args.config)
    try:
        n_grid = tuple(config.get("n_grid", sweep.SweepSpec().n_grid))
        k_grid = tuple(config.get("k_grid", sweep.SweepSpec().k_grid))
        if not n_grid or not k_grid:
            raise ValueError("n_grid and k_grid must be non-empty")
        rows = []
        for n in n_grid:
            for k in k_grid:
                counts = {"hard": triplets.count_hard(n, k),
                          "soft": triplets.count_soft(n, k)}
                for kind, count in counts.items():
                    rows.append({"n": n, "k": k, "kind": kind,
                                 "information_ratio":
                                     triplets.information_ratio(count, n, k)})
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad analyze config: {exc}") from exc
    outdir = _outdir(args)
    start = time.perf_counter()
    lines = ["n,k,kind,information_ratio"]
    lines.extend(f"{r['n']},{r['k']},{r['kind']},{repr(r['information_ratio'])}"
                 for r in rows)
    (outdir / "analysis.csv").write_text("\n".join(lines) + "\n")
    svg, pivot_csv = render.render_heatmap(rows, "information_ratio", "kind")
    (outdir / "heatmap_information_ratio_kind.svg").write_text(svg)
    (outdir / "heatmap_information_ratio_kind.csv").write_text(pivot_csv)
    _write_manifest(outdir, "analyze",
                    {"n_grid": list(n_grid), "k_grid": list(k_grid)},
                    args.workers, time.perf_counter() - start)
    return 0


def cmd_embed(args) -> int:
    config = _load_config(args.config)
    if "constraints_csv" not in config:
        raise UsageError("embed config needs a 'constraints_csv' path")
    try:
        constraints = triplets.constraints_from_csv(
            Path(config["constraints_csv"]).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read constraints: {exc}") from exc
    except ValueError as exc:
        raise UsageError(f"bad constraints CSV: {exc}") from exc
    try:
        solver = SolverConfig(**config.get("solver", {}))
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad solver config: {exc}") from exc
    outdir = _outdir(args)
    start = time.perf_counter()
    try:
        gram = solve(constraints, solver)
        rank = config.get("embedding_rank")
        if rank is not None:
            coords = extract_embedding(gram, int(rank))
            coord_lines = [",".join(repr(float(v)) for v in row) for row in coords]
            (outdir / "embedding.csv").write_text("\n".join(coord_lines) + "\n")
    except (ValueError, IndexError) as exc:
        print(f"embed: solve failed: {exc}", file=sys.stderr)
        return 1
    (outdir / "gram.csv").write_text(gram_to_csv(gram))
    (outdir / "diagnostics.json").write_text(
        json.dumps(gram.diagnostics, indent=2) + "\n")
    _write_manifest(outdir, "embed", config, args.workers,
                    time.perf_counter() - start)
    return 0


def _options_from_sweep_rows(rows, n: int, k: int, d: int):
    """Aggregate filtered sweep rows into one SignalOption per (kind, k_hat)."""
    groups: dict = {}
    for row in rows:
        if (row.get("status", "ok") != "ok" or row["rho"] == ""
                or int(row["n"]) != n or int(row["k"]) != k
                or int(row["d"]) != d or float(row["epsilon"]) != 0.0):
            continue
        k_hat = int(row["k_hat"]) if str(row["k_hat"]) != "" else None
        key = (row["kind"], k_hat)
        groups.setdefault(key, []).append(
            (float(row["rho"]), float(row["c_hat"])))
    options = []
    for (kind_str, k_hat), samples in sorted(
            groups.items(), key=lambda kv: (kv[0][0], kv[0][1] or 0)):
        kind = LabelKind(kind_str)
        mean_rho = sum(r for r, _ in samples) / len(samples)
        c_hat = samples[0][1]
        if k_hat is None:
            k_hat = k if kind is LabelKind.SOFT else 1
        options.append(SignalOption(kind=kind, k_hat=k_hat,
                                    rho=float(np.clip(mean_rho, -1.0, 1.0)),
                                    cost_units=c_hat))
    return options


def cmd_tradeoff(args) -> int:
    config = _load_config(args.config)
    for key in ("sweep_csv", "n", "k", "d"):
        if key not in config:
            raise UsageError(f"tradeoff config needs '{key}'")
    try:
        rows = sweep.rows_from_csv(Path(config["sweep_csv"]).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read sweep CSV: {exc}") from exc
    n, k, d = int(config["n"]), int(config["k"]), int(config["d"])
    try:
        utility_kind = UtilityKind(config.get("utility_kind", "linear"))
        beta_grid = [float(b) for b in
                     config.get("beta_grid", np.linspace(0.0, 0.5, 50))]
    except ValueError as exc:
        raise UsageError(f"bad tradeoff config: {exc}") from exc
    options = _options_from_sweep_rows(rows, n, k, d)
    if not any(o.kind in (LabelKind.SPARSE_SOFT, LabelKind.TOP_CLASS)
               for o in options):
        raise UsageError("sweep has no sparse/top-class rows for this cell; "
                         "run a sparsity sweep first")
    outdir = _outdir(args)
    start = time.perf_counter()
    table_rows = []
    panels = []
    panel_betas = {beta_grid[round(i * (len(beta_grid) - 1) / 3)]
                   for i in range(4)} if len(beta_grid) > 4 else set(beta_grid)
    for beta in beta_grid:
        cfg = TradeoffConfig(beta=beta, utility_kind=utility_kind)
        table = costbenefit.tradeoff_table(options, cfg)
        table_rows.extend(table)
        if beta in panel_betas:
            series = {}
            hlines = {}
            for opt in options:
                value = costbenefit.loss(opt, cfg)
                if opt.kind in (LabelKind.SPARSE_SOFT, LabelKind.TOP_CLASS,
                                LabelKind.PCA_COORDS):
                    series.setdefault(opt.kind.value, []).append((opt.k_hat, value))
                else:
                    hlines[opt.kind.value] = value
            best = costbenefit.optimize_sparsity(options, cfg)
            panels.append({
                "title": f"n={n} k={k} beta={beta:.4g}",
                "series": series, "hlines": hlines,
                "marker": (best.k_hat, costbenefit.loss(best, cfg),
                           best.kind.value),
            })
    (outdir / "tradeoff.csv").write_text(costbenefit.tradeoff_to_csv(table_rows))
    (outdir / "tradeoff.svg").write_text(
        render.render_curve_panels(panels, xlabel="k_hat", ylabel="loss"))
    _write_manifest(outdir, "tradeoff", {**config, "beta_grid": beta_grid},
                    args.workers, time.perf_counter() - start)
    return 0


def cmd_sparsity(args) -> int:
    config = _load_config(args.config)
    try:
        n = int(config.get("n", 20))
        k = int(config.get("k", 20))
        d = int(config.get("d", 5))
        k_hat_grid = sorted({int(v) for v in
                             config.get("k_hat_grid", (1, 2, 3, 5, 10))
                             if 1 <= int(v) <= k})
        if not k_hat_grid:
            raise ValueError("k_hat_grid has no usable values in [1, k]")
        signals = [sweep.SignalSpec(LabelKind.HARD), sweep.SignalSpec(LabelKind.SOFT)]
        for kind in (LabelKind.SPARSE_SOFT, LabelKind.TOP_CLASS,
                     LabelKind.PCA_COORDS):
            signals.extend(sweep.SignalSpec(kind, k_hat=kh) for kh in k_hat_grid)
        spec = sweep.SweepSpec(
            n_grid=(n,), k_grid=(k,), d_grid=(d,), signals=tuple(signals),
            epsilon_grid=(0.0,),
            reps=int(config.get("reps", 3)),
            sigma=float(config.get("sigma", 0.5)),
            base_seed=args.seed if args.seed is not None
            else int(config.get("base_seed", 0)),
            solver=SolverConfig(**config.get("solver", {})),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"bad sparsity config: {exc}") from exc
    outdir = _outdir(args)
    start = time.perf_counter()
    rows, times = sweep.run_sweep(spec, workers=args.workers)
    (outdir / "sparsity.csv").write_text(sweep.rows_to_csv(rows))
    (outdir / "timings.csv").write_text(sweep.timings_to_csv(rows, times))
    ok_rows = [r for r in rows if r["status"] == "ok"]
    if ok_rows:
        series: dict = {}
        hlines = {}
        for kind in ("sparse", "topclass", "pca"):
            pts: dict = {}
            for row in ok_rows:
                if row["kind"] == kind:
                    pts.setdefault(int(row["k_hat"]), []).append(float(row["rho"]))
            if pts:
                series[kind] = [(kh, sum(v) / len(v)) for kh, v in sorted(pts.items())]
        for kind in ("hard", "soft"):
            vals = [float(r["rho"]) for r in ok_rows if r["kind"] == kind]
            if vals:
                hlines[kind] = sum(vals) / len(vals)
        panel = {"title": f"n={n} k={k} d={d}", "series": series, "hlines": hlines}
        (outdir / "sparsity.svg").write_text(
            render.render_curve_panels([panel], xlabel="k_hat", ylabel="rho"))
    _write_manifest(outdir, "sparsity", spec.to_dict(), args.workers,
                    time.perf_counter() - start)
    failures = len(rows) - len(ok_rows)
    if failures:
        print(f"sparsity: {failures}/{len(rows)} cells failed", file=sys.stderr)
        return 1
    return 0


def cmd_defaults(args) -> int:
    text = json.dumps(sweep.SweepSpec().to_dict(), indent=2)
    print(text)
    if args.out != ".":
        (_outdir(args) / "defaults.json").write_text(text + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="labelinfo",
        description="Simulate how informative hard/soft/sparse labels are "
                    "for recovering latent representations.")
    sub = parser.add_subparsers(dest="command", required=True)
    handlers = {
        "simulate": (cmd_simulate, "run a full sweep (datasets -> labels -> "
                                   "constraints -> embedding -> scores)"),
        "analyze": (cmd_analyze, "closed-form information-ratio heatmaps, no solver"),
        "embed": (cmd_embed, "solve one constraint CSV into a Gram matrix"),
        "tradeoff": (cmd_tradeoff, "cost-benefit tables/curves from a sweep CSV"),
        "sparsity": (cmd_sparsity, "recovery-vs-k_hat curves for partial signals"),
        "defaults": (cmd_defaults, "print the default sweep configuration"),
    }
    for name, (func, help_text) in handlers.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None, help="JSON config path")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--seed", type=int, default=None,
                       help="override the config base seed")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())
