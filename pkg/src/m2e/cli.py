"""Command-line driver.

Subcommands: generate, fit, cluster, evaluate, gridsearch, cp. Settings
come from defaults, then an optional JSON config file, then flags (flags
win). On failure an error document is written to the output directory and
the exit status is nonzero.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .dataio import load_dataset, load_matrix, save_dataset
from .datagen import SyntheticSpec, bp_shape_preset, generate, hiv_shape_preset
from .runner import (GridSpec, RunConfig, run_cluster, run_cp, run_evaluate,
                     run_fit, run_gridsearch)
from .solver import M2eConfig


def _parse_lambda(items: list[str] | None) -> tuple[float, ...] | None:
    """Parse repeated --lambda v=x flags into a per-view weight tuple."""
    if not items:
        return None
    pairs = {}
    for item in items:
        try:
            key, value = item.split("=", 1)
            pairs[int(key)] = float(value)
        except ValueError as exc:
            raise ValueError(f"--lambda expects v=x (e.g. 1=0.01), got {item!r}") from exc
    if sorted(pairs) != list(range(1, len(pairs) + 1)):
        raise ValueError(f"--lambda views must be 1..V, got {sorted(pairs)}")
    return tuple(pairs[v] for v in sorted(pairs))


def _parse_grid_values(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(","))


def _parse_rank_grid(text: str) -> tuple[int, ...]:
    if ":" in text:
        lo, hi = text.split(":", 1)
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(x) for x in text.split(","))


def _parse_sizes(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(","))


def _build_run_config(args) -> RunConfig:
    file_cfg: dict = {}
    if getattr(args, "config", None):
        file_cfg = json.loads(Path(args.config).read_text())
    solver_cfg = dict(file_cfg.get("solver", {}))
    if solver_cfg.get("lambdas") is not None:
        solver_cfg["lambdas"] = tuple(solver_cfg["lambdas"])

    def override(target: dict, key: str, value):
        if value is not None:
            target[key] = value

    override(solver_cfg, "rank", getattr(args, "rank", None))
    override(solver_cfg, "lambdas", _parse_lambda(getattr(args, "lam", None)))
    override(solver_cfg, "seed", getattr(args, "seed", None))
    override(solver_cfg, "max_outer_iters", getattr(args, "max_iters", None))
    override(solver_cfg, "obj_rel_tol", getattr(args, "tol", None))
    override(solver_cfg, "residual_tol", getattr(args, "residual_tol", None))
    override(solver_cfg, "mu", getattr(args, "mu", None))
    override(solver_cfg, "mu_growth", getattr(args, "mu_growth", None))
    override(solver_cfg, "inner_steps", getattr(args, "inner_steps", None))

    top = {k: v for k, v in file_cfg.items() if k != "solver"}
    override(top, "method", getattr(args, "method", None))
    override(top, "kmeans_k", getattr(args, "k", None))
    override(top, "kmeans_restarts", getattr(args, "restarts", None))
    override(top, "eval_repeats", getattr(args, "repeats", None))
    override(top, "positive_class", getattr(args, "positive_class", None))
    return RunConfig(solver=M2eConfig(**solver_cfg), **top)


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", help="JSON config file; flags override its values")


def _add_solver_flags(p: argparse.ArgumentParser):
    p.add_argument("--method", choices=("m2e", "m2e-ds", "m2e-ts"), default=None)
    p.add_argument("--rank", type=int, default=None)
    p.add_argument("--lambda", dest="lam", action="append", metavar="V=X",
                   help="per-view weight, repeatable (e.g. --lambda 1=0.01)")
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("--tol", type=float, default=None,
                   help="relative objective-change tolerance")
    p.add_argument("--residual-tol", type=float, default=None)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--mu-growth", type=float, default=None)
    p.add_argument("--inner-steps", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="m2e",
        description="Consensus embedding and clustering of multi-view graph data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic dataset")
    _add_common(g)
    g.add_argument("--preset", choices=("hiv", "bp"))
    g.add_argument("--views", type=int, default=None)
    g.add_argument("--nodes", type=int, default=None)
    g.add_argument("--subjects", type=int, default=None)
    g.add_argument("--cluster-sizes", type=_parse_sizes, default=None,
                   metavar="N1,N2,...")
    g.add_argument("--latent-rank", type=int, default=None)
    g.add_argument("--separation", type=float, default=None)
    g.add_argument("--noise", type=float, default=None)
    g.add_argument("--jitter", type=float, default=None)

    f = sub.add_parser("fit", help="fit an embedding to a dataset")
    _add_common(f)
    f.add_argument("--dataset", required=True)
    _add_solver_flags(f)

    c = sub.add_parser("cluster", help="k-means on an embedding file")
    _add_common(c)
    c.add_argument("--embedding", required=True)
    c.add_argument("--k", type=int, default=None)
    c.add_argument("--restarts", type=int, default=None)

    e = sub.add_parser("evaluate", help="score an embedding against labels")
    _add_common(e)
    e.add_argument("--embedding", required=True)
    e.add_argument("--labels", help="labels file (one integer per line)")
    e.add_argument("--dataset", help="dataset directory providing the labels")
    e.add_argument("--k", type=int, default=None)
    e.add_argument("--restarts", type=int, default=None)
    e.add_argument("--repeats", type=int, default=None)
    e.add_argument("--positive-class", type=int, default=None)

    gs = sub.add_parser("gridsearch", help="search view weights and rank")
    _add_common(gs)
    gs.add_argument("--dataset", required=True)
    gs.add_argument("--lambda-grid", type=_parse_grid_values, default=None,
                    metavar="X1,X2,...")
    gs.add_argument("--rank-grid", type=_parse_rank_grid, default=None,
                    metavar="LO:HI|R1,R2,...")
    gs.add_argument("--force-large-grid", action="store_true")
    gs.add_argument("--restarts", type=int, default=None)
    gs.add_argument("--repeats", type=int, default=None)
    gs.add_argument("--method", choices=("m2e", "m2e-ds", "m2e-ts"), default=None)
    gs.add_argument("--max-iters", type=int, default=None)

    cp = sub.add_parser("cp", help="plain CP factorization of one view")
    _add_common(cp)
    cp.add_argument("--dataset", required=True)
    cp.add_argument("--view", default="0", help="view name or 0-based index")
    cp.add_argument("--rank", type=int, required=True)
    cp.add_argument("--max-iters", type=int, default=500)
    cp.add_argument("--tol", type=float, default=1e-8)

    return parser


def _cmd_generate(args) -> None:
    if args.preset:
        spec = hiv_shape_preset() if args.preset == "hiv" else bp_shape_preset()
    else:
        spec = SyntheticSpec()
    updates = {}
    for flag, fld in (("views", "views"), ("nodes", "nodes"), ("subjects", "subjects"),
                      ("cluster_sizes", "cluster_sizes"), ("latent_rank", "latent_rank"),
                      ("separation", "separation"), ("noise", "noise_sigma"),
                      ("jitter", "jitter"), ("seed", "seed")):
        value = getattr(args, flag)
        if value is not None:
            updates[fld] = value
    spec = dataclasses.replace(spec, **updates)
    views, labels = generate(spec)
    save_dataset(args.out, views, labels,
                 metadata={"generator": dataclasses.asdict(spec)})


def _cmd_fit(args) -> None:
    run_fit(_build_run_config(args), load_dataset(args.dataset), args.out)


def _cmd_cluster(args) -> None:
    run_cluster(load_matrix(args.embedding), _build_run_config(args), args.out)


def _cmd_evaluate(args) -> None:
    if args.labels:
        raw = [x for x in Path(args.labels).read_text().split() if x]
        labels = np.array([int(v) for v in raw])
    elif args.dataset:
        ds = load_dataset(args.dataset)
        if ds.labels is None:
            raise ValueError(
                f"dataset {args.dataset} has no labels file; evaluation needs "
                "ground truth (pass --labels or add labels to the manifest)"
            )
        labels = ds.labels
    else:
        raise ValueError("evaluate needs --labels or --dataset to supply ground truth")
    run_evaluate(load_matrix(args.embedding), labels, _build_run_config(args), args.out)


def _cmd_gridsearch(args) -> None:
    grid_kwargs = {}
    if args.lambda_grid is not None:
        grid_kwargs["lambda_grid"] = args.lambda_grid
    if args.rank_grid is not None:
        grid_kwargs["rank_grid"] = args.rank_grid
    run_gridsearch(GridSpec(**grid_kwargs), load_dataset(args.dataset),
                   _build_run_config(args), args.out,
                   allow_large=args.force_large_grid)


def _cmd_cp(args) -> None:
    view = int(args.view) if args.view.isdigit() else args.view
    run_cp(load_dataset(args.dataset), view, args.rank, args.out,
           max_iters=args.max_iters, rel_tol=args.tol, seed=args.seed or 0)


_COMMANDS = {
    "generate": _cmd_generate,
    "fit": _cmd_fit,
    "cluster": _cmd_cluster,
    "evaluate": _cmd_evaluate,
    "gridsearch": _cmd_gridsearch,
    "cp": _cmd_cp,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _COMMANDS[args.command](args)
    except Exception as exc:  # noqa: BLE001 - boundary: report, emit, fail
        out = getattr(args, "out", None)
        if out:
            Path(out).mkdir(parents=True, exist_ok=True)
            (Path(out) / "error.json").write_text(json.dumps({
                "error": type(exc).__name__,
                "message": str(exc),
                "command": args.command,
            }, indent=2) + "\n")
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
