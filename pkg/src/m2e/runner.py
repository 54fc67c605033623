"""Experiment drivers: fit, cluster, evaluate, grid search and CP runs.

Every driver writes its artifacts (matrices, traces, JSON documents) under
an output directory and also returns them in memory. Numeric files use 17
significant digits so reruns with the same seed are byte-identical.
"""
from __future__ import annotations

import dataclasses
import itertools
import json
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cluster import cluster_and_score, kmeans
from .cp import AlsOptions, cp_als_fit, cp_relative_error
from .dataio import Dataset, load_dataset, save_matrix
from .solver import M2eConfig, M2eSolution, m2e_ds_fit, m2e_fit, m2e_ts_fit

METHODS = ("m2e", "m2e-ds", "m2e-ts", "cp")
# cap on concurrent grid-search cells; unset or <=1 means sequential
WORKERS_ENV = "M2E_MAX_WORKERS"
_GRID_CELL_LIMIT = 10_000


@dataclass(frozen=True)
class RunConfig:
    """Full experiment configuration: solver settings plus protocol knobs."""

    method: str = "m2e"
    solver: M2eConfig = field(default_factory=M2eConfig)
    kmeans_k: int = 2
    kmeans_restarts: int = 20
    kmeans_max_iters: int = 100
    eval_repeats: int = 20
    positive_class: int = 1

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.kmeans_k < 1:
            raise ValueError("kmeans_k must be >= 1")
        if self.kmeans_restarts < 1 or self.eval_repeats < 1:
            raise ValueError("restarts and repeats must be >= 1")


@dataclass(frozen=True)
class GridSpec:
    """Search grid: per-view weight values crossed with embedding ranks."""

    lambda_grid: tuple[float, ...] = (1e-4, 1e-2, 1.0, 1e2, 1e4)
    rank_grid: tuple[int, ...] = tuple(range(1, 21))

    def __post_init__(self):
        if not self.lambda_grid or not self.rank_grid:
            raise ValueError("grids must be non-empty")
        if any(x <= 0 for x in self.lambda_grid) or any(r < 1 for r in self.rank_grid):
            raise ValueError("grid values must be positive")


def effective_config(config: RunConfig) -> dict:
    """The complete configuration, defaults included, as plain data."""
    return dataclasses.asdict(config)


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _as_dataset(dataset: Dataset | str | Path) -> Dataset:
    if isinstance(dataset, Dataset):
        return dataset
    return load_dataset(dataset)


def _fit(config: RunConfig, dataset: Dataset) -> M2eSolution:
    fitters = {"m2e": m2e_fit, "m2e-ds": m2e_ds_fit, "m2e-ts": m2e_ts_fit}
    if config.method not in fitters:
        raise ValueError(f"method {config.method!r} does not produce an embedding fit")
    return fitters[config.method](dataset.views, config.solver)


def run_fit(config: RunConfig, dataset: Dataset | str | Path,
            out_dir: str | Path) -> M2eSolution:
    """Fit the configured method and write embedding, factors and traces."""
    ds = _as_dataset(dataset)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    solution = _fit(config, ds)
    elapsed = time.perf_counter() - start

    save_matrix(out / "consensus.txt", solution.consensus, "consensus embedding")
    for name, h, f in zip(ds.view_names, solution.node_factors,
                          solution.subject_factors):
        save_matrix(out / f"{name}_node_factor.txt", h, f"node factor {name}")
        save_matrix(out / f"{name}_subject_factor.txt", f, f"subject factor {name}")
    trace = np.column_stack([
        np.arange(1, solution.iterations + 1),
        solution.objective_trace,
        solution.residual_trace,
    ])
    save_matrix(out / "trace.txt", trace, "iteration objective residual")
    _write_json(out / "summary.json", {
        "config": effective_config(config),
        "iterations": solution.iterations,
        "converged": solution.converged,
        "final_objective": solution.final_objective,
        "wall_time_seconds": elapsed,
    })
    return solution


def run_cluster(embedding: np.ndarray, config: RunConfig, out_dir: str | Path) -> dict:
    """k-means on embedding rows; writes labels and per-restart inertias."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = kmeans(embedding, config.kmeans_k, restarts=config.kmeans_restarts,
                    max_iters=config.kmeans_max_iters, seed=config.solver.seed)
    (out / "labels.txt").write_text("\n".join(str(x) for x in result.labels) + "\n")
    save_matrix(out / "inertias.txt", result.inertias.reshape(-1, 1),
                "inertia per restart")
    doc = {
        "config": effective_config(config),
        "best_restart": result.best_restart,
        "best_inertia": float(result.inertias[result.best_restart]),
    }
    _write_json(out / "summary.json", doc)
    return doc


def _single_evaluation(embedding, labels, config: RunConfig, rep: int) -> dict:
    report = cluster_and_score(
        embedding, labels, k=config.kmeans_k, restarts=config.kmeans_restarts,
        max_iters=config.kmeans_max_iters, seed=int(config.solver.seed + rep),
        positive_class=config.positive_class)
    return {
        "accuracy": report.accuracy,
        "precision": report.precision,
        "recall": report.recall,
        "f1": report.f1,
        "degenerate": report.degenerate,
    }


def run_evaluate(embedding: np.ndarray, labels: np.ndarray, config: RunConfig,
                 out_dir: str | Path | None = None) -> dict:
    """Repeat the clustering protocol and aggregate metrics.

    Runs `eval_repeats` independent repetitions, each a full restart
    k-means plus label matching, and reports per-repetition metrics along
    with their mean and standard deviation.
    """
    embedding = np.asarray(embedding, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if embedding.shape[0] != labels.shape[0]:
        raise ValueError(
            f"embedding has {embedding.shape[0]} rows but {labels.shape[0]} labels"
        )
    arity = len(np.unique(labels))
    if arity != config.kmeans_k:
        warnings.warn(
            f"labels carry {arity} distinct values but clustering uses "
            f"k={config.kmeans_k}; proceeding with the configured k",
            stacklevel=2,
        )
    reps = [_single_evaluation(embedding, labels, config, rep)
            for rep in range(config.eval_repeats)]
    metric_names = ("accuracy", "precision", "recall", "f1")
    doc = {
        "config": effective_config(config),
        "repetitions": reps,
        "mean": {m: float(np.mean([r[m] for r in reps])) for m in metric_names},
        "std": {m: float(np.std([r[m] for r in reps])) for m in metric_names},
    }
    if out_dir is not None:
        _write_json(Path(out_dir) / "metrics.json", doc)
    return doc


def _grid_cells(grid: GridSpec, n_views: int):
    return [
        {"lambdas": combo, "rank": rank}
        for combo in itertools.product(grid.lambda_grid, repeat=n_views)
        for rank in grid.rank_grid
    ]


def _evaluate_cell(cell, config: RunConfig, dataset: Dataset) -> dict:
    solver = dataclasses.replace(config.solver, lambdas=cell["lambdas"],
                                 rank=cell["rank"])
    cfg = dataclasses.replace(config, solver=solver)
    solution = _fit(cfg, dataset)
    doc = run_evaluate(solution.consensus, dataset.labels, cfg)
    return {
        "lambdas": list(cell["lambdas"]),
        "rank": cell["rank"],
        "mean_accuracy": doc["mean"]["accuracy"],
        "std_accuracy": doc["std"]["accuracy"],
    }


def run_gridsearch(grid: GridSpec, dataset: Dataset | str | Path, config: RunConfig,
                   out_dir: str | Path, allow_large: bool = False) -> list[dict]:
    """Evaluate every (view weights, rank) cell; returns rows ranked by accuracy.

    Writes the ranked table plus two sensitivity slices: accuracy versus
    rank at the best weights, and accuracy versus weights at the best rank.
    Cells are independent; set the environment variable named by
    ``WORKERS_ENV`` to evaluate them concurrently (output order is sorted
    and therefore scheduling-independent).
    """
    ds = _as_dataset(dataset)
    if ds.labels is None:
        raise ValueError("grid search needs ground-truth labels in the dataset")
    cells = _grid_cells(grid, len(ds.views))
    if len(cells) > _GRID_CELL_LIMIT and not allow_large:
        raise ValueError(
            f"grid has {len(cells)} cells (> {_GRID_CELL_LIMIT}); "
            "pass allow_large / --force-large-grid to proceed"
        )
    workers = int(os.environ.get(WORKERS_ENV, "1") or "1")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda c: _evaluate_cell(c, config, ds), cells))
    else:
        rows = [_evaluate_cell(c, config, ds) for c in cells]

    order = sorted(range(len(rows)),
                   key=lambda i: (-rows[i]["mean_accuracy"], i))
    ranked = [rows[i] for i in order]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    table = np.array([[*r["lambdas"], r["rank"], r["mean_accuracy"], r["std_accuracy"]]
                      for r in ranked])
    lam_cols = " ".join(f"lambda{v + 1}" for v in range(len(ds.views)))
    save_matrix(out / "grid_results.txt", table,
                f"{lam_cols} rank mean_accuracy std_accuracy")

    best = ranked[0]
    vs_rank = np.array([[r["rank"], r["mean_accuracy"]]
                        for r in rows
                        if r["lambdas"] == best["lambdas"]])
    save_matrix(out / "accuracy_vs_rank.txt", vs_rank, "rank mean_accuracy")
    vs_lambda = np.array([[*r["lambdas"], r["mean_accuracy"]]
                          for r in rows if r["rank"] == best["rank"]])
    save_matrix(out / "accuracy_vs_lambda.txt", vs_lambda,
                f"{lam_cols} mean_accuracy")
    _write_json(out / "summary.json", {
        "config": effective_config(config),
        "lambda_grid": list(grid.lambda_grid),
        "rank_grid": list(grid.rank_grid),
        "cells": len(cells),
        "best": best,
    })
    return ranked


def run_cp(dataset: Dataset | str | Path, view: str | int, rank: int,
           out_dir: str | Path, max_iters: int = 500, rel_tol: float = 1e-8,
           seed: int = 0) -> dict:
    """Plain CP factorization of a single view; writes factors and the trace."""
    ds = _as_dataset(dataset)
    if isinstance(view, str):
        if view not in ds.view_names:
            raise ValueError(f"unknown view {view!r}; have {ds.view_names}")
        idx = ds.view_names.index(view)
    else:
        idx = int(view)
        if not 0 <= idx < len(ds.views):
            raise ValueError(f"view index {idx} out of range")
    tensor = ds.views[idx].data
    fit = cp_als_fit(tensor, AlsOptions(rank=rank, max_iters=max_iters,
                                        rel_tol=rel_tol, seed=seed))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for mode, factor in enumerate(fit.factors, start=1):
        save_matrix(out / f"factor_mode{mode}.txt", factor, f"mode-{mode} factor")
    save_matrix(out / "error_trace.txt", fit.fit_trace.reshape(-1, 1),
                "relative error per iteration")
    doc = {
        "view": ds.view_names[idx],
        "rank": rank,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "degenerate": fit.degenerate,
        "relative_error": cp_relative_error(tensor, fit.factors),
    }
    _write_json(out / "summary.json", doc)
    return doc
