"""Restart k-means over embedding rows, label matching and binary metrics.

Cluster ids are 1-based everywhere in this module, matching the on-disk
label convention.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

# exhaustive permutation search is cheap up to this many clusters
_EXHAUSTIVE_K = 6


@dataclass(frozen=True)
class KmeansResult:
    labels: np.ndarray          # (N,) ints in 1..K, from the best restart
    inertias: np.ndarray        # per-restart within-cluster sum of squares
    best_restart: int


@dataclass(frozen=True)
class LabelMatch:
    mapping: np.ndarray         # mapping[i] = truth id assigned to predicted id i+1
    matched_labels: np.ndarray
    accuracy: float


@dataclass(frozen=True)
class BinaryMetrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    degenerate: bool            # a precision/recall denominator was zero


@dataclass(frozen=True)
class ClusteringReport:
    labels: np.ndarray
    matched_labels: np.ndarray
    accuracy: float
    precision: float
    recall: float
    f1: float
    inertias: np.ndarray = field(repr=False)
    best_restart: int
    degenerate: bool = False


def lloyd(points: np.ndarray, centroids: np.ndarray, max_iters: int = 100):
    """Lloyd iterations from given centroids.

    Returns (labels 0-based, centroids, inertia_trace) where the trace holds
    the inertia after every assignment step and is non-increasing. Ties go
    to the lowest centroid index; a cluster left empty is re-seeded from the
    point currently farthest from its centroid.
    """
    pts = np.asarray(points, dtype=float)
    cent = np.array(centroids, dtype=float)
    n, k = pts.shape[0], cent.shape[0]
    labels = np.full(n, -1)
    trace = []
    for _ in range(max_iters):
        d2 = ((pts[:, None, :] - cent[None, :, :]) ** 2).sum(axis=2)
        new_labels = d2.argmin(axis=1)
        occupied = np.bincount(new_labels, minlength=k) > 0
        if not occupied.all():
            far_order = np.argsort(-d2[np.arange(n), new_labels], kind="stable")
            for slot, kk in enumerate(np.flatnonzero(~occupied)):
                cent[kk] = pts[far_order[slot]]
            d2 = ((pts[:, None, :] - cent[None, :, :]) ** 2).sum(axis=2)
            new_labels = d2.argmin(axis=1)
        trace.append(float(d2[np.arange(n), new_labels].sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for kk in range(k):
            members = pts[labels == kk]
            if len(members):
                cent[kk] = members.mean(axis=0)
    return labels, cent, np.asarray(trace)


def kmeans(points: np.ndarray, k: int, restarts: int = 20, max_iters: int = 100,
           seed: int = 0) -> KmeansResult:
    """k-means with several restarts, keeping the lowest-inertia run.

    Each restart draws K distinct data points as initial centroids from its
    own generator stream, so results do not depend on restart scheduling.
    Ties between restarts go to the lower restart index.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise ValueError(f"expected an (N, R) matrix, got shape {pts.shape}")
    n = pts.shape[0]
    if k <= 0:
        raise ValueError("k must be positive")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of points ({n})")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    inertias = np.empty(restarts)
    best_labels = None
    best = np.inf
    best_restart = -1
    for r in range(restarts):
        rng = np.random.default_rng([seed, r])
        init = pts[rng.choice(n, size=k, replace=False)]
        labels, _, trace = lloyd(pts, init, max_iters)
        inertias[r] = trace[-1]
        if inertias[r] < best:
            best = inertias[r]
            best_labels = labels
            best_restart = r
    return KmeansResult(best_labels + 1, inertias, best_restart)


def match_labels(pred: np.ndarray, truth: np.ndarray, k: int) -> LabelMatch:
    """Permute predicted cluster ids to best agree with the ground truth.

    Exhaustive search for k <= 6, otherwise an assignment solve on the
    contingency matrix. Ties prefer the lexicographically first permutation,
    which puts the identity ahead of any relabeling.
    """
    pred = np.asarray(pred, dtype=int)
    truth = np.asarray(truth, dtype=int)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise ValueError("pred and truth must be equal-length 1-D arrays")
    for name, arr in (("pred", pred), ("truth", truth)):
        if arr.size and (arr.min() < 1 or arr.max() > k):
            raise ValueError(f"{name} labels must lie in 1..{k}")
    contingency = np.zeros((k, k), dtype=int)
    for p, t in zip(pred, truth):
        contingency[p - 1, t - 1] += 1
    if k <= _EXHAUSTIVE_K:
        best_perm, best_hits = None, -1
        for perm in itertools.permutations(range(k)):
            hits = sum(contingency[i, perm[i]] for i in range(k))
            if hits > best_hits:
                best_perm, best_hits = perm, hits
        mapping = np.asarray(best_perm) + 1
    else:
        rows, cols = linear_sum_assignment(-contingency)
        mapping = np.empty(k, dtype=int)
        mapping[rows] = cols + 1
    matched = mapping[pred - 1]
    accuracy = float((matched == truth).mean()) if pred.size else 0.0
    return LabelMatch(mapping, matched, accuracy)


def binary_metrics(matched_labels: np.ndarray, truth: np.ndarray,
                   positive_class: int = 1) -> BinaryMetrics:
    """Confusion-matrix metrics for a two-cluster problem.

    Precision and recall fall back to 0 when their denominator is zero and
    the result is flagged degenerate; f1 is the harmonic mean when both are
    positive and 0 otherwise.
    """
    matched = np.asarray(matched_labels, dtype=int)
    truth = np.asarray(truth, dtype=int)
    if matched.shape != truth.shape:
        raise ValueError("matched labels and truth must have equal length")
    pred_pos = matched == positive_class
    true_pos = truth == positive_class
    tp = int(np.sum(pred_pos & true_pos))
    fp = int(np.sum(pred_pos & ~true_pos))
    fn = int(np.sum(~pred_pos & true_pos))
    degenerate = (tp + fp == 0) or (tp + fn == 0)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    accuracy = float((matched == truth).mean())
    return BinaryMetrics(accuracy, precision, recall, f1, degenerate)


def cluster_and_score(embedding: np.ndarray, truth: np.ndarray, k: int = 2,
                      restarts: int = 20, max_iters: int = 100, seed: int = 0,
                      positive_class: int = 1) -> ClusteringReport:
    """kmeans + label matching + metrics in one call.

    Matching runs over the union of predicted and true id ranges, so truth
    with more classes than k still scores (the surplus classes simply
    cannot be hit).
    """
    result = kmeans(embedding, k, restarts=restarts, max_iters=max_iters, seed=seed)
    truth = np.asarray(truth, dtype=int)
    match = match_labels(result.labels, truth, max(k, int(truth.max(initial=1))))
    metrics = binary_metrics(match.matched_labels, truth, positive_class)
    return ClusteringReport(
        labels=result.labels,
        matched_labels=match.matched_labels,
        accuracy=match.accuracy,
        precision=metrics.precision,
        recall=metrics.recall,
        f1=metrics.f1,
        inertias=result.inertias,
        best_restart=result.best_restart,
        degenerate=metrics.degenerate,
    )
