"""Rank-R CP factorization of a third-order tensor by alternating least squares."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensors import cp_reconstruct, frobenius_norm, hadamard, khatri_rao, matricize


@dataclass(frozen=True)
class CpFactors:
    """Three factor matrices (I1 x R, I2 x R, I3 x R) of a rank-R model."""

    factors: tuple[np.ndarray, np.ndarray, np.ndarray]

    def __post_init__(self):
        mats = tuple(np.asarray(f, dtype=float) for f in self.factors)
        if len(mats) != 3 or any(m.ndim != 2 for m in mats):
            raise ValueError("CpFactors needs exactly three matrices")
        if len({m.shape[1] for m in mats}) != 1:
            raise ValueError("factor matrices disagree on column count")
        if any(not np.isfinite(m).all() for m in mats):
            raise ValueError("factor entries must be finite")
        object.__setattr__(self, "factors", mats)

    def __iter__(self):
        return iter(self.factors)

    @property
    def rank(self) -> int:
        return self.factors[0].shape[1]

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(m.shape[0] for m in self.factors)


@dataclass(frozen=True)
class AlsOptions:
    """Knobs for :func:`cp_als_fit`.

    `rel_tol` stops the sweep loop once the relative fit improves by less
    than this between iterations; `ridge` is added to the R x R Gram before
    each least-squares solve.
    """

    rank: int
    max_iters: int = 500
    rel_tol: float = 1e-8
    seed: int = 0
    ridge: float = 1e-10

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be positive")
        if self.ridge < 0:
            raise ValueError("ridge must be >= 0")


@dataclass(frozen=True)
class CpFit:
    factors: CpFactors
    fit_trace: np.ndarray = field(repr=False)  # relative error per iteration
    iterations: int
    converged: bool
    degenerate: bool  # zero input tensor; factors are all-zero


def cp_relative_error(tensor: np.ndarray, factors: CpFactors) -> float:
    """||T - reconstruction||_F / ||T||_F (absolute norm for a zero tensor)."""
    t = np.asarray(tensor, dtype=float)
    if t.shape != factors.dims:
        raise ValueError(f"shape mismatch: tensor {t.shape} vs factors {factors.dims}")
    resid = frobenius_norm(t - cp_reconstruct(factors))
    scale = frobenius_norm(t)
    return resid / scale if scale > 0 else resid


def als_update(tensor: np.ndarray, factors: list[np.ndarray], mode: int, ridge: float) -> np.ndarray:
    """Exact least-squares update of one factor with the others fixed.

    Solves the ridge-regularized normal equations using the Gram identity
    (A.T A) * (B.T B) = (A kr B).T (A kr B), so only R x R systems appear.
    """
    others = [factors[m] for m in range(3) if m != mode - 1]
    small, big = others  # ascending mode order; big is the larger mode index
    gram = hadamard(big.T @ big, small.T @ small)
    gram = gram + ridge * np.eye(gram.shape[0])
    mttkrp = matricize(tensor, mode) @ khatri_rao(big, small)
    # gram is symmetric: solve gram @ X.T = mttkrp.T
    return np.linalg.solve(gram, mttkrp.T).T


def cp_als_fit(tensor: np.ndarray, opts: AlsOptions) -> CpFit:
    """Fit a rank-R CP model by alternating least squares.

    Parameters
    ----------
    tensor : ndarray, shape (I1, I2, I3)
        Dense real tensor; entries must be finite.
    opts : AlsOptions
        Rank, iteration cap, stopping tolerance, seed and ridge.

    Returns
    -------
    CpFit
        Factors, the per-iteration relative error trace (non-increasing up
        to 1e-10 per sweep), iteration count and convergence flags. A zero
        input tensor short-circuits to all-zero factors with
        ``degenerate=True``.
    """
    t = np.asarray(tensor, dtype=float)
    if t.ndim != 3:
        raise ValueError(f"expected a third-order tensor, got ndim={t.ndim}")
    if not np.isfinite(t).all():
        raise ValueError("tensor entries must be finite")
    r = opts.rank
    scale = frobenius_norm(t)
    if scale == 0.0:
        zeros = CpFactors(tuple(np.zeros((d, r)) for d in t.shape))
        return CpFit(zeros, np.zeros(1), iterations=0, converged=True, degenerate=True)

    rng = np.random.default_rng(opts.seed)
    factors = [rng.standard_normal((d, r)) for d in t.shape]

    trace = []
    converged = False
    for it in range(opts.max_iters):
        for mode in (1, 2, 3):
            factors[mode - 1] = als_update(t, factors, mode, opts.ridge)
        err = frobenius_norm(t - cp_reconstruct(factors)) / scale
        trace.append(err)
        if it >= 1 and abs(trace[-2] - err) < opts.rel_tol:
            converged = True
            break

    return CpFit(
        CpFactors(tuple(factors)),
        np.asarray(trace),
        iterations=len(trace),
        converged=converged,
        degenerate=False,
    )
