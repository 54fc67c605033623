"""Dense third-order tensor and matrix kernels.

A third-order tensor is a numpy array of shape (I1, I2, I3). Unfolding a
tensor to a matrix orders the columns so that the smaller remaining index
varies fastest; under that convention a rank-R model with factor matrices
A (I1 x R), B (I2 x R), C (I3 x R) satisfies

    matricize(T, 1) = A @ khatri_rao(C, B).T
    matricize(T, 2) = B @ khatri_rao(C, A).T
    matricize(T, 3) = C @ khatri_rao(B, A).T
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

# Frontal slices of a stacked graph view must be symmetric to this tolerance.
SYMMETRY_TOL = 1e-8


def matricize(tensor: np.ndarray, mode: int) -> np.ndarray:
    """Unfold a third-order tensor along `mode` (1, 2 or 3).

    Returns an I_mode x (product of the other dims) matrix. Entry
    (i1, i2, i3) lands in row i_mode; the column index runs over the
    remaining two indices with the smaller one varying fastest.
    """
    t = np.asarray(tensor, dtype=float)
    if t.ndim != 3:
        raise ValueError(f"expected a third-order tensor, got ndim={t.ndim}")
    if mode not in (1, 2, 3):
        raise ValueError(f"mode must be 1, 2 or 3, got {mode}")
    return np.reshape(np.moveaxis(t, mode - 1, 0), (t.shape[mode - 1], -1), order="F")


def refold(matrix: np.ndarray, mode: int, dims: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`matricize`: rebuild the tensor of shape `dims`."""
    m = np.asarray(matrix, dtype=float)
    if mode not in (1, 2, 3):
        raise ValueError(f"mode must be 1, 2 or 3, got {mode}")
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3:
        raise ValueError("dims must have length 3")
    rest = [d for ax, d in enumerate(dims) if ax != mode - 1]
    t = np.reshape(m, (dims[mode - 1], *rest), order="F")
    return np.moveaxis(t, 0, mode - 1)


def khatri_rao(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Columnwise Kronecker product; b's row index varies fastest."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError("khatri_rao expects two matrices")
    if a.shape[1] != b.shape[1]:
        raise ValueError(
            f"column counts must match, got {a.shape[1]} and {b.shape[1]}"
        )
    return (a[:, None, :] * b[None, :, :]).reshape(a.shape[0] * b.shape[0], a.shape[1])


def hadamard(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise product of two equally shaped matrices."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a * b


def cp_reconstruct(factors: Sequence[np.ndarray]) -> np.ndarray:
    """Sum of R rank-one outer products from three factor matrices."""
    mats = [np.asarray(f, dtype=float) for f in factors]
    if len(mats) != 3:
        raise ValueError(f"expected 3 factor matrices, got {len(mats)}")
    ranks = {m.shape[1] for m in mats}
    if len(ranks) != 1:
        raise ValueError(f"factor matrices disagree on rank: {sorted(ranks)}")
    a, b, c = mats
    return np.einsum("ir,jr,kr->ijk", a, b, c, optimize=True)


def frobenius_norm(tensor: np.ndarray) -> float:
    """Square root of the sum of squared entries."""
    return float(np.linalg.norm(np.asarray(tensor, dtype=float).ravel()))


def check_partial_symmetry(tensor: np.ndarray, tol: float = SYMMETRY_TOL) -> tuple[bool, float]:
    """Check that every frontal slice of an (M, M, N) tensor is symmetric.

    Returns (ok, max_asymmetry) where max_asymmetry is the largest
    |t[i, j, n] - t[j, i, n]| over all entries.
    """
    t = np.asarray(tensor, dtype=float)
    if t.ndim != 3 or t.shape[0] != t.shape[1]:
        raise ValueError(f"expected shape (M, M, N), got {t.shape}")
    max_asym = float(np.abs(t - t.transpose(1, 0, 2)).max(initial=0.0))
    return max_asym <= tol, max_asym


def symmetrize_slices(tensor: np.ndarray, tol: float = 1e-6) -> np.ndarray:
    """Replace each frontal slice W by (W + W.T) / 2.

    Rejects input whose asymmetry exceeds `tol`; small asymmetries are
    treated as float-level noise and averaged away.
    """
    t = np.asarray(tensor, dtype=float)
    ok, asym = check_partial_symmetry(t, tol)
    if not ok:
        drift = np.abs(t - t.transpose(1, 0, 2)).max(axis=(0, 1))
        worst = int(np.argmax(drift))
        raise ValueError(
            f"slice {worst} is asymmetric by {asym:.3g} (tolerance {tol:.3g})"
        )
    return (t + t.transpose(1, 0, 2)) / 2.0


@dataclass(frozen=True)
class GraphViewTensor:
    """One view: N symmetric M x M affinity matrices stacked along axis 2.

    Construction validates shape, finiteness and per-slice symmetry.
    Instances are treated as immutable and safe to share.
    """

    data: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.data, dtype=float)
        if t.ndim != 3 or t.shape[0] != t.shape[1]:
            raise ValueError(f"expected shape (M, M, N), got {t.shape}")
        if not np.isfinite(t).all():
            raise ValueError("affinity entries must be finite")
        ok, asym = check_partial_symmetry(t, SYMMETRY_TOL)
        if not ok:
            raise ValueError(
                f"frontal slices asymmetric by {asym:.3g} "
                f"(tolerance {SYMMETRY_TOL:.3g}); symmetrize first"
            )
        object.__setattr__(self, "data", t)

    @property
    def node_count(self) -> int:
        return self.data.shape[0]

    @property
    def subject_count(self) -> int:
        return self.data.shape[2]
