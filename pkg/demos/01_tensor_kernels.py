#!/usr/bin/env python3
"""Tour of the dense tensor kernels.

Shows how a stack of symmetric affinity matrices becomes a third-order
tensor, what the three unfoldings look like, and the Khatri-Rao identity
that the solver leans on.
"""
import numpy as np

from m2e import (check_partial_symmetry, cp_reconstruct, frobenius_norm,
                 khatri_rao, matricize, refold)

rng = np.random.default_rng(0)

# A tiny tensor with entries 1..8 makes the unfolding layout easy to read:
# the first index runs down the rows, the remaining ones across the columns
# with the smaller index moving fastest.
t = np.arange(1, 9, dtype=float).reshape(2, 2, 2, order="F")
print("tensor slices (last index = 0, 1):")
print(t[:, :, 0])
print(t[:, :, 1])
for mode in (1, 2, 3):
    print(f"mode-{mode} unfolding:\n{matricize(t, mode)}")

# Unfold and refold is lossless.
restored = refold(matricize(t, 2), 2, t.shape)
print("refold restores the tensor:", np.array_equal(restored, t))

# A rank-2 model: three factor matrices, one per mode. Reconstructing and
# unfolding on mode 3 matches the matrix product with the Khatri-Rao of the
# first two factors.
a = rng.standard_normal((4, 2))
b = rng.standard_normal((4, 2))
c = rng.standard_normal((5, 2))
model = cp_reconstruct((a, b, c))
gap = np.abs(matricize(model, 3) - c @ khatri_rao(b, a).T).max()
print(f"mode-3 unfolding vs factor product: max gap {gap:.2e}")

# The Gram of a Khatri-Rao product collapses to an elementwise product of
# the two small Grams; the solver uses this to avoid large intermediates.
kr = khatri_rao(a, b)
gap = np.abs(kr.T @ kr - (a.T @ a) * (b.T @ b)).max()
print(f"khatri-rao gram identity: max gap {gap:.2e}")

# Equal factors in the first two modes give symmetric slices, which is the
# invariant every graph view must satisfy.
sym_model = cp_reconstruct((a, a, c))
ok, asym = check_partial_symmetry(sym_model, 1e-12)
print(f"slices symmetric: {ok} (max asymmetry {asym:.1e}, "
      f"norm {frobenius_norm(sym_model):.3f})")
