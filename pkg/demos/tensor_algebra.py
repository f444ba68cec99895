"""
Tensor algebra under the t-product
==================================

A short walk through the operations the decomposition is built on.
Run with ``python demos/tensor_algebra.py``.
"""
import numpy as np

from tvtrpca import bcirc, conj_transpose, identity, t_product, t_svd, t_svt, tnn

rng = np.random.default_rng(1)

# A third-order tensor is an (M, N, T) array; T is the tube (time) axis.
x = rng.normal(size=(4, 3, 5))

# The t-product is ordinary matrix multiplication of block-circulant forms.
y = rng.normal(size=(3, 2, 5))
dense = bcirc(x) @ bcirc(y)
print("t-product vs bcirc product:",
      np.abs(bcirc(t_product(x, y)) - dense).max())

# t-SVD: x = U * S * V^T with orthogonal U, V and f-diagonal S.
U, S, V = t_svd(x)
back = t_product(t_product(U, S), conj_transpose(V))
print("t-SVD reconstruction error:", np.linalg.norm(back - x))
print("U^T * U == I:", np.allclose(t_product(conj_transpose(U), U), identity(4, 5)))

# The tensor nuclear norm is the nuclear norm of bcirc(x), divided by T.
print("tnn(x)                :", tnn(x))
print("||bcirc(x)||_* / T    :", np.linalg.svd(bcirc(x), compute_uv=False).sum() / 5)

# A static background (the same frame repeated) has tiny TNN relative to its
# energy, which is what the low-rank layer exploits.  Thresholding the
# Fourier-domain singular values (t-SVT) keeps it and removes the noise.
frame = np.outer(np.linspace(0.2, 1, 4), np.linspace(1, 0.5, 3))
static = np.repeat(frame[:, :, None], 5, axis=2)
noisy = static + 0.05 * rng.normal(size=static.shape)
cleaned = t_svt(noisy, 0.3)
print("noise before / after t-SVT:",
      np.linalg.norm(noisy - static), np.linalg.norm(cleaned - static))
