"""Third-order tensor algebra under the t-product.

Tensors are plain ``numpy`` arrays of shape ``(M, N, T)``; the third axis is
the temporal (tube) axis along which the DFT acts.  The forward DFT is
unnormalized and the inverse carries the ``1/T`` factor, so that

    tnn(x) == nuclear_norm(bcirc(x)) / T

holds exactly and ``||x||_F**2 == ||dft3(x)||_F**2 / T``.

Nothing here materializes ``bcirc`` except :func:`bcirc` itself and
:func:`average_rank`, which are meant for small oracle-scale inputs.
"""
from fractions import Fraction
from typing import NamedTuple

import numpy as np

__all__ = [
    "TSvdFactors",
    "dft3",
    "idft3",
    "bcirc",
    "bstack",
    "fold",
    "identity",
    "t_product",
    "conj_transpose",
    "t_svd",
    "tnn",
    "average_rank",
    "t_svt",
]

# imaginary residue tolerated when returning to the real domain
IMAG_TOL = 1e-9
# singular values below RANK_TOL * sigma_max count as zero in average_rank
RANK_TOL = 1e-9


class TSvdFactors(NamedTuple):
    """``x = U * S * V^*`` with ``U`` (M, M, T), ``S`` (M, N, T), ``V`` (N, N, T)."""
    U: np.ndarray
    S: np.ndarray
    V: np.ndarray


def _check3(x, name="x"):
    x = np.asarray(x)
    if x.ndim != 3:
        raise ValueError(f"{name} must be a 3-D array, got shape {x.shape}")
    return x


def dft3(x):
    """Unnormalized DFT of ``x`` along its third axis (complex output)."""
    x = _check3(x)
    return np.fft.fft(x, axis=2)


def idft3(xf, real=True):
    """Inverse of :func:`dft3`.

    With ``real=True`` the result is returned as a real array.  The imaginary
    part is dropped only if it is round-off; a residue larger than
    ``IMAG_TOL * (1 + ||result||_F)`` means the spectrum was not conjugate
    symmetric and raises ``ValueError``.
    """
    xf = _check3(xf)
    x = np.fft.ifft(xf, axis=2)
    if not real:
        return x
    return _to_real(x)


def _to_real(x):
    if not np.iscomplexobj(x):
        return x
    re = x.real
    residue = np.linalg.norm(x.imag)
    if residue > IMAG_TOL * (1.0 + np.linalg.norm(re)):
        raise ValueError(
            f"imaginary residue {residue:.3e} too large for a real tensor; "
            "the Fourier-domain slices are not conjugate symmetric")
    return np.ascontiguousarray(re)


def bcirc(x):
    """Block-circulant matrix of shape ``(M*T, N*T)``.

    Block ``(i, j)`` is the frontal slice ``(i - j) mod T``.
    """
    x = _check3(x)
    m, n, t = x.shape
    out = np.zeros((m * t, n * t), dtype=x.dtype)
    for i in range(t):
        for j in range(t):
            out[i * m:(i + 1) * m, j * n:(j + 1) * n] = x[:, :, (i - j) % t]
    return out


def bstack(x):
    """Frontal slices stacked vertically, shape ``(M*T, N)``."""
    x = _check3(x)
    m, n, t = x.shape
    return x.transpose(2, 0, 1).reshape(m * t, n)


def fold(mat, dims):
    """Inverse of :func:`bstack`.

    ``dims`` is either the full ``(M, N, T)`` shape or just ``M``.
    """
    mat = np.asarray(mat)
    if mat.ndim != 2:
        raise ValueError("fold expects a 2-D block-stacked matrix")
    m = dims if np.isscalar(dims) else dims[0]
    rows, n = mat.shape
    if m <= 0 or rows % m:
        raise ValueError(f"row count {rows} is not divisible by M={m}")
    t = rows // m
    if not np.isscalar(dims) and tuple(dims) != (m, n, t):
        raise ValueError(f"matrix of shape {mat.shape} cannot fold to {tuple(dims)}")
    return mat.reshape(t, m, n).transpose(1, 2, 0).copy()


def identity(m, t, dtype=float):
    """Identity tensor: first frontal slice ``I_m``, the rest zero."""
    eye = np.zeros((m, m, t), dtype=dtype)
    eye[:, :, 0] = np.eye(m, dtype=dtype)
    return eye


def t_product(x, y):
    """t-product ``x * y`` of ``(M, N, T)`` and ``(N, L, T)`` tensors.

    Computed as slice-wise matrix products in the Fourier domain.
    """
    x = _check3(x, "x")
    y = _check3(y, "y")
    if x.shape[1] != y.shape[0] or x.shape[2] != y.shape[2]:
        raise ValueError(f"t_product dimension mismatch: {x.shape} * {y.shape}")
    zf = np.einsum("ijt,jkt->ikt", dft3(x), dft3(y))
    z = np.fft.ifft(zf, axis=2)
    if np.iscomplexobj(x) or np.iscomplexobj(y):
        return z
    return _to_real(z)


def conj_transpose(x):
    """Conjugate-transpose every frontal slice, then reverse slices 2..T."""
    x = _check3(x)
    y = np.conj(x).transpose(1, 0, 2)
    y = np.concatenate([y[:, :, :1], y[:, :, :0:-1]], axis=2)
    return np.ascontiguousarray(y)


def _half(t):
    # slices 0..t//2 determine the rest for a real tensor
    return t // 2 + 1


def _mirror(xf):
    """Fill slices t//2+1 .. t-1 by conjugate symmetry, in place."""
    t = xf.shape[2]
    for k in range(_half(t), t):
        xf[:, :, k] = np.conj(xf[:, :, t - k])
    return xf


def t_svd(x, exploit_symmetry=True):
    """Tensor SVD via one matrix SVD per Fourier-domain frontal slice.

    For real ``x`` only ``T//2 + 1`` slice SVDs are computed and the remainder
    are filled in by conjugation, which also makes the returned factors real.

    Returns
    -------
    TSvdFactors
        ``U`` (M, M, T), ``S`` (M, N, T) f-diagonal, ``V`` (N, N, T).
    """
    x = _check3(x)
    m, n, t = x.shape
    xf = dft3(x)
    uf = np.zeros((m, m, t), dtype=complex)
    sf = np.zeros((m, n, t), dtype=complex)
    vf = np.zeros((n, n, t), dtype=complex)
    symmetric = exploit_symmetry and not np.iscomplexobj(x)
    r = min(m, n)
    for k in range(_half(t) if symmetric else t):
        u, s, vh = np.linalg.svd(xf[:, :, k], full_matrices=True)
        uf[:, :, k] = u
        sf[np.arange(r), np.arange(r), k] = s
        vf[:, :, k] = vh.conj().T
    if symmetric:
        for a in (uf, sf, vf):
            _mirror(a)
    real = not np.iscomplexobj(x) and symmetric
    U = idft3(uf, real=real)
    S = idft3(sf, real=not np.iscomplexobj(x))
    V = idft3(vf, real=real)
    return TSvdFactors(U, S, V)


def _slice_singular_values(xf, symmetric):
    t = xf.shape[2]
    if not symmetric:
        return [np.linalg.svd(xf[:, :, k], compute_uv=False) for k in range(t)]
    half = [np.linalg.svd(xf[:, :, k], compute_uv=False) for k in range(_half(t))]
    return half + [half[t - k] for k in range(_half(t), t)]


def tnn(x):
    """Tensor nuclear norm: mean nuclear norm of the Fourier-domain slices."""
    x = _check3(x)
    svals = _slice_singular_values(dft3(x), not np.iscomplexobj(x))
    return float(sum(s.sum() for s in svals) / x.shape[2])


def average_rank(x, tol=RANK_TOL):
    """``rank(bcirc(x)) / T`` as an exact fraction.

    Materializes ``bcirc(x)``; intended for small tensors only.  Singular
    values below ``tol * sigma_max`` are treated as zero.
    """
    x = _check3(x)
    s = np.linalg.svd(bcirc(x), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return Fraction(0)
    return Fraction(int(np.count_nonzero(s > tol * s[0])), x.shape[2])


def t_svt(a, tau, exploit_symmetry=True):
    """Tensor singular value thresholding, the proximal operator of TNN.

    Returns ``argmin_B ||B||_tnn + ||A - B||_F**2 / (2 tau)``: every
    Fourier-domain singular value is soft-thresholded by ``tau``.
    """
    a = _check3(a, "a")
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    m, n, t = a.shape
    af = dft3(a)
    bf = np.zeros_like(af)
    symmetric = exploit_symmetry and not np.iscomplexobj(a)
    for k in range(_half(t) if symmetric else t):
        u, s, vh = np.linalg.svd(af[:, :, k], full_matrices=False)
        keep = int(np.count_nonzero(s > tau))
        if keep:
            bf[:, :, k] = (u[:, :keep] * (s[:keep] - tau)) @ vh[:keep]
    if symmetric:
        _mirror(bf)
    return idft3(bf, real=not np.iscomplexobj(a))
