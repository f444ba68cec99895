"""Circular finite differences, the anisotropic TV/l1 norm and the FFT solve
of the foreground (H) sub-problem.

The gradient of an ``(M, N, T)`` tensor is the ``(M, N, 3T)`` stack
``[w_m * grad_m(h), w_n * grad_n(h), w_t * grad_t(h)]`` concatenated along
the third axis, using forward differences that wrap around at the borders.
"""
import numpy as np

__all__ = [
    "DEFAULT_WEIGHTS",
    "grad",
    "grad_adjoint",
    "tv_l1",
    "dtd_spectrum",
    "solve_h",
]

DEFAULT_WEIGHTS = (1.0, 1.0, 1.0)


def grad(h, weights=DEFAULT_WEIGHTS):
    """Weighted circular forward differences of ``h`` along all three axes."""
    h = np.asarray(h, dtype=float)
    if h.ndim != 3:
        raise ValueError("grad expects a 3-D tensor")
    return np.concatenate(
        [w * (np.roll(h, -1, axis=ax) - h) for ax, w in enumerate(weights)], axis=2)


def grad_adjoint(p, weights=DEFAULT_WEIGHTS):
    """Adjoint of :func:`grad`: a weighted negative circular divergence.

    ``p`` has shape ``(M, N, 3T)``; returns an ``(M, N, T)`` tensor.
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 3 or p.shape[2] % 3:
        raise ValueError(f"expected an (M, N, 3T) gradient stack, got {p.shape}")
    t = p.shape[2] // 3
    out = np.zeros(p.shape[:2] + (t,))
    for ax, w in enumerate(weights):
        slab = p[:, :, ax * t:(ax + 1) * t]
        out += w * (np.roll(slab, 1, axis=ax) - slab)
    return out


def tv_l1(h, weights=DEFAULT_WEIGHTS):
    """Anisotropic total variation ``||grad(h)||_1``."""
    return float(np.abs(grad(h, weights)).sum())


def dtd_spectrum(dims, weights=DEFAULT_WEIGHTS):
    """Eigenvalues of ``D^T D`` on the 3-D DFT frequency grid.

    Each circulant difference operator along an axis of length ``L`` has
    eigenvalues ``exp(2 pi i k / L) - 1``, so ``D^T D`` is diagonalized by the
    3-D DFT with eigenvalue ``sum_axis w**2 * 4 sin(pi k / L)**2``.
    """
    m, n, t = (int(d) for d in dims)
    if min(m, n, t) <= 0:
        raise ValueError("dims must be positive")
    parts = []
    for length, w in zip((m, n, t), weights):
        k = np.arange(length)
        parts.append(w ** 2 * 4.0 * np.sin(np.pi * k / length) ** 2)
    return parts[0][:, None, None] + parts[1][None, :, None] + parts[2][None, None, :]


def solve_h(r, e, y, t_split, z, mu, nu, spectrum, weights=DEFAULT_WEIGHTS):
    """Minimize the H sub-problem of the augmented Lagrangian.

    Solves ``(mu I + nu D^T D) H = K`` with
    ``K = mu (R - E + Y/mu) + nu D^T (T + Z/nu)`` by a 3-D FFT.
    ``spectrum`` is the output of :func:`dtd_spectrum` for these weights.
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    if nu < 0:
        raise ValueError("nu must be nonnegative")
    base = r - e + y / mu
    if nu == 0:
        return base
    # nu * D^T(T + Z/nu) written without dividing by nu
    k = mu * base + grad_adjoint(nu * t_split + z, weights)
    hf = np.fft.fftn(k) / (mu + nu * spectrum)
    return np.fft.ifftn(hf).real
