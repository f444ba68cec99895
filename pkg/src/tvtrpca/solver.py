"""TV-regularized tensor RPCA solved by ADMM.

The observation ``O`` is split as ``O = B + R + G`` and ``R = E + H`` with

* ``B`` low tensor-average-rank static background (TNN penalty),
* ``R`` sparse residual (l1, weight ``lambda1``),
* ``G`` dense Gaussian noise (squared Frobenius, weight ``lambda2 / 2``),
* ``E`` sparse dynamic background (l1, weight ``lambda3``),
* ``H`` foreground, penalized by anisotropic TV through the split
  variable ``T = grad(H)`` (l1, weight ``lambda4``).

Each iteration updates B, R, G, E, H, T in that order, then the multipliers
and the penalties ``mu`` and ``nu``.
"""
from dataclasses import dataclass, field, fields, replace
import logging
import math

import numpy as np

from .tensor import t_svt
from .tv import DEFAULT_WEIGHTS, dtd_spectrum, grad, solve_h

__all__ = [
    "SolverConfig",
    "SolverState",
    "Decomposition",
    "NumericalError",
    "default_config",
    "shrink",
    "init_state",
    "update_b",
    "update_r",
    "update_g",
    "update_e",
    "update_h",
    "update_t",
    "update_multipliers",
    "relative_residual",
    "run",
]

log = logging.getLogger(__name__)


class NumericalError(RuntimeError):
    """Raised when an iterate stops being finite.  ``iteration`` is 1-based."""

    def __init__(self, message, iteration):
        super().__init__(message)
        self.iteration = iteration


@dataclass(frozen=True)
class SolverConfig:
    lambda1: float
    lambda2: float
    lambda3: float
    lambda4: float
    mu0: float = 1e-3
    nu0: float = 1e-3
    mu_max: float = 1e10
    nu_max: float = 1e10
    rho: float = 1.1
    weights: tuple = DEFAULT_WEIGHTS
    epsilon: float = 1e-7
    imax: int = 500
    # "mu" scales the B-step multiplier as X/mu; "half" uses X/2 (comparison only)
    b_multiplier: str = "mu"

    def __post_init__(self):
        lams = (self.lambda1, self.lambda2, self.lambda3, self.lambda4)
        if min(lams) <= 0:
            raise ValueError("all lambda weights must be positive")
        if not 0 < self.mu0 <= self.mu_max or not 0 < self.nu0 <= self.nu_max:
            raise ValueError("need 0 < mu0 <= mu_max and 0 < nu0 <= nu_max")
        if self.rho <= 1:
            raise ValueError("rho must exceed 1")
        if len(self.weights) != 3 or min(self.weights) <= 0:
            raise ValueError("weights must be three positive numbers")
        if self.epsilon <= 0 or self.imax < 1:
            raise ValueError("epsilon must be positive and imax at least 1")
        if self.b_multiplier not in ("mu", "half"):
            raise ValueError("b_multiplier must be 'mu' or 'half'")

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def with_overrides(self, **kwargs):
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})


def default_config(dims, **overrides):
    """Default parameters for an ``(M, N, T)`` sequence.

    ``lambda1 = 0.3 / sqrt(max(M, N) * T)``, ``lambda2 = 100 lambda1``,
    ``lambda3 = 2.5 lambda1`` and ``lambda4 = 0.6 lambda1``.
    """
    m, n, t = dims
    if min(m, n, t) <= 0:
        raise ValueError("dims must be positive")
    lam1 = 0.3 / math.sqrt(max(m, n) * t)
    cfg = SolverConfig(lambda1=lam1, lambda2=100 * lam1,
                       lambda3=2.5 * lam1, lambda4=0.6 * lam1)
    return cfg.with_overrides(**overrides)


@dataclass
class SolverState:
    b: np.ndarray
    r: np.ndarray
    g: np.ndarray
    e: np.ndarray
    h: np.ndarray
    t_split: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    mu: float
    nu: float
    k: int = 0
    residual: float = math.inf


@dataclass(frozen=True)
class Decomposition:
    background: np.ndarray
    dynamic_background: np.ndarray
    foreground: np.ndarray
    noise: np.ndarray
    iterations: int
    converged: bool
    residual_history: list = field(default_factory=list)

    def layers(self):
        return {
            "background": self.background,
            "dynamic_background": self.dynamic_background,
            "foreground": self.foreground,
            "noise": self.noise,
        }


def shrink(x, a):
    """Elementwise soft threshold ``sign(x) * max(|x| - a, 0)``."""
    if a < 0:
        raise ValueError("shrinkage threshold must be nonnegative")
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - a, 0.0)


def init_state(dims, config):
    m, n, t = dims
    z3 = lambda: np.zeros((m, n, t))  # noqa: E731
    return SolverState(b=z3(), r=z3(), g=z3(), e=z3(), h=z3(),
                       t_split=np.zeros((m, n, 3 * t)), x=z3(), y=z3(),
                       z=np.zeros((m, n, 3 * t)), mu=config.mu0, nu=config.nu0)


def update_b(state, o, config):
    scale = state.mu if config.b_multiplier == "mu" else 2.0
    a = o - state.r - state.g + state.x / scale
    return t_svt(a, 1.0 / state.mu)


def update_r(state, o, config):
    # uses the previous G (Gauss-Seidel order of the sweep)
    q = (o - state.b - state.g + state.e + state.h) / 2 + (state.x - state.y) / (2 * state.mu)
    return shrink(q, config.lambda1 / (2 * state.mu))


def update_g(state, o, config):
    mu = state.mu
    return mu / (config.lambda2 + mu) * (o - state.b - state.r + state.x / mu)


def update_e(state, config):
    p = state.r - state.h + state.y / state.mu
    return shrink(p, config.lambda3 / state.mu)


def update_h(state, config, spectrum=None):
    if spectrum is None:
        spectrum = dtd_spectrum(state.h.shape, config.weights)
    return solve_h(state.r, state.e, state.y, state.t_split, state.z,
                   state.mu, state.nu, spectrum, config.weights)


def update_t(state, config):
    w = grad(state.h, config.weights) - state.z / state.nu
    return shrink(w, config.lambda4 / state.nu)


def update_multipliers(state, o, config):
    """Dual ascent on X, Y, Z and geometric growth of mu, nu (capped)."""
    mu, nu = state.mu, state.nu
    return replace(
        state,
        x=state.x + mu * (o - state.b - state.r - state.g),
        y=state.y + mu * (state.r - state.e - state.h),
        z=state.z + nu * (state.t_split - grad(state.h, config.weights)),
        mu=min(config.rho * mu, config.mu_max),
        nu=min(config.rho * nu, config.nu_max),
    )


def relative_residual(o, b, g, e, h):
    """``||O - B - G - E - H||_F**2 / ||O||_F**2`` (0 when O is zero)."""
    denom = float(np.vdot(o, o))
    diff = o - b - g - e - h
    num = float(np.vdot(diff, diff))
    if denom == 0:
        return 0.0 if num == 0 else math.inf
    return num / denom


def _finite(state):
    return all(np.isfinite(a).all() for a in
               (state.b, state.r, state.g, state.e, state.h,
                state.t_split, state.x, state.y, state.z))


def run(o, config=None, callback=None):
    """Decompose ``o`` (values in [0, 1]) into B, E, H, G.

    Stops once the relative residual drops to ``config.epsilon`` or after
    ``config.imax`` iterations.  ``callback(state)`` is invoked after every
    iteration.

    Raises
    ------
    NumericalError
        If any iterate becomes non-finite.
    """
    o = np.asarray(o, dtype=float)
    if o.ndim != 3:
        raise ValueError("observation must be an (M, N, T) tensor")
    if not np.isfinite(o).all():
        raise ValueError("observation contains non-finite values")
    if config is None:
        config = default_config(o.shape)
    spectrum = dtd_spectrum(o.shape, config.weights)
    state = init_state(o.shape, config)
    history = []
    converged = False
    while state.k < config.imax:
        state.b = update_b(state, o, config)
        state.r = update_r(state, o, config)
        state.g = update_g(state, o, config)
        state.e = update_e(state, config)
        state.h = update_h(state, config, spectrum)
        state.t_split = update_t(state, config)
        state = update_multipliers(state, o, config)
        state.k += 1
        if not _finite(state):
            raise NumericalError(f"non-finite iterate at iteration {state.k}", state.k)
        state.residual = relative_residual(o, state.b, state.g, state.e, state.h)
        history.append(state.residual)
        if callback is not None:
            callback(state)
        if state.residual <= config.epsilon:
            converged = True
            break
    log.info("ADMM stopped after %d iterations (residual %.3e, converged=%s)",
             state.k, state.residual, converged)
    return Decomposition(background=state.b, dynamic_background=state.e,
                         foreground=state.h, noise=state.g,
                         iterations=state.k, converged=converged,
                         residual_history=history)
