"""Vessel layer extraction and segmentation for angiography image sequences.

Foreground extraction uses a TV-regularized tensor robust PCA solved with
ADMM; segmentation uses a two-stage region growth with Radon-like features.
"""
from .tensor import (TSvdFactors, average_rank, bcirc, bstack, conj_transpose,
                     dft3, fold, idft3, identity, t_product, t_svd, t_svt, tnn)
from .tv import dtd_spectrum, grad, grad_adjoint, solve_h, tv_l1
from .solver import Decomposition, SolverConfig, default_config, run, shrink
from .phantom import PhantomSpec, generate_phantom
from .segmentation import RlfParams, gsd_filter, region_grow, rlf_filter, select_seed, tsrg
from .metrics import cnr, local_band, prf

__version__ = "0.1.0"
