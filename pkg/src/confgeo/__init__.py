"""Curvature, conformal-gauge and moving-frame toolkit for 2D/4D metrics
with an isolated singularity.

All closed-form geometry is evaluated through exact derivative jets
(forward-mode differentiation in float64); sampled fields use 4th-order
finite differences.  Charts never contain the puncture itself: polar and
radial grids start at r_in > 0 and the singularity is probed by shrinking
r_in.
"""

import jax

# Exact jets are meaningless in float32; this must run before any jax op.
jax.config.update("jax_enable_x64", True)

from .charts import Chart
from .fields import MetricField, ScalarField, TensorField, derive, integrate, lorentz_weak_l2_proxy
from .curvature import CurvaturePack, bach_cross_check, covariant_derivative, curvature_pack, hessian, rough_laplacian
from .conformal import ConformalFactor, blowup_rescale, conformal_change, invert_compactify, metric_catalog

__all__ = [
    "Chart",
    "ScalarField",
    "TensorField",
    "MetricField",
    "derive",
    "integrate",
    "lorentz_weak_l2_proxy",
    "CurvaturePack",
    "curvature_pack",
    "bach_cross_check",
    "covariant_derivative",
    "hessian",
    "rough_laplacian",
    "ConformalFactor",
    "conformal_change",
    "invert_compactify",
    "blowup_rescale",
    "metric_catalog",
]
