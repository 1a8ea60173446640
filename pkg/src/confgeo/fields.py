"""Scalar and tensor fields on a chart, with two differentiation engines.

Closed-form fields wrap a per-point function of the Cartesian coordinates
and differentiate through it with forward-mode jets (exact up to order 4).
Sampled fields hold grid values and differentiate with 4th-order finite
differences along the grid axes (Fornberg weights on non-uniform axes,
centered circulant stencils on periodic ones), chained to Cartesian
derivatives through the chart Jacobian; the sampled engine stops at order 2.

All tensor components are Cartesian; component axes trail the node axis.
"""

from __future__ import annotations

import csv
import json

import jax
import jax.numpy as jnp
import numpy as np

from .charts import Chart


class CapabilityError(ValueError):
    """Requested derivative order exceeds what the field's engine supports."""


class ChartMismatchError(ValueError):
    pass


def fornberg_weights(z, x, m):
    """Finite-difference weights at point z for nodes x, derivatives 0..m."""
    n = len(x)
    c = np.zeros((n, m + 1))
    c1, c4 = 1.0, x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2, c5 = 1.0, c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c


def diff_matrix(x, periodic=False, width=5):
    """Dense 4th-order first-derivative matrix on the 1D node set x."""
    n = x.size
    d = np.zeros((n, n))
    if periodic:
        h = x[1] - x[0]
        st = np.array([1.0 / 12, -2.0 / 3, 0.0, 2.0 / 3, -1.0 / 12]) / h
        for k, off in enumerate((-2, -1, 0, 1, 2)):
            d += st[k] * np.roll(np.eye(n), off, axis=1)
        return d
    half = width // 2
    for i in range(n):
        lo = min(max(i - half, 0), n - width)
        sub = x[lo : lo + width]
        d[i, lo : lo + width] = fornberg_weights(x[i], sub, 1)[:, 1]
    return d


class _FDEngine:
    """Cartesian first derivatives of grid data on a chart."""

    def __init__(self, chart: Chart):
        self.chart = chart
        self.mats = [
            diff_matrix(ax, periodic=per)
            for ax, per in zip(chart.coord_axes, chart.periodic_axes)
        ]
        self.invjac = chart.inverse_coord_jacobian  # (M, q, x)

    def _apply_axis(self, values, axis):
        shp = self.chart.grid_shape
        v = values.reshape(shp + values.shape[1:])
        v = np.moveaxis(v, axis, 0)
        flat = v.reshape(v.shape[0], -1)
        out = self.mats[axis] @ flat
        out = np.moveaxis(out.reshape(v.shape), 0, axis)
        return out.reshape(values.shape)

    def cartesian_partials(self, values):
        """d_i values for every Cartesian direction i; shape (M, ..., dim)."""
        dq = np.stack([self._apply_axis(values, a) for a in range(len(self.mats))], axis=-1)
        return np.einsum("m...q,mqx->m...x", dq, self.invjac)


class TensorField:
    """Tensor field with Cartesian components; closed-form or sampled."""

    def __init__(self, chart, comp_shape=(), fn=None, values=None, name="", symmetric=False):
        if (fn is None) == (values is None):
            raise ValueError("provide exactly one of fn / values")
        self.chart = chart
        self.comp_shape = tuple(comp_shape)
        self.fn = fn
        self.name = name
        self.symmetric = symmetric
        self._values = None
        self._vfn = None
        if values is not None:
            values = np.asarray(values, dtype=float)
            expect = (chart.nodes.shape[0],) + self.comp_shape
            if values.shape != expect:
                raise ValueError(f"values shape {values.shape} != {expect}")
            if symmetric and len(comp_shape) == 2:
                asym = np.abs(values - values.swapaxes(-1, -2)).max()
                if asym > 1e-10 * max(1.0, np.abs(values).max()):
                    raise ValueError(f"declared-symmetric tensor has asymmetry {asym:.2e}")
                values = 0.5 * (values + values.swapaxes(-1, -2))
            if not np.all(np.isfinite(values)):
                raise ValueError("non-finite component at an interior grid node")
            self._values = values

    @property
    def mode(self):
        return "closed-form" if self.fn is not None else "sampled"

    @property
    def rank(self):
        return len(self.comp_shape)

    def values(self):
        if self._values is None:
            self._values = eval_on_grid(self.fn, self.chart.nodes)
            if not np.all(np.isfinite(self._values)):
                raise ValueError("non-finite component at an interior grid node")
        return self._values

    def as_sampled(self):
        return TensorField(self.chart, self.comp_shape, values=self.values(), name=self.name)

    def _fd(self):
        eng = getattr(self.chart, "_fd_engine", None)
        if eng is None:
            eng = _FDEngine(self.chart)
            object.__setattr__(self.chart, "_fd_engine", eng)
        return eng


class ScalarField(TensorField):
    def __init__(self, chart, fn=None, values=None, name=""):
        super().__init__(chart, (), fn=fn, values=values, name=name)


class MetricField(TensorField):
    """Symmetric positive-definite (0,2) field with cached inverse/sqrt-det."""

    def __init__(self, chart, fn=None, values=None, name="metric"):
        dim = chart.dimension
        super().__init__(chart, (dim, dim), fn=fn, values=values, name=name, symmetric=True)
        self._inv = None
        self._sqrt_det = None

    def validate(self):
        g = self.values()
        ev = np.linalg.eigvalsh(g)
        if ev.min() <= 0:
            raise ValueError(f"metric not positive definite (min eigenvalue {ev.min():.3e})")
        tol = 1e-12 if self.mode == "closed-form" else 1e-8
        resid = np.abs(np.einsum("mij,mjk->mik", g, self.inverse()) - np.eye(self.chart.dimension)).max()
        if resid > tol:
            raise ValueError(f"g * g^-1 deviates from identity by {resid:.3e} (tol {tol:g})")
        return resid

    def inverse(self):
        if self._inv is None:
            self._inv = np.linalg.inv(self.values())
        return self._inv

    def sqrt_det(self):
        if self._sqrt_det is None:
            self._sqrt_det = np.sqrt(np.linalg.det(self.values()))
        return self._sqrt_det


# --- grid evaluation of closed-form functions ----------------------------

_jit_cache = {}


def eval_on_grid(fn, points):
    """Evaluate a per-point jax function on (M, dim) points -> numpy array."""
    key = id(fn)
    jfn = _jit_cache.get(key)
    if jfn is None:
        jfn = jax.jit(jax.vmap(fn))
        _jit_cache[key] = jfn
    return np.asarray(jfn(jnp.asarray(points)))


def jet_fn(fn, multi_index):
    """Exact partial-derivative function d_{i1} ... d_{ik} fn (1-based axes)."""
    out = fn
    for ax in multi_index:
        prev = out
        out = (lambda p, a: (lambda x: jax.jacfwd(p)(x)[..., a]))(prev, ax - 1)
    return out


# --- public operations ----------------------------------------------------


def derive(field: TensorField, multi_index) -> TensorField:
    """Partial derivative along Cartesian axes (1-based), componentwise.

    Closed-form fields use exact jets (order <= 4); sampled fields use the
    4th-order finite-difference engine (order <= 2).
    """
    multi_index = list(multi_index)
    dim = field.chart.dimension
    if any(not (1 <= a <= dim) for a in multi_index):
        raise ValueError(f"axis indices must be in 1..{dim}")
    if field.mode == "closed-form":
        if len(multi_index) > 4:
            raise CapabilityError("closed-form jets are capped at derivative order 4")
        return TensorField(field.chart, field.comp_shape, fn=jet_fn(field.fn, multi_index),
                           name=field.name + "'" * len(multi_index))
    if len(multi_index) > 2:
        raise CapabilityError("sampled fields support derivative order <= 2")
    vals = field.values()
    for ax in multi_index:
        vals = field._fd().cartesian_partials(vals)[..., ax - 1]
    return TensorField(field.chart, field.comp_shape, values=vals,
                       name=field.name + "'" * len(multi_index))


def integrate(field: ScalarField, weight: ScalarField) -> float:
    """Quadrature of field * weight over the chart's coordinate volume."""
    if field.chart is not weight.chart and field.chart != weight.chart:
        raise ChartMismatchError("fields live on different charts")
    return float(np.sum(field.values() * weight.values() * field.chart.weights))


def lorentz_weak_l2_proxy(field: TensorField) -> float:
    """Dyadic sup of lambda * sqrt(area{|field| > lambda}).

    A grid diagnostic standing in for the weak-L2 quasinorm; it is *not*
    a norm certification.
    """
    if field.chart.dimension != 2:
        raise ValueError("weak-L2 proxy is defined on 2D charts")
    v = field.values()
    mag = np.abs(v) if field.rank == 0 else np.sqrt(np.sum(v.reshape(v.shape[0], -1) ** 2, axis=1))
    areas = field.chart.weights
    top = mag.max()
    if top <= 0:
        return 0.0
    lams = np.geomspace(max(top * 1e-8, 1e-300), top, 60)
    best = 0.0
    for lam in lams:
        a = areas[mag > lam].sum()
        best = max(best, lam * np.sqrt(a))
    return float(best)


# --- serialization ---------------------------------------------------------


def component_labels(name, comp_shape):
    if not comp_shape:
        return [name]
    idx = np.indices(comp_shape).reshape(len(comp_shape), -1).T
    return [name + "_" + "".join(str(k) for k in row) for row in idx]


def field_to_csv(field: TensorField, path):
    """One row per node: coordinates then components."""
    pts = field.chart.nodes
    vals = field.values().reshape(pts.shape[0], -1)
    labels = [f"x{i+1}" for i in range(pts.shape[1])] + component_labels(field.name or "f", field.comp_shape)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(labels)
        for row in np.hstack([pts, vals]):
            w.writerow([repr(float(v)) for v in row])


def field_header_json(field: TensorField, path):
    with open(path, "w") as fh:
        json.dump(
            {"chart": field.chart.header(), "name": field.name, "comp_shape": list(field.comp_shape),
             "mode": field.mode},
            fh, indent=2, sort_keys=True,
        )
