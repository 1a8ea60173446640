"""The curvature chain of a metric: Christoffel to Bach.

Closed-form metrics go through :class:`GeometryFns`, which composes exact
forward-mode jets per point; sampled metrics go through batched finite
difference jets and stop at two metric derivatives (Schouten/Weyl), unless
the caller opts into the reduced-order stencil fallback for Cotton/Bach.

Sign conventions are the ones fixed in :mod:`confgeo.tensors`; every
identity test in the suite is written against them.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import jax
import jax.numpy as jnp
import numpy as np

from . import tensors as tn
from .fields import CapabilityError, MetricField, ScalarField, TensorField, eval_on_grid


class GeometryFns:
    """Per-point jax functions for curvature objects of a closed-form metric."""

    def __init__(self, metric_fn, dim):
        self.metric_fn = metric_fn
        self.dim = dim

    @cached_property
    def dg(self):
        return jax.jacfwd(self.metric_fn)

    @cached_property
    def d2g(self):
        return jax.jacfwd(self.dg)

    @cached_property
    def christoffel(self):
        mf, dgf = self.metric_fn, self.dg

        def f(x):
            g = mf(x)
            return tn.christoffel(jnp.linalg.inv(g), dgf(x), xp=jnp)

        return f

    @cached_property
    def riemann(self):
        mf, dgf, d2gf = self.metric_fn, self.dg, self.d2g

        def f(x):
            g = mf(x)
            return tn.riemann_down(g, jnp.linalg.inv(g), dgf(x), d2gf(x), xp=jnp)

        return f

    @cached_property
    def ricci(self):
        mf, rf = self.metric_fn, self.riemann

        def f(x):
            return tn.ricci(jnp.linalg.inv(mf(x)), rf(x), xp=jnp)

        return f

    @cached_property
    def scal(self):
        mf, ricf = self.metric_fn, self.ricci

        def f(x):
            return tn.scal(jnp.linalg.inv(mf(x)), ricf(x), xp=jnp)

        return f

    @cached_property
    def schouten(self):
        if self.dim != 4:
            raise CapabilityError("Schouten chain is defined for dimension 4")
        mf, ricf, sf = self.metric_fn, self.ricci, self.scal

        def f(x):
            return tn.schouten(mf(x), ricf(x), sf(x), xp=jnp)[0]

        return f

    @cached_property
    def j_trace(self):
        sf = self.scal
        return lambda x: sf(x) / 6.0

    @cached_property
    def weyl(self):
        mf, rf, schf = self.metric_fn, self.riemann, self.schouten

        def f(x):
            return tn.weyl(rf(x), schf(x), mf(x), xp=jnp)

        return f

    def nabla(self, tfn, rank):
        """Covariant derivative of an all-lower tensor-valued function."""
        gamf = self.christoffel
        dtf = jax.jacfwd(tfn)

        def f(x):
            return tn.cov_deriv(gamf(x), tfn(x), dtf(x), rank, xp=jnp)

        return f

    @cached_property
    def nabla_schouten(self):
        return self.nabla(self.schouten, 2)

    @cached_property
    def lap_schouten(self):
        mf = self.metric_fn
        n2 = self.nabla(self.nabla_schouten, 3)

        def f(x):
            return jnp.einsum("ab,ijab->ij", jnp.linalg.inv(mf(x)), n2(x))

        return f

    @cached_property
    def hess_j(self):
        jf = self.j_trace
        djf = jax.jacfwd(jf)
        return self.nabla(djf, 1)

    @cached_property
    def bach(self):
        mf, schf, wf = self.metric_fn, self.schouten, self.weyl
        lapf, hjf = self.lap_schouten, self.hess_j

        def f(x):
            g = mf(x)
            return tn.bach_from_parts(g, jnp.linalg.inv(g), schf(x), wf(x), lapf(x), hjf(x), xp=jnp)

        return f

    @cached_property
    def cotton(self):
        nsf = self.nabla_schouten
        return lambda x: tn.cotton(nsf(x), xp=jnp)

    @cached_property
    def bach_via_cotton(self):
        mf, schf, wf = self.metric_fn, self.schouten, self.weyl
        ncf = self.nabla(self.cotton, 3)

        def f(x):
            return tn.bach_from_cotton(jnp.linalg.inv(mf(x)), ncf(x), schf(x), wf(x), xp=jnp)

        return f


@dataclass
class CurvaturePack:
    """All curvature tensors of one metric at one resolution (numpy arrays)."""

    metric: MetricField
    gamma: np.ndarray
    riem: np.ndarray
    ric: np.ndarray
    scal: np.ndarray
    sch: np.ndarray = None
    j: np.ndarray = None
    weyl: np.ndarray = None
    cot: np.ndarray = None
    bach: np.ndarray = None
    gauss: np.ndarray = None  # 2D only: K = Scal/2
    reduced_order: bool = False

    @property
    def chart(self):
        return self.metric.chart

    def norms(self):
        gi = self.metric.inverse()
        out = {
            "riem": np.sqrt(tn.norm_sq_lower(gi, self.riem, 4)),
            "ric": np.sqrt(tn.norm_sq_lower(gi, self.ric, 2)),
        }
        if self.sch is not None:
            out["sch"] = np.sqrt(tn.norm_sq_lower(gi, self.sch, 2))
        if self.weyl is not None:
            out["weyl"] = np.sqrt(tn.norm_sq_lower(gi, self.weyl, 4))
        if self.bach is not None:
            out["bach"] = np.sqrt(np.abs(tn.norm_sq_lower(gi, self.bach, 2)))
        return out

    def lp_norm(self, which, p=2.0):
        """L^p(chart, g) norm of a pack tensor's pointwise g-norm."""
        dens = self.norms()[which] ** p * self.metric.sqrt_det()
        return float(np.sum(dens * self.chart.weights) ** (1.0 / p))

    def symmetry_residuals(self):
        g, gi = self.metric.values(), self.metric.inverse()
        r = self.riem
        res = {
            "riem_antisym_first": np.abs(r + r.swapaxes(1, 2)).max(),
            "riem_antisym_last": np.abs(r + r.swapaxes(3, 4)).max(),
            "riem_pair": np.abs(r - r.transpose(0, 3, 4, 1, 2)).max(),
            "riem_bianchi1": np.abs(r + r.transpose(0, 1, 3, 4, 2) + r.transpose(0, 1, 4, 2, 3)).max(),
            "ric_sym": np.abs(self.ric - self.ric.swapaxes(1, 2)).max(),
        }
        if self.weyl is not None:
            res["weyl_trace"] = np.abs(np.einsum("mik,mijkl->mjl", gi, self.weyl)).max()
        if self.bach is not None:
            res["bach_trace"] = np.abs(np.einsum("mij,mij->m", gi, self.bach)).max()
            res["bach_sym"] = np.abs(self.bach - self.bach.swapaxes(1, 2)).max()
        return res


def _fd_jets(g: MetricField):
    eng = g._fd()
    vals = g.values()
    dg = eng.cartesian_partials(vals)
    d2g = eng.cartesian_partials(dg)
    return vals, dg, d2g


def curvature_pack(g: MetricField, want_bach=True, allow_reduced_order=False) -> CurvaturePack:
    """Compute the full curvature chain of a metric.

    4D closed-form metrics get everything through exact jets.  Sampled 4D
    metrics stop at Schouten/Weyl unless ``allow_reduced_order`` enables the
    documented stencil fallback, which finite-differences the sampled
    Schouten field for Cotton/Bach at reduced order.  2D packs stop at the
    Gauss curvature.
    """
    g.validate()
    dim = g.chart.dimension
    pts = g.chart.nodes
    if g.mode == "closed-form":
        geo = GeometryFns(g.fn, dim)
        gamma = eval_on_grid(geo.christoffel, pts)
        riem = eval_on_grid(geo.riemann, pts)
        ric = eval_on_grid(geo.ricci, pts)
        scal_v = eval_on_grid(geo.scal, pts)
        if dim == 2:
            return CurvaturePack(g, gamma, riem, ric, scal_v, gauss=scal_v / 2.0)
        sch = eval_on_grid(geo.schouten, pts)
        jv = scal_v / 6.0
        weyl_v = eval_on_grid(geo.weyl, pts)
        cot = eval_on_grid(geo.cotton, pts)
        bach = eval_on_grid(geo.bach, pts) if want_bach else None
        return CurvaturePack(g, gamma, riem, ric, scal_v, sch, jv, weyl_v, cot, bach)

    vals, dg, d2g = _fd_jets(g)
    gi = g.inverse()
    gamma = tn.christoffel(gi, dg)
    riem = tn.riemann_down(vals, gi, dg, d2g)
    ric = tn.ricci(gi, riem)
    scal_v = tn.scal(gi, ric)
    if dim == 2:
        return CurvaturePack(g, gamma, riem, ric, scal_v, gauss=scal_v / 2.0)
    sch, jv = tn.schouten(vals, ric, scal_v)
    weyl_v = tn.weyl(riem, sch, vals)
    cot = bach = None
    reduced = False
    if want_bach or allow_reduced_order:
        if not allow_reduced_order:
            raise CapabilityError(
                "Bach needs 4 metric derivatives; sampled metrics expose it only "
                "with allow_reduced_order=True (2-derivative-of-curvature stencil)"
            )
        eng = g._fd()
        dsch = eng.cartesian_partials(sch)
        nsch = tn.cov_deriv(gamma, sch, dsch, 2)
        cot = tn.cotton(nsch)
        dnsch = eng.cartesian_partials(nsch)
        n2sch = tn.cov_deriv(gamma, nsch, dnsch, 3)
        lap_sch = np.einsum("mab,mijab->mij", gi, n2sch)
        djv = eng.cartesian_partials(jv)
        hess_j = tn.cov_deriv(gamma, djv, eng.cartesian_partials(djv), 1)
        bach = tn.bach_from_parts(vals, gi, sch, weyl_v, lap_sch, hess_j)
        reduced = True
    return CurvaturePack(g, gamma, riem, ric, scal_v, sch, jv, weyl_v, cot, bach, reduced_order=reduced)


def bach_cross_check(g: MetricField) -> float:
    """Max node deviation between the two independent Bach routes."""
    if g.mode != "closed-form":
        raise CapabilityError("bach_cross_check needs a closed-form metric")
    geo = GeometryFns(g.fn, g.chart.dimension)
    b1 = eval_on_grid(geo.bach, g.chart.nodes)
    b2 = eval_on_grid(geo.bach_via_cotton, g.chart.nodes)
    return float(np.abs(b1 - b2).max())


# --- covariant operators on fields ----------------------------------------


def covariant_derivative(g: MetricField, t: TensorField) -> TensorField:
    """Levi-Civita covariant derivative; new lower index appended last."""
    rank = t.rank
    if t.comp_shape and set(t.comp_shape) != {g.chart.dimension}:
        raise ValueError("tensor components must match chart dimension")
    if g.mode == "closed-form" and t.mode == "closed-form":
        geo = GeometryFns(g.fn, g.chart.dimension)
        fn = geo.nabla(t.fn, rank)
        return TensorField(g.chart, t.comp_shape + (g.chart.dimension,), fn=fn, name=f"nabla({t.name})")
    dg = g._fd().cartesian_partials(g.values())
    gamma = tn.christoffel(g.inverse(), dg)
    dt = t._fd().cartesian_partials(t.values())
    out = tn.cov_deriv(gamma, t.values(), dt, rank)
    return TensorField(g.chart, t.comp_shape + (g.chart.dimension,), values=out, name=f"nabla({t.name})")


def hessian(g: MetricField, f: ScalarField) -> TensorField:
    df = covariant_derivative(g, f)
    return covariant_derivative(g, df)


def rough_laplacian(g: MetricField, t: TensorField) -> TensorField:
    n2 = covariant_derivative(g, covariant_derivative(g, t))
    gi = g.inverse()
    vals = np.einsum("mab,m...ab->m...", gi, n2.values())
    if t.rank == 0:
        return ScalarField(g.chart, values=vals, name=f"lap({t.name})")
    return TensorField(g.chart, t.comp_shape, values=vals, name=f"lap({t.name})")
