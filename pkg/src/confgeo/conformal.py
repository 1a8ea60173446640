"""Conformal transformation laws, inversion compactification, blow-up
rescaling, and the named-metric catalog.

The conformal laws verified here (all node-wise, both sides computed
independently):

* ``Sch[e^{2u}g] = Sch[g] - Hess_g u + du (x) du - |du|^2_g g / 2``
* ``J[e^{2u}g]   = e^{-2u} (J[g] - lap_g u - |du|^2_g)``
* ``B[e^{2u}g]   = e^{-2u} B[g]``
* ``Hess_{e^{2u}g} f = Hess_g f - du (x) df - df (x) du + <du,df>_g g``

Blow-up rescaling uses the pullback convention ``h_s(x) = g0(s x)``
componentwise (this is ``s^{-2} (psi_s^* g0)`` for ``psi_s(x) = s x``), under
which the scaling identities are exact:

* ``Riem[h_s](x) = s^2 Riem[g0](s x)``      (all-lower components)
* ``sqrt(det h_s)(x) = sqrt(det g0)(s x)``  (i.e. s^4 dvol_{h_s} = dvol_{g0})
* ``Sch[h_s](x) = s^2 Sch[g0](s x)``
* ``J[h_s](x)   = s^2 J[g0](s x)``
* ``B[h_s](x)   = s^4 B[g0](s x)``

so the reported residuals measure implementation error only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import jax
import jax.numpy as jnp
import numpy as np

from . import tensors as tn
from .charts import Chart, annulus4d_chart, disk_chart
from .curvature import GeometryFns
from .fields import CapabilityError, MetricField, ScalarField, TensorField, eval_on_grid


class ConformalFactor(ScalarField):
    """Scalar gauge field u in e^{2u} g, with derivative access."""

    def exp_bounds(self):
        v = self.values()
        return float(np.exp(-np.abs(v).max())), float(np.exp(np.abs(v).max()))


def conformal_metric_fn(g_fn, u_fn):
    return lambda x: jnp.exp(2.0 * u_fn(x)) * g_fn(x)


def default_hessian_test_function(x):
    return x[0] * x[1] + jnp.sin(x[2]) + 0.5 * x[3] ** 2


def conformal_change(g: MetricField, u, f_test=None):
    """Return (e^{2u} g, report of residuals of the four conformal laws)."""
    if g.mode != "closed-form":
        raise CapabilityError("conformal_change residuals need closed-form data")
    u_fn = u.fn if isinstance(u, TensorField) else u
    if u_fn is None:
        raise CapabilityError("conformal factor needs jet capability >= 2 (closed form)")
    chart = g.chart
    dim = chart.dimension
    gu = MetricField(chart, fn=conformal_metric_fn(g.fn, u_fn), name=g.name + "_u")
    geo = GeometryFns(g.fn, dim)
    geu = GeometryFns(gu.fn, dim)
    pts = chart.nodes

    du_field = eval_on_grid(jax.jacfwd(u_fn), pts)
    u_v = eval_on_grid(u_fn, pts)
    g_v, gi_v = g.values(), g.inverse()

    hess_u = eval_on_grid(geo.nabla(jax.jacfwd(u_fn), 1), pts)
    du2 = np.einsum("mij,mi,mj->m", gi_v, du_field, du_field)

    report = {}
    sch_lhs = eval_on_grid(geu.schouten, pts)
    sch_rhs = (
        eval_on_grid(geo.schouten, pts)
        - hess_u
        + np.einsum("mi,mj->mij", du_field, du_field)
        - 0.5 * du2[:, None, None] * g_v
    )
    report["schouten"] = float(np.abs(sch_lhs - sch_rhs).max())

    j_lhs = eval_on_grid(geu.j_trace, pts)
    lap_u = np.einsum("mij,mij->m", gi_v, hess_u)
    j_rhs = np.exp(-2 * u_v) * (eval_on_grid(geo.j_trace, pts) - lap_u - du2)
    report["j"] = float(np.abs(j_lhs - j_rhs).max())

    b_lhs = eval_on_grid(geu.bach, pts)
    b_rhs = np.exp(-2 * u_v)[:, None, None] * eval_on_grid(geo.bach, pts)
    report["bach"] = float(np.abs(b_lhs - b_rhs).max())

    f_fn = f_test or default_hessian_test_function
    df = eval_on_grid(jax.jacfwd(f_fn), pts)
    hess_f_g = eval_on_grid(geo.nabla(jax.jacfwd(f_fn), 1), pts)
    hess_f_gu = eval_on_grid(geu.nabla(jax.jacfwd(f_fn), 1), pts)
    dudf = np.einsum("mij,mi,mj->m", gi_v, du_field, df)
    hess_rhs = (
        hess_f_g
        - np.einsum("mi,mj->mij", du_field, df)
        - np.einsum("mi,mj->mij", df, du_field)
        + dudf[:, None, None] * g_v
    )
    report["hessian"] = float(np.abs(hess_f_gu - hess_rhs).max())

    # conformal invariants, evaluated through both metrics' own quadratures
    w_g = eval_on_grid(geo.weyl, pts)
    w_gu = eval_on_grid(geu.weyl, pts)
    wsq_g = tn.norm_sq_lower(gi_v, w_g, 4) * g.sqrt_det()
    wsq_gu = tn.norm_sq_lower(gu.inverse(), w_gu, 4) * gu.sqrt_det()
    iw_g = float(np.sum(wsq_g * chart.weights))
    iw_gu = float(np.sum(wsq_gu * chart.weights))
    report["weyl_energy_g"] = iw_g
    report["weyl_energy_gu"] = iw_gu
    report["weyl_energy_rel"] = abs(iw_g - iw_gu) / max(abs(iw_g), 1e-30)

    du4_g = float(np.sum(du2**2 * g.sqrt_det() * chart.weights))
    du2_gu = np.einsum("mij,mi,mj->m", gu.inverse(), du_field, du_field)
    du4_gu = float(np.sum(du2_gu**2 * gu.sqrt_det() * chart.weights))
    report["grad4_g"] = du4_g
    report["grad4_gu"] = du4_gu
    report["grad4_rel"] = abs(du4_g - du4_gu) / max(abs(du4_g), 1e-30)
    return gu, report


# --- inversion compactification -------------------------------------------


def inversion_pullback_fn(g_fn):
    """h(x) = |x|^4 (iota^* g)(x) for the inversion iota(x) = x / |x|^2."""

    def iota(x):
        return x / jnp.dot(x, x)

    def h(x):
        J = jax.jacfwd(iota)(x)
        gy = g_fn(iota(x))
        return jnp.dot(x, x) ** 2 * jnp.einsum("ai,ab,bj->ij", J, gy, J)

    return h


@dataclass
class CompactifyReport:
    radii: np.ndarray
    sup_dev: np.ndarray
    fitted_decay: float
    declared_decay: float
    decay_ok: bool
    exactly_flat: bool
    sch_norm_trace: np.ndarray = None


def invert_compactify(g_ale_fn, tau, R=1.0, chart=None, n_radii=7, with_schouten=False):
    """Compactify an ALE end through inversion; fit h -> delta decay rate."""
    chart = chart or annulus4d_chart(r_in=1e-3, r_out=1.0 / R, nr=12, nchi=8, ntheta=8, nphi=8)
    h_fn = inversion_pullback_fn(g_ale_fn)
    h = MetricField(chart, fn=h_fn, name="compactified")
    radii = (1.0 / R) * 2.0 ** (-np.arange(1, n_radii + 1, dtype=float))
    rng = np.random.default_rng(11)
    dirs = rng.normal(size=(24, 4))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    sup_dev = np.empty(n_radii)
    sch_trace = np.empty(n_radii) if with_schouten else None
    geo = GeometryFns(h_fn, 4) if with_schouten else None
    for k, r in enumerate(radii):
        pts = r * dirs
        hv = eval_on_grid(h_fn, pts)
        sup_dev[k] = np.abs(hv - np.eye(4)).max()
        if with_schouten:
            sch = eval_on_grid(geo.schouten, pts)
            hv_inv = np.linalg.inv(hv)
            sch_trace[k] = np.sqrt(tn.norm_sq_lower(hv_inv, sch, 2)).max()
    exactly_flat = bool(sup_dev.max() < 1e-13)
    if exactly_flat:
        fitted = float("inf")
        ok = True
    else:
        slope = np.polyfit(np.log(radii), np.log(np.maximum(sup_dev, 1e-300)), 1)[0]
        fitted = float(slope)
        ok = bool(abs(fitted - tau) <= 0.2)
    return h, CompactifyReport(radii, sup_dev, fitted, float(tau), ok, exactly_flat, sch_trace)


# --- blow-up rescaling ------------------------------------------------------


def blowup_rescale(g0: MetricField, s, target_chart=None):
    """Rescaled metric h_s(x) = g0(s x) plus exact scaling-identity residuals."""
    if g0.mode != "closed-form":
        raise CapabilityError("blowup_rescale needs a closed-form metric")
    if not (0 < s <= 0.125 + 1e-12):
        raise ValueError("rescaling factor must lie in (0, 1/8]")
    src = g0.chart
    target_chart = target_chart or src
    rin = min(np.linalg.norm(target_chart.nodes, axis=1)) * s
    rout = max(np.linalg.norm(target_chart.nodes, axis=1)) * s
    if src.kind != "cartesian-box" and (rin < src.r_in - 1e-12 or rout > src.r_out + 1e-12):
        raise ValueError("rescaled chart leaves the source chart's radial range")

    g0_fn = g0.fn
    hs_fn = lambda x: g0_fn(s * x)
    hs = MetricField(target_chart, fn=hs_fn, name=f"{g0.name}_blowup")

    pts = target_chart.nodes
    spts = s * pts
    geo_h = GeometryFns(hs_fn, 4)
    geo_g = GeometryFns(g0_fn, 4)

    def at(geo, fn_name, where):
        return eval_on_grid(getattr(geo, fn_name), where)

    report = {
        "riemann": float(np.abs(at(geo_h, "riemann", pts) - s**2 * at(geo_g, "riemann", spts)).max()),
        "volume": float(
            np.abs(np.sqrt(np.linalg.det(eval_on_grid(hs_fn, pts))) - np.sqrt(np.linalg.det(eval_on_grid(g0_fn, spts)))).max()
        ),
        "schouten": float(np.abs(at(geo_h, "schouten", pts) - s**2 * at(geo_g, "schouten", spts)).max()),
        "j": float(np.abs(at(geo_h, "j_trace", pts) - s**2 * at(geo_g, "j_trace", spts)).max()),
        "bach": float(np.abs(at(geo_h, "bach", pts) - s**4 * at(geo_g, "bach", spts)).max()),
    }
    return hs, report


def riemann_l2_two_quadratures(g0: MetricField, s, r_lo, r_hi, res_a=None, res_b=None):
    """||Riem[h_s]||_{L^2} over the annulus [r_lo, r_hi] in the rescaled chart,
    against ||Riem[g0]||_{L^2} over [s r_lo, s r_hi], on independent grids."""
    ca = annulus4d_chart(r_in=r_lo, r_out=r_hi, **(res_a or dict(nr=14, nchi=8, ntheta=8, nphi=8)))
    cb = annulus4d_chart(r_in=s * r_lo, r_out=s * r_hi, **(res_b or dict(nr=19, nchi=9, ntheta=9, nphi=10)))
    g0_fn = g0.fn
    hs = MetricField(ca, fn=lambda x: g0_fn(s * x))
    gb = MetricField(cb, fn=g0_fn)
    na = np.sqrt(tn.norm_sq_lower(hs.inverse(), eval_on_grid(GeometryFns(hs.fn, 4).riemann, ca.nodes), 4))
    nb = np.sqrt(tn.norm_sq_lower(gb.inverse(), eval_on_grid(GeometryFns(gb.fn, 4).riemann, cb.nodes), 4))
    ia = float(np.sum(na**2 * hs.sqrt_det() * ca.weights))
    ib = float(np.sum(nb**2 * gb.sqrt_det() * cb.weights))
    return np.sqrt(ia), np.sqrt(ib)


# --- named-metric catalog ---------------------------------------------------


@dataclass
class MetricCatalogEntry:
    """Closed-form metric constructor, one per worked example or solver input."""

    name: str
    dimension: int
    builder: callable  # params dict -> per-point jax fn
    defaults: dict = field(default_factory=dict)
    radial_profile: callable = None  # params -> phi(r) for e^{2 phi(r)} xi entries
    notes: str = ""

    def metric_fn(self, **params):
        p = {**self.defaults, **params}
        return self.builder(p)

    def metric(self, chart: Chart, **params) -> MetricField:
        if chart.dimension != self.dimension:
            raise ValueError(f"{self.name} is {self.dimension}D")
        return MetricField(chart, fn=self.metric_fn(**params), name=self.name)


def _conf(dim, phi):
    return lambda p: (lambda x: jnp.exp(2.0 * phi(p)(x)) * jnp.eye(dim))


def _bump_phi(p):
    amp, c, w = p["amplitude"], p["center"], p["width"]
    return lambda x: amp * jnp.exp(-((jnp.linalg.norm(x) - c) ** 2) / w)


def _bump_profile(p):
    amp, c, w = p["amplitude"], p["center"], p["width"]
    return lambda r: amp * jnp.exp(-((r - c) ** 2) / w)


def _sphere_phi(p):
    return lambda x: jnp.log(2.0 / (1.0 + jnp.dot(x, x)))


def _polar_singular_phi(p):
    n = p["n"]
    return lambda x: (n - 1.0) * 0.5 * jnp.log(jnp.dot(x, x)) + jnp.log(1.0 * n)


def _essential_phi(p):
    return lambda x: -jnp.log(jnp.dot(x, x)) + x[0] / jnp.dot(x, x)


def _cone_phi(p):
    beta = p["beta"]
    return lambda x: 0.5 * beta * jnp.log(jnp.dot(x, x))


def _annulus_disk(p):
    def fn(x):
        r2 = jnp.dot(x, x)
        r = jnp.sqrt(r2)
        rhat = jnp.outer(x, x) / r2
        that = jnp.eye(2) - rhat
        return 0.25 * rhat + ((1.0 + r) / (2.0 * r)) ** 2 * that

    return fn


def _ale(p):
    a = p["a"]
    return lambda x: (1.0 + a / jnp.dot(x, x)) * jnp.eye(4)


def _perturbed_flat(p):
    eps, c, w = p["eps"], p["center"], p["width"]

    def fn(x):
        d2 = jnp.sum((x - jnp.asarray(c)) ** 2)
        b = jnp.exp(-d2 / w)
        q = jnp.zeros((4, 4))
        q = q.at[0, 0].set(b)
        q = q.at[0, 1].set(0.5 * b)
        q = q.at[1, 0].set(0.5 * b)
        q = q.at[2, 3].set(-0.3 * b)
        q = q.at[3, 2].set(-0.3 * b)
        q = q.at[1, 1].set(-0.4 * b)
        return jnp.eye(4) + eps * q

    return fn


def metric_catalog():
    """Catalog of named closed-form metrics (one per worked example)."""
    entries = [
        MetricCatalogEntry("flat2", 2, lambda p: (lambda x: jnp.eye(2))),
        MetricCatalogEntry("flat4", 4, lambda p: (lambda x: jnp.eye(4)),
                           radial_profile=lambda p: (lambda r: 0.0 * r)),
        MetricCatalogEntry("polar_singular", 2, _conf(2, _polar_singular_phi), {"n": 2},
                           notes="pullback of the flat metric by z -> z^n"),
        MetricCatalogEntry("essential_singularity", 2, _conf(2, _essential_phi),
                           notes="pullback of the flat metric by z -> exp(1/z)"),
        MetricCatalogEntry("annulus_disk", 2, lambda p: _annulus_disk(p),
                           notes="disk chart of the flat annulus [1/2, 1] x S^1"),
        MetricCatalogEntry("round_sphere2", 2, _conf(2, _sphere_phi)),
        MetricCatalogEntry("round_sphere4", 4, _conf(4, _sphere_phi),
                           radial_profile=lambda p: (lambda r: jnp.log(2.0 / (1.0 + r * r)))),
        MetricCatalogEntry("conformal_bump2", 2, _conf(2, _bump_phi),
                           {"amplitude": 0.1, "center": 0.6, "width": 0.02}),
        MetricCatalogEntry("conformal_bump", 4, _conf(4, _bump_phi),
                           {"amplitude": 0.1, "center": 0.6, "width": 0.02},
                           radial_profile=_bump_profile),
        MetricCatalogEntry("cone2", 2, _conf(2, _cone_phi), {"beta": 0.5}),
        MetricCatalogEntry("cone4", 4, _conf(4, _cone_phi), {"beta": 0.5},
                           radial_profile=lambda p: (lambda r: p["beta"] * jnp.log(r))),
        MetricCatalogEntry("ale_model", 4, _ale, {"a": 0.2},
                           notes="exterior chart |z| >= R; decay order tau = 2"),
        MetricCatalogEntry("perturbed_flat", 4, _perturbed_flat,
                           {"eps": 1e-2, "center": (0.0, 0.1, -0.1, 0.05), "width": 0.08}),
    ]
    return {e.name: e for e in entries}


def default_chart_for(entry: MetricCatalogEntry, **kw) -> Chart:
    if entry.dimension == 2:
        return disk_chart(**kw)
    return annulus4d_chart(**kw)
