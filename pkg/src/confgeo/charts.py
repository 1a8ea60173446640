"""Charts and grids.

A chart fixes node placement and quadrature on one coordinate patch; all
tensor components elsewhere in the package are Cartesian, so the chart's
only jobs are (i) where the nodes sit, (ii) the coordinate volume element,
(iii) the coordinate->Cartesian chain rule for finite differences.

Three kinds are supported:

* ``punctured-disk-polar``  -- 2D, nodes on (r, theta), r in [r_in, r_out],
  r_in > 0 (the puncture is never sampled).
* ``annulus-radial-4d``     -- 4D, nodes on (r, chi, theta, phi) with
  hyperspherical S^3 angles.  The S^3 quadrature is Gauss-Chebyshev (2nd
  kind) in chi, Gauss-Legendre in cos(theta) and trapezoid in phi, which
  integrates the round S^3 measure to exactly 2*pi^2.
* ``cartesian-box``         -- product box, trapezoid quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

POLAR = "punctured-disk-polar"
RADIAL4D = "annulus-radial-4d"
BOX = "cartesian-box"

_KINDS = {POLAR: 2, RADIAL4D: 4, BOX: None}


def _trapz_weights(x):
    w = np.zeros_like(x)
    w[1:-1] = 0.5 * (x[2:] - x[:-2])
    w[0] = 0.5 * (x[1] - x[0])
    w[-1] = 0.5 * (x[-1] - x[-2])
    return w


@dataclass(frozen=True)
class Chart:
    """One coordinate patch with its grid and quadrature rule."""

    kind: str
    r_in: float = 0.0
    r_out: float = 1.0
    res: tuple = (64, 64)
    bounds: tuple = ()  # ((a1,b1),...) for cartesian-box

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown chart kind {self.kind!r}")
        if self.kind == BOX:
            if not self.bounds:
                raise ValueError("cartesian-box chart needs bounds")
            if len(self.bounds) != len(self.res):
                raise ValueError("bounds/res mismatch")
        else:
            if not (0 <= self.r_in < self.r_out):
                raise ValueError("need 0 <= r_in < r_out")
            if self.r_in <= 0:
                raise ValueError("polar/radial charts exclude the origin: r_in > 0")
            if len(self.res) != _KINDS[self.kind]:
                raise ValueError(f"{self.kind} needs {_KINDS[self.kind]} resolutions")
        if any(n < 8 for n in self.res):
            raise ValueError("resolutions must be >= 8")

    @property
    def dimension(self):
        return _KINDS[self.kind] or len(self.bounds)

    @property
    def grid_shape(self):
        return tuple(self.res)

    # --- coordinate axes ------------------------------------------------

    @cached_property
    def coord_axes(self):
        """1D node arrays per intrinsic coordinate axis."""
        if self.kind == POLAR:
            nr, nt = self.res
            r = np.linspace(self.r_in, self.r_out, nr)
            th = np.linspace(0.0, 2 * np.pi, nt, endpoint=False)
            return (r, th)
        if self.kind == RADIAL4D:
            nr, nc, nt, np_ = self.res
            r = np.linspace(self.r_in, self.r_out, nr)
            chi = np.arange(1, nc + 1) * np.pi / (nc + 1)
            tgl, _ = np.polynomial.legendre.leggauss(nt)
            theta = np.arccos(tgl[::-1])
            phi = np.linspace(0.0, 2 * np.pi, np_, endpoint=False)
            return (r, chi, theta, phi)
        return tuple(np.linspace(a, b, n) for (a, b), n in zip(self.bounds, self.res))

    @cached_property
    def periodic_axes(self):
        if self.kind == POLAR:
            return (False, True)
        if self.kind == RADIAL4D:
            return (False, False, False, True)
        return tuple(False for _ in self.res)

    # --- nodes and quadrature -------------------------------------------

    @cached_property
    def coord_mesh(self):
        return np.meshgrid(*self.coord_axes, indexing="ij")

    @cached_property
    def nodes(self):
        """Cartesian node coordinates, shape (M, dim)."""
        if self.kind == POLAR:
            r, th = self.coord_mesh
            pts = np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)
        elif self.kind == RADIAL4D:
            r, chi, th, ph = self.coord_mesh
            sc, st = np.sin(chi), np.sin(th)
            pts = np.stack(
                [
                    r * np.cos(chi),
                    r * sc * np.cos(th),
                    r * sc * st * np.cos(ph),
                    r * sc * st * np.sin(ph),
                ],
                axis=-1,
            )
        else:
            pts = np.stack(self.coord_mesh, axis=-1)
        return pts.reshape(-1, self.dimension)

    @cached_property
    def weights(self):
        """Quadrature weights for the coordinate volume element, shape (M,)."""
        if self.kind == POLAR:
            r, th = self.coord_axes
            wr = _trapz_weights(r)
            wt = np.full(th.size, 2 * np.pi / th.size)
            w = (wr * r)[:, None] * wt[None, :]
        elif self.kind == RADIAL4D:
            r, chi, theta, phi = self.coord_axes
            wr = _trapz_weights(r) * r**3
            nc = chi.size
            wchi = np.pi / (nc + 1) * np.sin(chi) ** 2
            _, wt = np.polynomial.legendre.leggauss(theta.size)
            wtheta = wt[::-1]  # already includes the sin(theta) dtheta measure
            wphi = np.full(phi.size, 2 * np.pi / phi.size)
            w = (
                wr[:, None, None, None]
                * wchi[None, :, None, None]
                * wtheta[None, None, :, None]
                * wphi[None, None, None, :]
            )
        else:
            axes = self.coord_axes
            w = _trapz_weights(axes[0])
            for ax in axes[1:]:
                w = w[..., None] * _trapz_weights(ax)
        return w.reshape(-1)

    # --- chain rule for sampled differentiation ---------------------------

    @cached_property
    def inverse_coord_jacobian(self):
        """dq/dx at every node, shape (M, dim_q, dim_x)."""
        if self.kind == BOX:
            m = self.nodes.shape[0]
            return np.broadcast_to(np.eye(self.dimension), (m, self.dimension, self.dimension))
        return np.linalg.inv(self._coord_jacobian())

    def _coord_jacobian(self):
        if self.kind == POLAR:
            r, th = [m.reshape(-1) for m in self.coord_mesh]
            ct, st = np.cos(th), np.sin(th)
            jac = np.empty((r.size, 2, 2))
            jac[:, 0, 0] = ct
            jac[:, 0, 1] = -r * st
            jac[:, 1, 0] = st
            jac[:, 1, 1] = r * ct
            return jac
        r, chi, th, ph = [m.reshape(-1) for m in self.coord_mesh]
        cc, sc = np.cos(chi), np.sin(chi)
        ct, st = np.cos(th), np.sin(th)
        cp, sp = np.cos(ph), np.sin(ph)
        jac = np.zeros((r.size, 4, 4))
        # x1 = r cos(chi)
        jac[:, 0] = np.stack([cc, -r * sc, 0 * r, 0 * r], axis=-1)
        # x2 = r sin(chi) cos(theta)
        jac[:, 1] = np.stack([sc * ct, r * cc * ct, -r * sc * st, 0 * r], axis=-1)
        # x3 = r sin(chi) sin(theta) cos(phi)
        jac[:, 2] = np.stack([sc * st * cp, r * cc * st * cp, r * sc * ct * cp, -r * sc * st * sp], axis=-1)
        # x4 = r sin(chi) sin(theta) sin(phi)
        jac[:, 3] = np.stack([sc * st * sp, r * cc * st * sp, r * sc * ct * sp, r * sc * st * cp], axis=-1)
        return jac

    # --- derived point sets ----------------------------------------------

    def circle(self, r, n=None):
        """Cartesian points of the circle |x| = r (2D charts)."""
        if self.dimension != 2:
            raise ValueError("circle() is for 2D charts")
        n = n or self.res[1]
        th = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
        return np.stack([r * np.cos(th), r * np.sin(th)], axis=-1), th

    def sphere3(self, r):
        """Nodes, tangent coordinate frame and S^3 weights at |x| = r (4D)."""
        if self.kind != RADIAL4D:
            raise ValueError("sphere3() is for annulus-radial-4d charts")
        _, chi, theta, phi = self.coord_axes
        c, t, p = np.meshgrid(chi, theta, phi, indexing="ij")
        sc, st = np.sin(c), np.sin(t)
        pts = np.stack(
            [r * np.cos(c), r * sc * np.cos(t), r * sc * st * np.cos(p), r * sc * st * np.sin(p)],
            axis=-1,
        ).reshape(-1, 4)
        # coordinate tangents d x / d(chi, theta, phi)
        dchi = np.stack([-r * sc, r * np.cos(c) * np.cos(t), r * np.cos(c) * st * np.cos(p), r * np.cos(c) * st * np.sin(p)], axis=-1)
        dth = np.stack([0 * c, -r * sc * st, r * sc * np.cos(t) * np.cos(p), r * sc * np.cos(t) * np.sin(p)], axis=-1)
        dph = np.stack([0 * c, 0 * c, -r * sc * st * np.sin(p), r * sc * st * np.cos(p)], axis=-1)
        tangents = np.stack([dchi, dth, dph], axis=-2).reshape(-1, 3, 4)
        nc = chi.size
        wchi = np.full(nc, np.pi / (nc + 1))
        _, wt = np.polynomial.legendre.leggauss(theta.size)
        wtheta = wt[::-1] / np.sin(theta)
        wphi = np.full(phi.size, 2 * np.pi / phi.size)
        w = (wchi[:, None, None] * wtheta[None, :, None] * wphi[None, None, :]).reshape(-1)
        # Pure d(chi) d(theta) d(phi) weights: the caller multiplies by the
        # induced-metric area density sqrt(det gbar), whose sin^2(chi)*sin(theta)
        # factor is what makes this rule high-order (Gauss-Chebyshev-U in chi,
        # Gauss-Legendre in cos theta).
        return pts, tangents, w

    def header(self):
        """JSON-serializable chart description."""
        d = {"kind": self.kind, "res": list(self.res)}
        if self.kind == BOX:
            d["bounds"] = [list(b) for b in self.bounds]
        else:
            d["r_in"] = self.r_in
            d["r_out"] = self.r_out
        return d


def disk_chart(r_in=1e-3, r_out=1.0, nr=96, ntheta=128):
    return Chart(POLAR, r_in=r_in, r_out=r_out, res=(nr, ntheta))


def annulus4d_chart(r_in=0.25, r_out=1.0, nr=16, nchi=10, ntheta=10, nphi=12):
    return Chart(RADIAL4D, r_in=r_in, r_out=r_out, res=(nr, nchi, ntheta, nphi))


def box_chart(bounds, res):
    return Chart(BOX, bounds=tuple(tuple(b) for b in bounds), res=tuple(res))
