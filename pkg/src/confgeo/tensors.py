"""Curvature algebra on metric jets.

Every function here is plain einsum arithmetic on arrays whose *trailing*
axes are tensor indices (leading axes, if any, are batch axes).  Jets carry
their derivative axes last: ``dg[..., i, j, a] = d_a g_ij`` and
``d2g[..., i, j, a, b] = d_b d_a g_ij``.

Index conventions, fixed once for the whole package:

* ``R^r_{smn} = d_m Gam^r_{ns} - d_n Gam^r_{ms} + Gam^r_{ml} Gam^l_{ns}
  - Gam^r_{nl} Gam^l_{ms}``  (the ``[nabla_m, nabla_n]`` commutator),
* ``Riem_{rsmn} = g_{rl} R^l_{smn}``, so the unit round sphere has
  ``Riem_{rsmn} = g_{rm} g_{sn} - g_{rn} g_{sm}``,
* ``Ric_{sn} = R^m_{smn}``  (positive on spheres),
* covariant-derivative slots are appended last:
  ``(nabla T)[..., c1..ck, a] = nabla_a T_{c1..ck}``.

The same code runs under numpy (batched, sampled path) and jax.numpy
(per-point, exact-jet path); pass the namespace as ``xp``.
"""

from __future__ import annotations

import string

import numpy as np

_LETTERS = string.ascii_lowercase


def inverse(g, xp=np):
    return xp.linalg.inv(g)


def christoffel(gi, dg, xp=np):
    """Gam[..., m, i, j] = Gam^m_ij."""
    return 0.5 * (
        xp.einsum("...mk,...jki->...mij", gi, dg)
        + xp.einsum("...mk,...ikj->...mij", gi, dg)
        - xp.einsum("...mk,...ijk->...mij", gi, dg)
    )


def christoffel_jet(g, gi, dg, d2g, xp=np):
    """d_a Gam^m_ij, axis order [..., m, i, j, a]."""
    dgi = -xp.einsum("...mp,...pqa,...qk->...mka", gi, dg, gi)
    sym = _sym_dg(d2g, xp)
    first = 0.5 * (
        xp.einsum("...mka,...jki->...mija", dgi, dg)
        + xp.einsum("...mka,...ikj->...mija", dgi, dg)
        - xp.einsum("...mka,...ijk->...mija", dgi, dg)
    )
    second = 0.5 * xp.einsum("...mk,...ijka->...mija", gi, sym)
    return first + second


def _perm(t, perm, xp):
    nb = t.ndim - len(perm)
    return xp.transpose(t, tuple(range(nb)) + tuple(nb + p for p in perm))


def _sym_dg(d2g, xp):
    # (d_i g_jk + d_j g_ik - d_k g_ij) differentiated once more by a:
    # d2g[..., i, j, a, b] = d_b d_a g_ij
    t1 = _perm(d2g, (2, 0, 1, 3), xp)  # [..., i, j, k, a] = d_a d_i g_jk
    t2 = _perm(d2g, (2, 1, 0, 3), xp)  # d_a d_j g_ik
    t3 = _perm(d2g, (0, 1, 2, 3), xp)  # d_a d_k g_ij
    return t1 + t2 - t3


def riemann_down(g, gi, dg, d2g, xp=np):
    """Riem[..., r, s, m, n] with all indices lowered."""
    gam = christoffel(gi, dg, xp)
    dgam = christoffel_jet(g, gi, dg, d2g, xp)  # [..., r, i, j, a] = d_a Gam^r_ij
    rup = xp.einsum("...rnsm->...rsmn", dgam) - xp.einsum("...rmsn->...rsmn", dgam)
    rup = rup + xp.einsum("...rml,...lns->...rsmn", gam, gam) - xp.einsum("...rnl,...lms->...rsmn", gam, gam)
    return xp.einsum("...rl,...lsmn->...rsmn", g, rup)


def ricci(gi, riem, xp=np):
    return xp.einsum("...mr,...rsmn->...sn", gi, riem)


def scal(gi, ric, xp=np):
    return xp.einsum("...sn,...sn->...", gi, ric)


def schouten(g, ric, scal_, xp=np):
    """dim 4: Sch = (Ric - Scal/6 g)/2, J = Scal/6."""
    return 0.5 * (ric - scal_[..., None, None] / 6.0 * g), scal_ / 6.0


def kulkarni_nomizu(a, b, xp=np):
    return (
        xp.einsum("...ik,...jl->...ijkl", a, b)
        + xp.einsum("...jl,...ik->...ijkl", a, b)
        - xp.einsum("...il,...jk->...ijkl", a, b)
        - xp.einsum("...jk,...il->...ijkl", a, b)
    )


def weyl(riem, sch, g, xp=np):
    return riem - kulkarni_nomizu(sch, g, xp)


def cov_deriv(gam, t, dt, rank, xp=np):
    """nabla of an all-lower rank-`rank` tensor; derivative axis appended last.

    dt[..., c1..ck, a] = d_a t_{c1..ck}.
    """
    out = dt
    if rank == 0:
        return out
    idx = _LETTERS[:rank]
    for s in range(rank):
        src = idx[:s] + "l" + idx[s + 1 :]
        out = out - xp.einsum(f"...l{idx[s]}z,...{src}->...{idx}z", gam, t)
    return out


def trace(gi, t, ax1, ax2, xp=np):
    """Contract two lower slots of t with g^{-1}. Slots are 0-based tensor axes."""
    rank = t.ndim - gi.ndim + 2
    idx = list(_LETTERS[:rank])
    out_idx = [c for k, c in enumerate(idx) if k not in (ax1, ax2)]
    s = f"...{idx[ax1]}{idx[ax2]},...{''.join(idx)}->...{''.join(out_idx)}"
    return xp.einsum(s, gi, t)


def norm_sq_lower(gi, t, rank, xp=np):
    """|T|_g^2 for an all-lower rank-`rank` tensor."""
    if rank == 0:
        return t * t
    a = _LETTERS[:rank]
    b = _LETTERS[rank : 2 * rank]
    gs = ",".join(f"...{x}{y}" for x, y in zip(a, b))
    s = f"{gs},...{a},...{b}->..."
    return xp.einsum(s, *([gi] * rank), t, t)


def raise_index(gi, t, slot, xp=np):
    rank = t.ndim - gi.ndim + 2
    idx = _LETTERS[:rank]
    out = idx[:slot] + "z" + idx[slot + 1 :]
    return xp.einsum(f"...z{idx[slot]},...{idx}->...{out}", gi, t)


def bach_from_parts(g, gi, sch, weyl_t, lap_sch, hess_j, xp=np):
    """Bach tensor by rearranging the Laplacian-of-Schouten identity:

    B_ij = (lap Sch)_ij - Hess_ij J - 4 Sch_i^p Sch_pj + |Sch|^2 g_ij
           + 2 Sch^{pk} W_{kipj}.
    """
    s_up1 = raise_index(gi, sch, 0, xp)  # Sch^p_j  (first slot raised)
    s2 = xp.einsum("...pi,...pj->...ij", s_up1, sch)
    nrm = norm_sq_lower(gi, sch, 2, xp)
    s_upup = xp.einsum("...pa,...kb,...ab->...pk", gi, gi, sch)
    wterm = xp.einsum("...pk,...kipj->...ij", s_upup, weyl_t)
    return lap_sch - hess_j - 4.0 * s2 + nrm[..., None, None] * g + 2.0 * wterm


def cotton(nabla_sch, xp=np):
    """Cot[..., i, j, k] = nabla_i Sch_jk - nabla_j Sch_ik."""
    ns = xp.einsum("...jki->...ijk", nabla_sch)  # nabla_i Sch_jk
    return ns - xp.einsum("...jik->...ijk", ns)


def bach_from_cotton(gi, nabla_cot, sch, weyl_t, xp=np):
    """Independent Bach route: B_ij = nabla^k Cot_kij + Sch^{kl} W_{kilj}."""
    div_cot = xp.einsum("...ka,...kija->...ij", gi, nabla_cot)
    s_upup = xp.einsum("...ka,...lb,...ab->...kl", gi, gi, sch)
    return div_cot + xp.einsum("...kl,...kilj->...ij", s_upup, weyl_t)
