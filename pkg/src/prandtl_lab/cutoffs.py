"""Cut-off functions separating the monotone region from the critical strip,
and the cancellation (auxiliary) functions built on them.

chi1 kills the critical strip (it vanishes on [y0-5d/4, y0+5d/4] and is 1
outside [y0-3d/2, y0+3d/2]); chi2 covers it (1 on [y0-3d/2, y0+3d/2],
supported in [y0-7d/4, y0+7d/4]); psi is 1 on [0, y0+2d] and tapers over one
extra delta.  The interlocking support identities

    chi1' = chi1' chi2,   chi2' = chi2' chi1,   (1 - chi2) = (1 - chi2) chi1

hold exactly at the nodes because each plateau is evaluated on its own
branch.  All cut-off derivatives are analytic; nothing differentiates a
cut-off numerically.

For tangential order m the cancellation functions are

    f_m = chi1 * (dx^m omega - a dx^m u),      a = (d_y omega_tot)/(omega_tot)
    h_m = chi2 * (dx^m d_y omega - b dx^m omega),
                                b = (d_y^2 omega_tot)/(d_y omega_tot)
    g_m = dx^(m-1) [ omega_tot dx omega - (d_y omega_tot) dx u ]

with omega_tot = omega^s + omega; gtilde_m keeps the top derivative outside
the bracket, fhat/ghat variants as coded.  Quotients are evaluated from the
difference forms only where their denominators are safely bounded away from
zero; the supports of the cut-offs guarantee that on every node where the
quotient is actually used.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .bump import window, window_d1, window_d2
from .grid import Field, Grid2D, clean_spectrum, dx_m, dx_m_spec, dy_j
from .shear import ShearState

__all__ = ["CutoffSet", "AuxBundle", "build_cutoffs", "AuxWorkspace", "aux_bundle",
           "aux_f", "aux_h", "aux_g", "aux_g_hat", "DenominatorFloorError"]


class DenominatorFloorError(ValueError):
    """A cancellation-function denominator dipped below its floor."""


@dataclass
class CutoffSet:
    y0: float
    delta: float
    chi1: np.ndarray
    dchi1: np.ndarray
    d2chi1: np.ndarray
    chi2: np.ndarray
    dchi2: np.ndarray
    d2chi2: np.ndarray
    psi: np.ndarray
    dpsi: np.ndarray
    d2psi: np.ndarray


def build_cutoffs(grid: Grid2D, y0: float, delta: float) -> CutoffSet:
    if not (0.0 < delta < y0 / 2.0):
        raise ValueError(f"delta must lie in (0, y0/2), got {delta}")
    if y0 + 3.0 * delta >= grid.Ymax:
        raise ValueError("outer psi band [y0+2d, y0+3d] does not fit below Ymax")
    y = grid.y_nodes
    d = delta

    w_args = (y0 - 1.5 * d, y0 - 1.25 * d, y0 + 1.25 * d, y0 + 1.5 * d)
    chi1 = 1.0 - window(y, *w_args)
    dchi1 = -window_d1(y, *w_args)
    d2chi1 = -window_d2(y, *w_args)

    c2_args = (y0 - 1.75 * d, y0 - 1.5 * d, y0 + 1.5 * d, y0 + 1.75 * d)
    chi2 = window(y, *c2_args)
    dchi2 = window_d1(y, *c2_args)
    d2chi2 = window_d2(y, *c2_args)

    p_args = (0.0, 0.0, y0 + 2.0 * d, y0 + 3.0 * d)
    psi = window(y, *p_args)
    dpsi = window_d1(y, *p_args)
    d2psi = window_d2(y, *p_args)

    return CutoffSet(y0=y0, delta=delta, chi1=chi1, dchi1=dchi1, d2chi1=d2chi1,
                     chi2=chi2, dchi2=dchi2, d2chi2=d2chi2,
                     psi=psi, dpsi=dpsi, d2psi=d2psi)


@dataclass
class AuxBundle:
    m: int
    f_m: Field
    ftilde_m: Field
    h_m: Field
    g_m: Field
    gtilde_m: Field
    ghat_m: Field

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["name", "max_abs", "shape"])
            for name in ("f_m", "ftilde_m", "h_m", "g_m", "gtilde_m", "ghat_m"):
                fld = getattr(self, name)
                w.writerow([f"{name}{self.m}", np.max(np.abs(fld.values)), fld.values.shape])


def _masked_quotient(num: np.ndarray, den: np.ndarray, support: np.ndarray,
                     floor: float, what: str, grid: Grid2D) -> np.ndarray:
    """num/den, zeroed where |den| is below a hair floor; rejects when the
    denominator dips under `floor` on the nodes where the quotient is used."""
    used = np.abs(den[:, support]).min(axis=0) if support.any() else np.array([np.inf])
    if support.any():
        worst = float(used.min())
        if worst < floor:
            jrel = int(np.argmin(used))
            jy = np.where(support)[0][jrel]
            raise DenominatorFloorError(
                f"{what}: |denominator| = {worst:.3e} < floor {floor:.3e} "
                f"at y = {grid.y_nodes[jy]:.4f} (node {jy})")
    hair = 1e-9 * max(float(np.max(np.abs(den))), 1e-30)
    safe = np.abs(den) > hair
    out = np.zeros_like(num)
    np.divide(num, den, out=out, where=safe)
    return out


class AuxWorkspace:
    """Precomputed derivative fields and quotient coefficients for one
    (u, shear state, cut-off) triple; all aux functions read from here."""

    def __init__(self, u: Field, state: ShearState, cut: CutoffSet | None,
                 floor_f: float = 1e-8, floor_h: float = 1e-8):
        g = u.grid
        self.grid = g
        self.u = u
        self.state = state
        self.cut = cut
        self.omega = dy_j(u, 1)
        self.dyomega = dy_j(self.omega, 1)
        self.d2yomega = dy_j(self.omega, 2)
        self.om_tot = state.omegas[None, :] + self.omega.values
        self.dyom_tot = state.dj_omegas[0][None, :] + self.dyomega.values
        self.d2yom_tot = state.dj_omegas[1][None, :] + self.d2yomega.values
        self.spec_u = clean_spectrum(np.fft.rfft(u.values, axis=0))
        self.spec_om = clean_spectrum(np.fft.rfft(self.omega.values, axis=0))
        self.spec_dyom = clean_spectrum(np.fft.rfft(self.dyomega.values, axis=0))
        if cut is not None:
            self.a = _masked_quotient(self.dyom_tot, self.om_tot, cut.chi1 > 0.0,
                                      floor_f, "aux_f coefficient (omega^s+omega)", g)
            self.b = _masked_quotient(self.d2yom_tot, self.dyom_tot, cut.chi2 > 0.0,
                                      floor_h, "aux_h coefficient (d_y omega^s + d_y omega)", g)
        g1 = self.om_tot * dx_m(self.omega, 1).values - self.dyom_tot * dx_m(u, 1).values
        self.spec_g1 = clean_spectrum(np.fft.rfft(g1, axis=0))

    def dxu(self, m: int) -> Field:
        return dx_m_spec(self.grid, self.spec_u, m)

    def dxom(self, m: int) -> Field:
        return dx_m_spec(self.grid, self.spec_om, m)

    def dxdyom(self, m: int) -> Field:
        return dx_m_spec(self.grid, self.spec_dyom, m)

    def f(self, m: int) -> Field:
        q = self.dxom(m).values - self.a * self.dxu(m).values
        return Field(self.grid, self.cut.chi1[None, :] * q)

    def ftilde(self, m: int) -> Field:
        q = self.dxom(m).values - self.a * self.dxu(m).values
        return Field(self.grid, self.cut.dchi1[None, :] * q)

    def h(self, m: int) -> Field:
        q = self.dxdyom(m).values - self.b * self.dxom(m).values
        return Field(self.grid, self.cut.chi2[None, :] * q)

    def g(self, m: int) -> Field:
        if m < 1:
            raise ValueError("g_m requires m >= 1")
        return dx_m_spec(self.grid, self.spec_g1, m - 1)

    def gtilde(self, m: int) -> Field:
        vals = self.om_tot * self.dxom(m).values - self.dyom_tot * self.dxu(m).values
        return Field(self.grid, vals)

    def ghat(self, m: int, floor: float = 1e-8) -> Field:
        cut = self.cut
        gt = self.gtilde(m)
        plateau = cut.psi >= 1.0
        off = ~plateau
        if off.any():
            worst = float(np.min(np.abs(self.om_tot[:, off])))
            if worst < floor:
                raise DenominatorFloorError(
                    f"ghat: |omega^s+omega| = {worst:.3e} < floor {floor:.3e} "
                    "outside the psi plateau")
        quot = np.zeros_like(self.om_tot)
        np.divide(self.dyom_tot, self.om_tot, out=quot,
                  where=np.abs(self.om_tot) > 0.5 * floor)
        pref = cut.psi[None, :] * self.om_tot + (1.0 - cut.psi)[None, :]
        raw = pref * (self.dxom(m).values - quot * self.dxu(m).values)
        vals = np.where(plateau[None, :], gt.values, raw)
        return Field(self.grid, vals)

    def chi2_dyom(self, m: int) -> Field:
        return Field(self.grid, self.cut.chi2[None, :] * self.dxdyom(m).values)


def aux_bundle(m: int, u: Field, state: ShearState, cut: CutoffSet) -> AuxBundle:
    """All six cancellation functions of one tangential order."""
    ws = AuxWorkspace(u, state, cut)
    return AuxBundle(m=m, f_m=ws.f(m), ftilde_m=ws.ftilde(m), h_m=ws.h(m),
                     g_m=ws.g(m), gtilde_m=ws.gtilde(m), ghat_m=ws.ghat(m))


def aux_f(m: int, u: Field, state: ShearState, cut: CutoffSet,
          floor: float = 1e-8) -> tuple[Field, Field]:
    """(f_m, ftilde_m) from the difference form; rejects on denominator floor."""
    if m < 1:
        raise ValueError("aux functions require m >= 1")
    ws = AuxWorkspace(u, state, cut, floor_f=floor)
    return ws.f(m), ws.ftilde(m)


def aux_h(m: int, u: Field, state: ShearState, cut: CutoffSet,
          floor: float = 1e-8) -> Field:
    if m < 1:
        raise ValueError("aux functions require m >= 1")
    ws = AuxWorkspace(u, state, cut, floor_h=floor)
    return ws.h(m)


def aux_g(m: int, u: Field, state: ShearState) -> tuple[Field, Field]:
    if m < 1:
        raise ValueError("aux functions require m >= 1")
    ws = AuxWorkspace(u, state, None)
    return ws.g(m), ws.gtilde(m)


def aux_g_hat(m: int, u: Field, state: ShearState, cut: CutoffSet,
              floor: float = 1e-8) -> Field:
    if m < 1:
        raise ValueError("aux functions require m >= 1")
    ws = AuxWorkspace(u, state, cut)
    return ws.ghat(m, floor=floor)
