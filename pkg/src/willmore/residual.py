"""Constrained Willmore equation in strong and divergence form.

Strong form residual (zero exactly for a constrained Willmore immersion;
reduces to the classical Delta_g H + 2 H (H^2 - K) = 0 in codimension one):

    e^{-2 lam} pi_n div(pi_n grad H) + 2 Re((H.H0*) H0) - e^{-2 lam} Re(H0 f).

Divergence form: with the conventions used throughout this package
(H0 = 2 dz(e^{-lam} e_z), n = star(e1 ^ e2)) the flux

    X_raw = grad H - 3 pi_n grad H + star(grad_perp n ^ H)
            + e^{-2 lam} M_f grad_perp Phi

is divergence free away from the puncture exactly when the strong form
vanishes, and the two sides obey the pointwise algebraic identity

    strong form = -(e^{-2 lam} / 2) div X_raw

for every conformal immersion (solution or not); ``equivalence_check``
verifies it discretely, together with dz(e^{-2 lam} f dz Phi) = H0 f / 2.
The circulation of X_raw over any centered circle is 4 pi beta0, and
X = X_raw - 2 beta0 grad log|x| has vanishing circulation, consistently
with the mean curvature growing like -beta0 log|z| at the puncture.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from willmore.curvature import CurvatureField
from willmore.grid import (PolarGrid, annulus_norms, circulation, div, dz,
                           grad)
from willmore.multivec import MultiVec, hodge_star, wedge
from willmore.surface import FrameField, ImmersionField, normal_projector


@dataclass(eq=False)
class FluxField:
    grid: PolarGrid
    raw: np.ndarray                 # (2, n_r, n_theta, m), no beta0 correction
    X: np.ndarray                   # raw - 2 beta0 grad log|x| (== raw if beta0 None)
    beta0: Optional[np.ndarray]
    div_defect: np.ndarray          # div raw per node, (n_r, n_theta, m)

    def div_norms(self, r_lo=None, r_hi=None) -> dict:
        return annulus_norms(self.grid, self.div_defect, r_lo, r_hi)

    def circulations(self) -> np.ndarray:
        """(n_r, m) flux integrals of X over the grid circles."""
        return circulation(self.grid, self.X[0], self.X[1])


def _star_wedge_with_H(frame: FrameField, comp: np.ndarray,
                       H: np.ndarray) -> np.ndarray:
    m = H.shape[-1]
    nv = MultiVec(m, m - 2, comp)
    return hodge_star(wedge(nv, MultiVec.vector(m, H))).coeffs


def _grad_H_terms(curv: CurvatureField, frame: FrameField):
    grid = curv.grid
    pi_n = normal_projector(frame)
    Hx, Hy = grad(grid, curv.H)
    nx, ny = grad(grid, frame.n.coeffs)
    return pi_n, Hx, Hy, nx, ny


def strong_residual(curv: CurvatureField, frame: FrameField,
                    f_field: Optional[np.ndarray] = None,
                    r_lo=None, r_hi=None) -> dict:
    """Nodewise strong-form residual and its annulus norms."""
    grid = curv.grid
    pi_n, Hx, Hy, _, _ = _grad_H_terms(curv, frame)
    e2l = np.exp(2.0 * frame.lam)[..., None]
    lap_perp = pi_n(div(grid, pi_n(Hx), pi_n(Hy))) / e2l
    cross = 2.0 * np.real(np.sum(curv.H * np.conj(curv.H0), axis=-1)[..., None]
                          * curv.H0)
    res = lap_perp + cross
    if f_field is not None:
        res = res - np.real(curv.H0 * f_field[..., None]) / e2l
    return {"field": res, "norms": annulus_norms(grid, res, r_lo, r_hi)}


def flux(curv: CurvatureField, frame: FrameField,
         f_field: Optional[np.ndarray] = None,
         M_f: Optional[np.ndarray] = None,
         beta0: Optional[np.ndarray] = None,
         field: Optional[ImmersionField] = None) -> FluxField:
    """Divergence-form flux X_raw, optionally corrected by a known beta0.

    With f == 0 the multiplier term is skipped entirely, so the flux reduces
    bitwise to the plain Willmore flux.
    """
    grid = curv.grid
    pi_n, Hx, Hy, nx, ny = _grad_H_terms(curv, frame)
    raw_x = Hx - 3.0 * pi_n(Hx) + _star_wedge_with_H(frame, -ny, curv.H)
    raw_y = Hy - 3.0 * pi_n(Hy) + _star_wedge_with_H(frame, nx, curv.H)

    if M_f is not None and f_field is not None and np.any(f_field):
        if field is None:
            raise ValueError("the immersion field is needed for the M_f term")
        d1 = field.gradient()
        perp = (-d1[1], d1[0])  # grad_perp Phi
        e2l = np.exp(2.0 * frame.lam)[..., None]
        raw_x = raw_x + (M_f[..., 0, 0, None] * perp[0]
                         + M_f[..., 0, 1, None] * perp[1]) / e2l
        raw_y = raw_y + (M_f[..., 1, 0, None] * perp[0]
                         + M_f[..., 1, 1, None] * perp[1]) / e2l

    raw = np.stack([raw_x, raw_y])
    X = raw
    if beta0 is not None:
        beta0 = np.asarray(beta0, dtype=float)
        r2 = (grid.rr ** 2)[..., None]
        X = np.stack([raw_x - 2.0 * beta0 * grid.x[..., None] / r2,
                      raw_y - 2.0 * beta0 * grid.y[..., None] / r2])
    defect = div(grid, raw[0], raw[1])
    return FluxField(grid, raw, X, beta0, defect)


def equivalence_check(curv: CurvatureField, frame: FrameField,
                      f_field: Optional[np.ndarray] = None,
                      M_f: Optional[np.ndarray] = None,
                      field: Optional[ImmersionField] = None,
                      r_lo=None, r_hi=None) -> dict:
    """Discrete defect of strong form + (e^{-2 lam}/2) div(flux bracket), and
    of the anti-holomorphy identity dz(e^{-2 lam} f dz Phi) = H0 f / 2."""
    grid = curv.grid
    strong = strong_residual(curv, frame, f_field, r_lo, r_hi)["field"]
    fl = flux(curv, frame, f_field, M_f, beta0=None, field=field)
    e2l = np.exp(2.0 * frame.lam)[..., None]
    dform = 0.5 * div(grid, fl.raw[0], fl.raw[1]) / e2l
    gap = strong + dform
    out = {"identity_norms": annulus_norms(grid, gap, r_lo, r_hi)}
    if f_field is not None and field is not None and np.any(f_field):
        d1 = field.gradient()
        dz_phi = 0.5 * (d1[0] - 1j * d1[1])
        lhs = dz(grid, f_field[..., None] * dz_phi / e2l)
        rhs = 0.5 * curv.H0 * f_field[..., None]
        out["antiholomorphy_norms"] = annulus_norms(grid, lhs - rhs, r_lo, r_hi)
    return out
