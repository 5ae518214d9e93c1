"""Second fundamental form, mean and Weingarten curvature, energy, diagnostics.

Conventions on a conformal chart with parameter lam and unit frame e1, e2:
the frame-scaled second fundamental form vectors are
h_ij = e^{-2 lam} pi_n (d2 Phi / dx_i dx_j); the mean curvature vector is
evaluated un-projected as H = e^{-2 lam} Lap Phi / 2 (its tangential part is
a conformality diagnostic), and the Weingarten vector as
H0 = 2 e^{-2 lam} (dzz Phi - 2 dz(lam) dz Phi).  The Gauss curvature comes
from <h11, h22> - <h12, h12>, which feeds the Liouville residual
Lap u + e^{2 lam} K.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from willmore.grid import PolarGrid, annulus_norms, integrate, laplacian
from willmore.surface import (FrameField, ImmersionField,
                              gauss_map_gradient_norm, normal_projector)


@dataclass(eq=False)
class CurvatureField:
    grid: PolarGrid
    lam: np.ndarray
    h11: np.ndarray
    h12: np.ndarray
    h22: np.ndarray
    H: np.ndarray          # real normal vector per node (un-projected evaluation)
    H0: np.ndarray         # complex normal vector per node
    K: np.ndarray
    energy_density: np.ndarray  # |H|^2 e^{2 lam}

    def H_norm(self) -> np.ndarray:
        return np.linalg.norm(self.H, axis=-1)


def curvature(field: ImmersionField, frame: FrameField) -> CurvatureField:
    if frame.e1 is None:
        raise ValueError("frame_and_gauss must run before curvature")
    d1 = field.gradient()
    d2 = field.hessian()
    p1, p2 = d1[0], d1[1]
    pxx, pxy, pyy = d2[0], d2[1], d2[2]
    e2l = np.exp(2.0 * frame.lam)[..., None]
    pi_n = normal_projector(frame)

    h11 = pi_n(pxx) / e2l
    h12 = pi_n(pxy) / e2l
    h22 = pi_n(pyy) / e2l

    H = 0.5 * (pxx + pyy) / e2l

    dz_phi = 0.5 * (p1 - 1j * p2)
    dzz_phi = 0.25 * (pxx - pyy - 2j * pxy)
    lam_x = np.sum(p1 * pxx + p2 * pxy, axis=-1, keepdims=True) / (2.0 * e2l)
    lam_y = np.sum(p1 * pxy + p2 * pyy, axis=-1, keepdims=True) / (2.0 * e2l)
    dz_lam = 0.5 * (lam_x - 1j * lam_y)
    H0 = 2.0 * (dzz_phi - 2.0 * dz_lam * dz_phi) / e2l

    K = np.sum(h11 * h22, axis=-1) - np.sum(h12 * h12, axis=-1)
    density = np.sum(H * H, axis=-1) * e2l[..., 0]
    return CurvatureField(field.grid, frame.lam, h11, h12, h22, H, H0, K, density)


def willmore_energy(curv: CurvatureField, r_lo=None, r_hi=None) -> float:
    """Integral of |H|^2 over the annulus in the induced area element."""
    return integrate(curv.grid, curv.energy_density, r_lo, r_hi)


def bending_energy_density(curv: CurvatureField) -> np.ndarray:
    """|II|^2_g in the induced metric times the area factor e^{2 lam}."""
    sq = (np.sum(curv.h11 ** 2, axis=-1) + 2.0 * np.sum(curv.h12 ** 2, axis=-1)
          + np.sum(curv.h22 ** 2, axis=-1))
    return sq * np.exp(2.0 * curv.lam)


def gauss_map_energy_density(frame: FrameField) -> np.ndarray:
    """|grad n|^2 from the sampled Gauss map (flat measure)."""
    return gauss_map_gradient_norm(frame) ** 2


def tangential_H_defect(curv: CurvatureField, frame: FrameField) -> float:
    """max |pi_T H| / max(|H|, eps): vanishes on exactly conformal input."""
    pi_n = normal_projector(frame)
    tang = curv.H - pi_n(curv.H)
    scale = max(float(np.max(np.linalg.norm(curv.H, axis=-1))), 1e-30)
    return float(np.max(np.linalg.norm(tang, axis=-1))) / scale


def gauss_bonnet_check(curv: CurvatureField, frame: FrameField,
                       r_lo=None, r_hi=None) -> dict:
    """Liouville residual Lap u + e^{2 lam} K on the annulus.

    This is the computable local form of the Gauss-Bonnet identity; it needs
    the regular conformal part u from the branch-order analysis.
    """
    if frame.u is None:
        raise ValueError("branch order analysis must fill frame.u first")
    res = laplacian(curv.grid, frame.u) + np.exp(2.0 * curv.lam) * curv.K
    return annulus_norms(curv.grid, res, r_lo, r_hi)


def delta_profile(frame: FrameField) -> dict:
    """delta(r) = r max_theta |grad n| per circle, plus int delta^2 dr/r."""
    gn = gauss_map_gradient_norm(frame)
    delta = frame.grid.r * np.max(gn, axis=1)
    total = float(np.trapezoid(delta ** 2, frame.grid.s))
    return {"r": frame.grid.r, "delta": delta, "square_integral": total}


def gauss_curvature_from_liouville(frame: FrameField) -> np.ndarray:
    """K via -Lap u = e^{2 lam} K; cross-validates the det(II) route."""
    if frame.u is None:
        raise ValueError("branch order analysis must fill frame.u first")
    return -laplacian(frame.grid, frame.u) * np.exp(-2.0 * frame.lam)


def weingarten_constant(curv: CurvatureField, frame: FrameField,
                        trim: float = 0.1) -> float:
    """Measured best constant in e^lam |H0| <= c |grad n| (c <= 2 expected)."""
    lhs = np.exp(curv.lam) * np.linalg.norm(curv.H0, axis=-1)
    rhs = gauss_map_gradient_norm(frame)
    k = max(2, int(round(trim * curv.grid.n_r)))
    sl = slice(k, -k)
    ratio = lhs[sl] / np.maximum(rhs[sl], 1e-30)
    keep = rhs[sl] > 1e-12 * max(float(np.max(rhs)), 1e-30)
    return float(np.max(ratio[keep])) if np.any(keep) else 0.0
