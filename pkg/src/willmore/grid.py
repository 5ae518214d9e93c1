"""Exponential-polar grids on the punctured disk and discrete calculus.

Nodes live at radii geometrically spaced between r_min and r_max (uniform
in s = log r) and uniformly spaced angles on [0, 2pi).  The origin is never
a node.  Angular derivatives are spectral (trigonometric interpolation),
radial derivatives are second-order centered differences in s.  Cartesian
operators are assembled from the polar ones; second derivatives compose
first-derivative passes.

Field arrays are shaped (n_r, n_theta, ...) with arbitrary trailing axes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(eq=False)
class PolarGrid:
    r_min: float
    r_max: float = 1.0
    n_r: int = 64
    n_theta: int = 128

    def __post_init__(self):
        if not 0.0 < self.r_min < self.r_max <= 1.0:
            raise ValueError("need 0 < r_min < r_max <= 1")
        if self.n_r < 16:
            raise ValueError("n_r must be at least 16")
        if self.n_theta < 32 or self.n_theta % 2:
            raise ValueError("n_theta must be even and at least 32")

    @cached_property
    def s(self) -> np.ndarray:
        return np.linspace(np.log(self.r_min), np.log(self.r_max), self.n_r)

    @cached_property
    def r(self) -> np.ndarray:
        return np.exp(self.s)

    @cached_property
    def theta(self) -> np.ndarray:
        return np.arange(self.n_theta) * (2.0 * np.pi / self.n_theta)

    @property
    def ds(self) -> float:
        return (np.log(self.r_max) - np.log(self.r_min)) / (self.n_r - 1)

    @property
    def dtheta(self) -> float:
        return 2.0 * np.pi / self.n_theta

    @cached_property
    def rr(self) -> np.ndarray:
        """Radius per node, shape (n_r, n_theta)."""
        return np.broadcast_to(self.r[:, None], (self.n_r, self.n_theta))

    @cached_property
    def tt(self) -> np.ndarray:
        return np.broadcast_to(self.theta[None, :], (self.n_r, self.n_theta))

    @cached_property
    def x(self) -> np.ndarray:
        return self.rr * np.cos(self.tt)

    @cached_property
    def y(self) -> np.ndarray:
        return self.rr * np.sin(self.tt)

    @cached_property
    def z(self) -> np.ndarray:
        return self.x + 1j * self.y

    def refined(self, factor: int = 2) -> "PolarGrid":
        return PolarGrid(self.r_min, self.r_max,
                         (self.n_r - 1) * factor + 1, self.n_theta * factor)

    def to_json(self) -> dict:
        return {"r_min": self.r_min, "r_max": self.r_max,
                "n_r": self.n_r, "n_theta": self.n_theta}

    @staticmethod
    def from_json(d: dict) -> "PolarGrid":
        return PolarGrid(float(d["r_min"]), float(d.get("r_max", 1.0)),
                         int(d["n_r"]), int(d["n_theta"]))


def _trail(a: np.ndarray, field: np.ndarray) -> np.ndarray:
    """Broadcast a (n_r, n_theta) factor over the trailing axes of field."""
    return a.reshape(a.shape + (1,) * (field.ndim - 2))


def dtheta(grid: PolarGrid, f: np.ndarray) -> np.ndarray:
    """Spectral d/dtheta along axis 1."""
    n = grid.n_theta
    fh = np.fft.fft(f, axis=1)
    k = np.fft.fftfreq(n, d=1.0 / n)
    k[n // 2] = 0.0  # drop the unpaired Nyquist mode for odd derivatives
    shape = [1, n] + [1] * (f.ndim - 2)
    out = np.fft.ifft(fh * (1j * k).reshape(shape), axis=1)
    if not np.iscomplexobj(f):
        out = out.real
    return out


def ds(grid: PolarGrid, f: np.ndarray) -> np.ndarray:
    """Second-order d/ds (s = log r) along axis 0, one-sided at the ends."""
    h = grid.ds
    out = np.empty_like(f, dtype=np.result_type(f, float))
    out[1:-1] = (f[2:] - f[:-2]) / (2 * h)
    out[0] = (-3 * f[0] + 4 * f[1] - f[2]) / (2 * h)
    out[-1] = (3 * f[-1] - 4 * f[-2] + f[-3]) / (2 * h)
    return out


def dss(grid: PolarGrid, f: np.ndarray) -> np.ndarray:
    """Second-order d2/ds2 along axis 0."""
    h2 = grid.ds ** 2
    out = np.empty_like(f, dtype=np.result_type(f, float))
    out[1:-1] = (f[2:] - 2 * f[1:-1] + f[:-2]) / h2
    out[0] = (2 * f[0] - 5 * f[1] + 4 * f[2] - f[3]) / h2
    out[-1] = (2 * f[-1] - 5 * f[-2] + 4 * f[-3] - f[-4]) / h2
    return out


def dr(grid: PolarGrid, f: np.ndarray) -> np.ndarray:
    return ds(grid, f) / _trail(grid.rr, f)


def grad(grid: PolarGrid, f: np.ndarray):
    """Cartesian gradient (d/dx1, d/dx2) of a node field."""
    fr = dr(grid, f)
    ft_over_r = dtheta(grid, f) / _trail(grid.rr, f)
    c = _trail(np.cos(grid.tt), f)
    s = _trail(np.sin(grid.tt), f)
    return c * fr - s * ft_over_r, s * fr + c * ft_over_r


def div(grid: PolarGrid, vx: np.ndarray, vy: np.ndarray) -> np.ndarray:
    gx, _ = grad(grid, vx)
    _, gy = grad(grid, vy)
    return gx + gy


def laplacian(grid: PolarGrid, f: np.ndarray) -> np.ndarray:
    """Polar-exponential Laplacian e^{-2s} (f_ss + f_thth)."""
    ftt = dtheta(grid, dtheta(grid, f))
    return (dss(grid, f) + ftt) / _trail(grid.rr ** 2, f)


def dz(grid: PolarGrid, f: np.ndarray) -> np.ndarray:
    """Wirtinger derivative (d/dx1 - i d/dx2)/2."""
    gx, gy = grad(grid, f)
    return 0.5 * (gx - 1j * gy)


def dzbar(grid: PolarGrid, f: np.ndarray) -> np.ndarray:
    gx, gy = grad(grid, f)
    return 0.5 * (gx + 1j * gy)


# -- circle and annulus reductions -------------------------------------------

def circle_mean(f: np.ndarray) -> np.ndarray:
    """Average over the angular axis; exact on trigonometric polynomials."""
    return np.mean(f, axis=1)


def circulation(grid: PolarGrid, vx: np.ndarray, vy: np.ndarray) -> np.ndarray:
    """Outward flux integral of (vx, vy) through each grid circle."""
    c = _trail(np.cos(grid.tt), vx)
    s = _trail(np.sin(grid.tt), vx)
    nu_dot = c * vx + s * vy
    return 2.0 * np.pi * _trail(grid.r[:, None], vx)[:, 0] * circle_mean(nu_dot)


def annulus_mask(grid: PolarGrid, r_lo=None, r_hi=None, trim: float = 0.1) -> np.ndarray:
    """Radial index mask; trims a fraction of indices at both radial rims."""
    lo = grid.r_min if r_lo is None else r_lo
    hi = grid.r_max if r_hi is None else r_hi
    mask = (grid.r >= lo) & (grid.r <= hi)
    if trim > 0:
        k = max(2, int(round(trim * grid.n_r)))
        mask[:k] = False
        mask[-k:] = False
    return mask


def annulus_norms(grid: PolarGrid, f: np.ndarray, r_lo=None, r_hi=None,
                  trim: float = 0.1) -> dict:
    """Max and rms of |f| over the (trimmed) annulus; trailing axes pooled."""
    mask = annulus_mask(grid, r_lo, r_hi, trim)
    vals = np.abs(np.asarray(f)[mask])
    if vals.ndim > 2:
        vals = np.sqrt(np.sum(vals ** 2, axis=tuple(range(2, vals.ndim))))
    return {"max": float(np.max(vals)), "rms": float(np.sqrt(np.mean(vals ** 2)))}


def integrate(grid: PolarGrid, f: np.ndarray, r_lo=None, r_hi=None) -> float:
    """Integral of a scalar node field over an annulus, dx = r^2 ds dtheta.

    Periodic trapezoid in theta; endpoint-corrected trapezoid in s
    (fourth order for smooth radial profiles).
    """
    mask = annulus_mask(grid, r_lo, r_hi, trim=0.0)
    s = grid.s[mask]
    ring = np.mean(f[mask], axis=1) * 2.0 * np.pi * np.exp(2.0 * s)
    total = float(np.trapezoid(ring, s))
    if len(s) >= 6:
        h = s[1] - s[0]
        w = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / (12.0 * h)
        d_lo = float(w @ ring[:5])
        d_hi = float(-w @ ring[-1:-6:-1])
        total -= h * h / 12.0 * (d_hi - d_lo)
    return total


def fit_order(hs, errs) -> float:
    """Least-squares slope of log err against log h."""
    hs = np.asarray(hs, dtype=float)
    errs = np.asarray(errs, dtype=float)
    keep = errs > 0
    if keep.sum() < 2:
        return np.inf
    return float(np.polyfit(np.log(hs[keep]), np.log(errs[keep]), 1)[0])


def loglog_slope(x, y) -> float:
    return fit_order(x, y)
