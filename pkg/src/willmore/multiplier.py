"""The anti-holomorphic multiplier f, its matrix form, and derived fields.

f(zbar) = a_mu zbar^mu + f0(zbar) with integer mu >= -1, nonzero a_mu and a
polynomial tail f0 whose coefficients start at degree mu + 1 (so mu is the
exact leading order).  mu = -1 is the singular monomial a_{-1} / zbar.

The associated 2x2 matrix field is

    M_f = [[-Im f, Re f],
           [ Re f, Im f]],

symmetric and trace free by construction.  Degenerate branch data feed the
template field F_mu and the correction J satisfying
e^{-2 lam} f dz(Phi) = dzbar(F_mu) + J.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from willmore.grid import PolarGrid, annulus_norms, dz
from willmore.surface import FrameField, ImmersionField


class MultiplierError(ValueError):
    pass


@dataclass(frozen=True)
class MultiplierSpec:
    mu: int = 0
    a_mu: complex = 0.0
    f0: tuple = ()          # complex coefficients of zbar^0, zbar^1, ...
    zero: bool = False

    def __post_init__(self):
        object.__setattr__(self, "a_mu", complex(self.a_mu))
        object.__setattr__(self, "f0", tuple(complex(c) for c in self.f0))
        if self.zero:
            return
        if self.mu < -1:
            raise MultiplierError("multiplier order mu must be >= -1 "
                                  "(local integrability)")
        if self.a_mu == 0:
            raise MultiplierError("a_mu must be nonzero unless the multiplier "
                                  "is flagged zero")
        for d, c in enumerate(self.f0):
            if d <= self.mu and c != 0:
                raise MultiplierError(
                    f"f0 coefficient of zbar^{d} must vanish: mu = {self.mu} "
                    "is the leading order")

    @staticmethod
    def zero_spec() -> "MultiplierSpec":
        return MultiplierSpec(zero=True)

    @property
    def is_zero(self) -> bool:
        return self.zero

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        if self.zero:
            return np.zeros_like(np.asarray(z), dtype=complex)
        zb = np.conj(z)
        out = self.a_mu * zb ** self.mu if self.mu != 0 else \
            self.a_mu * np.ones_like(zb)
        for d, c in enumerate(self.f0):
            if c != 0:
                out = out + c * zb ** d
        return out

    # -- JSON wire format ----------------------------------------------------

    def to_json(self) -> dict:
        return {"mu": self.mu,
                "a_mu": [self.a_mu.real, self.a_mu.imag],
                "f0": [[c.real, c.imag] for c in self.f0],
                "zero": self.zero}

    @staticmethod
    def from_json(doc) -> "MultiplierSpec":
        if isinstance(doc, (str, bytes)):
            doc = json.loads(doc)
        if doc.get("zero", False):
            return MultiplierSpec.zero_spec()
        am = doc["a_mu"]
        return MultiplierSpec(
            mu=int(doc["mu"]),
            a_mu=complex(am[0], am[1]),
            f0=tuple(complex(c[0], c[1]) for c in doc.get("f0", [])),
        )


def matrix_field(f: np.ndarray) -> np.ndarray:
    """Per-node M_f, shape (..., 2, 2); symmetric trace-free by construction."""
    re, im = f.real, f.imag
    out = np.empty(f.shape + (2, 2))
    out[..., 0, 0] = -im
    out[..., 0, 1] = re
    out[..., 1, 0] = re
    out[..., 1, 1] = im
    return out


def sample_multiplier(spec: MultiplierSpec, grid: PolarGrid):
    """f values and the matrix field M_f on the grid nodes."""
    f = spec.evaluate(grid.z)
    return f, matrix_field(f)


def antiholomorphy_defect(spec: MultiplierSpec, grid: PolarGrid,
                          discrete: bool = False) -> float:
    """Relative norm of dz f (vanishes for a function of zbar alone).

    With analytic sampling (the default) f is evaluated on coordinate jets
    and the defect sits at rounding level; ``discrete=True`` instead applies
    the grid stencils to the sampled values, which is discretization-limited.
    """
    if discrete:
        f = spec.evaluate(grid.z)
        scale = max(float(np.max(np.abs(f))), 1e-30)
        return annulus_norms(grid, dz(grid, f))["max"] / scale
    from willmore.jets import Jet
    xj, yj = Jet.seed(grid.x, grid.y)
    zb = xj - 1j * yj  # conjugate coordinate jet
    out = Jet.const(np.zeros_like(grid.x, dtype=complex))
    if not spec.zero:
        out = out + spec.a_mu * zb ** spec.mu
        for d, c in enumerate(spec.f0):
            if c != 0:
                out = out + c * zb ** d
    dz_f = 0.5 * (out.fx - 1j * out.fy)
    scale = max(float(np.max(np.abs(out.f))), 1e-30)
    return float(np.max(np.abs(dz_f))) / scale


@dataclass(eq=False)
class SpecialFields:
    F_mu: np.ndarray        # (n_r, n_theta, m) complex
    J: np.ndarray           # from the defining difference
    J_series: np.ndarray    # from the branch-data representation
    mismatch: float


def special_fields(spec: MultiplierSpec, theta0: int, u0: float,
                   A: np.ndarray, field: ImmersionField,
                   frame: FrameField) -> SpecialFields:
    """F_mu and J with e^{-2 lam} f dz(Phi) = dzbar(F_mu) + J.

    J is evaluated two ways: as the defining difference, and through the
    centered branch representation
    a_mu zbar^{mu+1-theta0} [z^{1-theta0} e^{-2u} dz(Phi) - (theta0/2) e^{-2 u0} A]
    plus the smooth tail contribution e^{-2 lam} f0 dz(Phi).  The reported
    mismatch is the annulus max of their difference.
    """
    grid = field.grid
    m = field.ambient_dim
    z = grid.z[..., None]
    shape = (grid.n_r, grid.n_theta, m)
    if spec.is_zero:
        zeros = np.zeros(shape, dtype=complex)
        return SpecialFields(zeros, zeros.copy(), zeros.copy(), 0.0)
    if frame.u is None:
        raise MultiplierError("branch analysis (u field) required for F_mu, J")

    A = np.asarray(A, dtype=complex)
    d1 = field.gradient()
    dz_phi = 0.5 * (d1[0] - 1j * d1[1])
    e2lam = np.exp(2.0 * frame.lam)[..., None]

    mu = spec.mu
    head = 0.5 * theta0 * np.exp(-2.0 * u0) * spec.a_mu * A[None, None, :]
    if mu == theta0 - 2:
        F_mu = head * 2.0 * np.log(np.abs(z))
    else:
        F_mu = head * np.conj(z) ** (mu + 2 - theta0) / (mu + 2 - theta0)
    dzbar_F = head * np.conj(z) ** (mu + 1 - theta0)

    f = spec.evaluate(grid.z)[..., None]
    lhs = e2lam ** (-1) * f * dz_phi
    J = lhs - dzbar_F

    bracket = (z ** (1 - theta0) * np.exp(-2.0 * frame.u)[..., None] * dz_phi
               - 0.5 * theta0 * np.exp(-2.0 * u0) * A[None, None, :])
    J_series = spec.a_mu * np.conj(z) ** (mu + 1 - theta0) * bracket
    if spec.f0:
        tail = np.zeros_like(f)
        for d, c in enumerate(spec.f0):
            if c != 0:
                tail = tail + c * np.conj(z) ** d
        J_series = J_series + e2lam ** (-1) * tail * dz_phi

    mismatch = annulus_norms(grid, J - J_series)["max"]
    return SpecialFields(F_mu, J, J_series, mismatch)


def pmc_multiplier(curv, frame: FrameField, sign: int = +1) -> dict:
    """Multiplier induced by parallel mean curvature, f = sign 2 e^{2 lam} H.H0*.

    Returns the sampled field, its anti-holomorphy defect (discrete dz norm,
    relative), and the parallelism defect |pi_n grad H| relative to |grad H|.
    The sign convention is configurable; +1 balances the strong-form equation
    when pi_n grad H = 0.
    """
    from willmore.grid import grad
    from willmore.surface import normal_projector

    grid = frame.grid
    hdot = np.sum(curv.H * np.conj(curv.H0), axis=-1)
    f_pmc = sign * 2.0 * np.exp(2.0 * frame.lam) * hdot

    scale = max(float(np.max(np.abs(f_pmc))), 1e-30)
    dz_defect = annulus_norms(grid, dz(grid, f_pmc))["max"] / scale

    gx, gy = grad(grid, curv.H)
    pi_n = normal_projector(frame)
    num = np.sqrt(np.sum(pi_n(gx) ** 2 + pi_n(gy) ** 2, axis=-1))
    den = np.sqrt(np.sum(gx ** 2 + gy ** 2, axis=-1))
    floor = max(float(np.max(den)), float(np.max(np.abs(curv.H))), 1e-30)
    pmc_defect = annulus_norms(grid, num)["max"] / floor
    return {"f_pmc": f_pmc, "antiholomorphy_defect": dz_defect,
            "pmc_defect": pmc_defect}


def codazzi_defect(curv, frame: FrameField) -> float:
    """Residual of the Codazzi identity tying H, H0 and the conformal factor.

    In the Weingarten convention used here (H0 from dz(e^{-lam} e_z)) the
    identity reads e^{-2lam} dzbar(e^{2lam} H.H0) = H.dz H + H0.dzbar H;
    it is why the parallel-mean-curvature multiplier is anti-holomorphic.
    """
    from willmore.grid import dzbar as _dzbar, dz as _dz

    grid = frame.grid
    e2l = np.exp(2.0 * frame.lam)
    lhs = _dzbar(grid, e2l * np.sum(curv.H * curv.H0, axis=-1)) / e2l
    dzH = _dz(grid, curv.H)
    dzbH = _dzbar(grid, curv.H)
    rhs = np.sum(curv.H * dzH, axis=-1) + np.sum(curv.H0 * dzbH, axis=-1)
    scale = max(float(np.max(np.abs(lhs))), float(np.max(np.abs(rhs))), 1e-30)
    return annulus_norms(grid, lhs - rhs)["max"] / scale
