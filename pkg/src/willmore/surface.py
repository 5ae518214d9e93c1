"""Conformal immersions of the punctured disk sampled on exponential-polar grids.

The catalog holds closed-form conformal charts (plane, branched plane,
stereographic sphere, catenoid end, inverted catenoid, CMC cylinder,
Clifford torus patch) plus a synthetic branch-point template with planted
expansion coefficients.  Every catalog chart is written in ordinary
arithmetic over jets, so sampled fields come with machine-precision first
and second derivatives.  Imported CSV samples carry no derivative
evaluators and fall back to discrete differentiation.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from willmore import jets
from willmore.grid import PolarGrid, grad
from willmore.jets import Jet
from willmore.multivec import MultiVec, hodge_star, wedge


class SurfaceError(ValueError):
    pass


# ---------------------------------------------------------------------------
# sampled immersion
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class ImmersionField:
    """Samples of an immersion on a polar grid, with optional exact derivatives.

    phi has shape (n_r, n_theta, m); d1 stacks (d/dx1, d/dx2) and d2 stacks
    (d2/dx1dx1, d2/dx1dx2, d2/dx2dx2) along a leading axis.
    """

    grid: PolarGrid
    ambient_dim: int
    phi: np.ndarray
    d1: Optional[np.ndarray] = None
    d2: Optional[np.ndarray] = None
    chart: Optional[Callable] = None
    name: str = ""
    params: Optional[dict] = None

    def __post_init__(self):
        if self.phi.shape != (self.grid.n_r, self.grid.n_theta, self.ambient_dim):
            raise SurfaceError(f"phi shape {self.phi.shape} does not match grid")
        if not np.all(np.isfinite(self.phi)):
            raise SurfaceError("immersion samples must be finite")

    @property
    def analytic(self) -> bool:
        return self.d1 is not None and self.d2 is not None

    def gradient(self) -> np.ndarray:
        if self.d1 is not None:
            return self.d1
        return np.stack(grad(self.grid, self.phi))

    def hessian(self) -> np.ndarray:
        if self.d2 is not None:
            return self.d2
        g1 = self.gradient()
        gxx, gxy = grad(self.grid, g1[0])
        _, gyy = grad(self.grid, g1[1])
        return np.stack([gxx, gxy, gyy])

    def resampled(self, grid: PolarGrid) -> "ImmersionField":
        if self.chart is None:
            raise SurfaceError("resampling needs an analytic chart")
        return from_chart(self.chart, grid, self.ambient_dim,
                          name=self.name, params=self.params)


def from_chart(chart: Callable, grid: PolarGrid, m: int,
               name: str = "", params: Optional[dict] = None) -> ImmersionField:
    xj, yj = Jet.seed(grid.x, grid.y)
    comps = chart(xj, yj)
    if len(comps) != m:
        raise SurfaceError(f"chart returned {len(comps)} components, expected {m}")
    stack = lambda attr: np.stack([np.broadcast_to(getattr(c, attr), grid.x.shape)
                                   for c in comps], axis=-1).astype(float)
    phi = stack("f")
    d1 = np.stack([stack("fx"), stack("fy")])
    d2 = np.stack([stack("fxx"), stack("fxy"), stack("fyy")])
    return ImmersionField(grid, m, phi, d1, d2, chart, name, params or {})


def differentiate(field: ImmersionField, order: int) -> np.ndarray:
    """First or second derivative samples; exact when the chart is analytic."""
    if order == 1:
        return field.gradient()
    if order == 2:
        if field.grid.n_r < 20 and field.d2 is None:
            raise SurfaceError("grid too coarse for the second-derivative stencil")
        return field.hessian()
    raise SurfaceError("order must be 1 or 2")


# ---------------------------------------------------------------------------
# conformal frame
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class FrameField:
    """Conformal parameter and the orthonormal frame / Gauss map per node."""

    grid: PolarGrid
    lam: np.ndarray
    defect: np.ndarray
    e1: Optional[np.ndarray] = None
    e2: Optional[np.ndarray] = None
    n: Optional[MultiVec] = None
    u: Optional[np.ndarray] = None
    theta0: Optional[int] = None
    u0: Optional[float] = None

    def with_frame(self, e1, e2, n) -> "FrameField":
        return dataclasses.replace(self, e1=e1, e2=e2, n=n)

    def with_branch(self, theta0, u, u0) -> "FrameField":
        return dataclasses.replace(self, theta0=theta0, u=u, u0=u0)


def conformal_factor(field: ImmersionField) -> FrameField:
    """lam = log(|grad Phi| / sqrt(2)) and the per-node conformality defect."""
    d1 = field.gradient()
    p1, p2 = d1[0], d1[1]
    n1 = np.linalg.norm(p1, axis=-1)
    n2 = np.linalg.norm(p2, axis=-1)
    e2lam = 0.5 * (n1 ** 2 + n2 ** 2)
    if np.any(e2lam == 0.0):
        raise SurfaceError("degenerate sample: |grad Phi| vanishes at a node")
    lam = 0.5 * np.log(e2lam)
    dot = np.sum(p1 * p2, axis=-1)
    defect = np.maximum(np.abs(n1 - n2) / np.exp(lam), np.abs(dot) / e2lam)
    return FrameField(field.grid, lam, defect)


def frame_and_gauss(field: ImmersionField, frame: FrameField,
                    defect_threshold: float = 1e-6) -> FrameField:
    """Orthonormal tangent frame and the Gauss map n = star(e1 ^ e2).

    e1 follows d Phi/dx1; e2 is Gram-Schmidt orthonormalized against e1 so
    the frame stays exactly orthonormal when the chart is only conformal to
    rounding.
    """
    worst = float(np.max(frame.defect))
    if worst > defect_threshold:
        raise SurfaceError(
            f"conformal defect {worst:.3e} exceeds threshold {defect_threshold:.1e}")
    d1 = field.gradient()
    p1, p2 = d1[0], d1[1]
    e1 = p1 / np.linalg.norm(p1, axis=-1, keepdims=True)
    t2 = p2 - np.sum(p2 * e1, axis=-1, keepdims=True) * e1
    e2 = t2 / np.linalg.norm(t2, axis=-1, keepdims=True)
    m = field.ambient_dim
    n = hodge_star(wedge(MultiVec.vector(m, e1), MultiVec.vector(m, e2)))
    nn = np.sqrt(np.sum(n.coeffs ** 2, axis=-1, keepdims=True))
    n = MultiVec(m, m - 2, n.coeffs / nn)
    return frame.with_frame(e1, e2, n)


def normal_projector(frame: FrameField):
    """Returns pi_n acting on (n_r, n_theta, m) vector fields."""
    e1, e2 = frame.e1, frame.e2

    def project(v):
        return (v - np.sum(v * e1, axis=-1, keepdims=True) * e1
                - np.sum(v * e2, axis=-1, keepdims=True) * e2)

    return project


def gauss_map_gradient_norm(frame: FrameField) -> np.ndarray:
    """|grad n| per node from the sampled Gauss map coefficients."""
    gx, gy = grad(frame.grid, frame.n.coeffs)
    return np.sqrt(np.sum(gx ** 2 + gy ** 2, axis=-1))


# ---------------------------------------------------------------------------
# catalog charts
# ---------------------------------------------------------------------------

def _as_complex_vec(v, m, name):
    a = np.asarray(v, dtype=complex)
    if a.shape == (m, 2) and not np.iscomplexobj(np.asarray(v)):
        a = a[:, 0] + 1j * a[:, 1]  # JSON wire format: [re, im] pairs
    if a.shape != (m,):
        raise SurfaceError(f"{name} must have {m} complex components")
    return a


def _plane(params, m):
    def chart(x, y):
        zero = Jet.const(np.zeros_like(np.asarray(x.f)))
        return [x, y] + [zero] * (m - 2)
    return chart


def _branched_plane(params, m):
    theta0 = int(params.get("theta0", 2))
    if theta0 < 1:
        raise SurfaceError("theta0 must be a positive integer")
    if "A" in params:
        A = _as_complex_vec(params["A"], m, "A")
    else:
        scale = float(params.get("scale", 1.0))
        A = np.zeros(m, dtype=complex)
        A[0], A[1] = scale, 1j * scale
    if abs(A @ A) > 1e-12 * max(1.0, np.sum(np.abs(A) ** 2)):
        raise SurfaceError("branched plane needs an isotropic direction: A.A = 0")

    def chart(x, y):
        w = (x + 1j * y) ** theta0
        return [(Jet.const(A[k]) * w).real for k in range(m)]
    return chart


def _sphere_stereographic(params, m):
    R = float(params.get("R", 1.0))

    def chart(x, y):
        den = x * x + y * y + 1.0
        return ([2.0 * R * x / den, 2.0 * R * y / den,
                 R * (x * x + y * y - 1.0) / den]
                + [Jet.const(np.zeros_like(np.asarray(x.f)))] * (m - 3))
    return chart


def _catenoid_xyz(x, y, scale):
    # conformal catenoid end: z = exp(-(t + i th)), t = -log r, th = -arg z
    r2 = x * x + y * y
    factor = (1.0 + r2) / (2.0 * r2)
    t = -0.5 * jets.log(r2)
    return [scale * (x * factor), scale * (-(y * factor)), scale * t]


def _catenoid_end(params, m):
    scale = float(params.get("scale", 1.0))

    def chart(x, y):
        X = _catenoid_xyz(x, y, scale)
        return X + [Jet.const(np.zeros_like(np.asarray(x.f)))] * (m - 3)
    return chart


def _inverted_catenoid(params, m):
    scale = float(params.get("scale", 1.0))

    def chart(x, y):
        X = _catenoid_xyz(x, y, scale)
        norm2 = X[0] * X[0] + X[1] * X[1] + X[2] * X[2]
        return ([Xi / norm2 for Xi in X]
                + [Jet.const(np.zeros_like(np.asarray(x.f)))] * (m - 3))
    return chart


def _cylinder_cmc(params, m):
    rho = float(params.get("radius", 0.75))
    if rho <= 0:
        raise SurfaceError("cylinder radius must be positive")

    def chart(x, y):
        return ([rho * jets.cos(y / rho), rho * jets.sin(y / rho), x]
                + [Jet.const(np.zeros_like(np.asarray(x.f)))] * (m - 3))
    return chart


def _clifford_torus_patch(params, m):
    if m < 4:
        raise SurfaceError("the Clifford torus needs ambient dimension >= 4")
    a = float(params.get("scale", 2.0 * np.pi))
    c = 1.0 / np.sqrt(2.0)

    def chart(x, y):
        return ([c * jets.cos(a * x), c * jets.sin(a * x),
                 c * jets.cos(a * y), c * jets.sin(a * y)]
                + [Jet.const(np.zeros_like(np.asarray(x.f)))] * (m - 4))
    return chart


def synthetic_th4_coefficients(params, m):
    """Resolve the planted template data (A, B_j, E_a, gamma0, u0, C's)."""
    theta0 = int(params.get("theta0", 2))
    a = int(params.get("a", 0))
    if theta0 < 1 or not 0 <= a <= theta0 - 1:
        raise SurfaceError("need theta0 >= 1 and 0 <= a <= theta0 - 1")
    if "A" in params:
        A = _as_complex_vec(params["A"], m, "A")
    else:
        scale = float(params.get("scale", 1.0))
        A = np.zeros(m, dtype=complex)
        A[0], A[1] = scale, 1j * scale
    if abs(A @ A) > 1e-12 * np.sum(np.abs(A) ** 2):
        raise SurfaceError("planted A must be isotropic (A.A = 0)")
    B = [_as_complex_vec(b, m, "B_j") for b in params.get("B", [])]
    nb = theta0 - a
    while len(B) < nb:
        B.append(np.zeros(m, dtype=complex))
    if len(B) > nb:
        raise SurfaceError(f"at most theta0 - a = {nb} subleading vectors B_j")
    E_a = _as_complex_vec(params["E_a"], m, "E_a") if "E_a" in params \
        else np.zeros(m, dtype=complex)
    gamma0 = np.asarray(params.get("gamma0", np.zeros(m)), dtype=float)
    if gamma0.shape != (m,):
        raise SurfaceError(f"gamma0 must have {m} components")
    xi = _as_complex_vec(params["xi"], m, "xi") if "xi" in params \
        else np.zeros(m, dtype=complex)
    # the pole and log coefficients live in the normal space at the origin
    for vec, nm in ((E_a.real, "Re E_a"), (E_a.imag, "Im E_a"), (gamma0, "gamma0")):
        for t in (A.real, A.imag):
            if abs(vec @ t) > 1e-10 * max(1.0, np.linalg.norm(vec) * np.linalg.norm(t)):
                raise SurfaceError(f"{nm} must be orthogonal to the tangent plane of A")
    u0 = float(np.log(theta0 * np.linalg.norm(A.real)))
    C_log = np.exp(2 * u0) / (2.0 * theta0 ** 3) * gamma0
    C_pole = np.exp(2 * u0) / (2.0 * theta0 * (theta0 - a)) * E_a
    return {"theta0": theta0, "a": a, "A": A, "B": B, "E_a": E_a,
            "gamma0": gamma0, "u0": u0, "C_log": C_log, "C_pole": C_pole,
            "xi": xi}


def _synthetic_th4(params, m):
    c = synthetic_th4_coefficients(params, m)
    theta0, a = c["theta0"], c["a"]

    def chart(x, y):
        z = x + 1j * y
        r2 = x * x + y * y
        hol = [Jet.const(c["A"][k]) * z ** theta0 for k in range(m)]
        for j, Bj in enumerate(c["B"], start=1):
            zp = z ** (theta0 + j)
            hol = [h + Jet.const(Bj[k]) * zp for k, h in enumerate(hol)]
        pole = z ** (theta0 - a) * z.conj() ** theta0
        hol = [h + Jet.const(c["C_pole"][k]) * pole for k, h in enumerate(hol)]
        if np.any(c["xi"]):
            # planted remainder at the expansion's decay order 2 theta0 - a + 1
            rem = z ** (2 * theta0 - a + 1)
            hol = [h + Jet.const(c["xi"][k]) * rem for k, h in enumerate(hol)]
        logterm = r2 ** theta0 * (0.5 * theta0 * jets.log(r2) - 1.0)
        return [hol[k].real - c["C_log"][k] * logterm for k in range(m)]
    return chart


CATALOG = {
    "plane": _plane,
    "branched_plane": _branched_plane,
    "sphere_stereographic": _sphere_stereographic,
    "catenoid_end": _catenoid_end,
    "inverted_catenoid": _inverted_catenoid,
    "cylinder_cmc": _cylinder_cmc,
    "clifford_torus_patch": _clifford_torus_patch,
    "synthetic_th4": _synthetic_th4,
}

#: entries that satisfy the Willmore equation with zero multiplier (away from 0)
WILLMORE_ENTRIES = {"plane", "branched_plane", "sphere_stereographic",
                    "catenoid_end", "inverted_catenoid"}
#: entries with parallel mean curvature but nonzero multiplier
PMC_ENTRIES = {"cylinder_cmc", "clifford_torus_patch"}
#: entries whose equation extends across the origin (no branch, no flux there)
REGULAR_ENTRIES = {"plane", "sphere_stereographic", "cylinder_cmc",
                   "clifford_torus_patch"}


def catalog_surface(name: str, params: Optional[dict], grid: PolarGrid,
                    ambient_dim: int = 3) -> ImmersionField:
    if name not in CATALOG:
        raise SurfaceError(f"unknown catalog surface {name!r}; "
                           f"choices: {sorted(CATALOG)}")
    params = dict(params or {})
    m = int(params.pop("ambient_dim", ambient_dim))
    chart = CATALOG[name](params, m)
    return from_chart(chart, grid, m, name=name, params=params)


# -- chart transforms --------------------------------------------------------

def inverted_chart(chart: Callable, center) -> Callable:
    """Compose a chart with the sphere inversion p -> (p - c)/|p - c|^2."""
    center = np.asarray(center, dtype=float)

    def new_chart(x, y):
        comps = chart(x, y)
        shifted = [ci - center[k] for k, ci in enumerate(comps)]
        norm2 = shifted[0] * shifted[0]
        for s in shifted[1:]:
            norm2 = norm2 + s * s
        return [s / norm2 for s in shifted]
    return new_chart


def rotated_chart(chart: Callable, Q: np.ndarray) -> Callable:
    """Compose a chart with an ambient orthogonal map."""
    Q = np.asarray(Q, dtype=float)

    def new_chart(x, y):
        comps = chart(x, y)
        return [sum(Q[i, j] * comps[j] for j in range(len(comps)))
                for i in range(Q.shape[0])]
    return new_chart


def rescaled_chart(chart: Callable, rho: float) -> Callable:
    """Precompose with z -> rho z (chart rescaling of the domain)."""

    def new_chart(x, y):
        return chart(rho * x, rho * y)
    return new_chart


# ---------------------------------------------------------------------------
# JSON / CSV interfaces
# ---------------------------------------------------------------------------

def surface_from_json(doc) -> ImmersionField:
    """Build a catalog surface from {name, params, grid, ambient_dim}."""
    if isinstance(doc, (str, bytes)):
        doc = json.loads(doc)
    grid = PolarGrid.from_json(doc["grid"])
    return catalog_surface(doc["name"], doc.get("params", {}), grid,
                           int(doc.get("ambient_dim", 3)))


def save_samples_csv(field: ImmersionField, path) -> None:
    m = field.ambient_dim
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r", "theta"] + [f"phi_{k + 1}" for k in range(m)])
        for i, r in enumerate(field.grid.r):
            for j, th in enumerate(field.grid.theta):
                writer.writerow([repr(float(r)), repr(float(th))]
                                + [repr(float(v)) for v in field.phi[i, j]])


def load_samples_csv(path) -> ImmersionField:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        m = len(header) - 2
        rows = [[float(v) for v in row] for row in reader]
    data = np.asarray(rows)
    r_vals = np.unique(data[:, 0])
    th_vals = np.unique(data[:, 1])
    n_r, n_theta = len(r_vals), len(th_vals)
    if n_r * n_theta != len(rows):
        raise SurfaceError("CSV nodes do not form a full polar grid")
    grid = PolarGrid(float(r_vals[0]), float(r_vals[-1]), n_r, n_theta)
    if not (np.allclose(grid.r, r_vals, rtol=1e-9)
            and np.allclose(grid.theta, th_vals, rtol=1e-9, atol=1e-12)):
        raise SurfaceError("CSV nodes are not exponential-polar")
    phi = np.full((n_r, n_theta, m), np.nan)
    ri = {float(v): i for i, v in enumerate(r_vals)}
    ti = {float(v): i for i, v in enumerate(th_vals)}
    for row in rows:
        phi[ri[row[0]], ti[row[1]]] = row[2:]
    return ImmersionField(grid, m, phi)
