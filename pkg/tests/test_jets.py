"""Jets are checked against central finite differences of the same expression."""

import numpy as np

from willmore import jets
from willmore.jets import Jet

RNG = np.random.default_rng(7)


def expr(x, y, lib):
    # mixes every supported primitive, stays in each function's domain
    r2 = x * x + y * y + 1.5
    t = lib.log(r2) + lib.sqrt(r2)
    w = lib.sin(x * y) + lib.cos(x - y) + lib.sinh(y * 0.3) + lib.cosh(x * 0.2)
    return t * w + (x * 0.7 + 1.9) / r2 + x ** 3 - 2.0 * y


class _NumpyLib:
    log = staticmethod(np.log)
    sqrt = staticmethod(np.sqrt)
    sin = staticmethod(np.sin)
    cos = staticmethod(np.cos)
    sinh = staticmethod(np.sinh)
    cosh = staticmethod(np.cosh)


def test_jet_against_finite_differences():
    x0, y0 = 0.37, -0.81
    jx, jy = Jet.seed(x0, y0)
    got = expr(jx, jy, jets)

    h = 1e-4  # balances truncation and roundoff for the second differences
    f = lambda a, b: expr(a, b, _NumpyLib)
    fx = (f(x0 + h, y0) - f(x0 - h, y0)) / (2 * h)
    fy = (f(x0, y0 + h) - f(x0, y0 - h)) / (2 * h)
    fxx = (f(x0 + h, y0) - 2 * f(x0, y0) + f(x0 - h, y0)) / h**2
    fyy = (f(x0, y0 + h) - 2 * f(x0, y0) + f(x0, y0 - h)) / h**2
    fxy = (f(x0 + h, y0 + h) - f(x0 + h, y0 - h)
           - f(x0 - h, y0 + h) + f(x0 - h, y0 - h)) / (4 * h**2)

    assert np.isclose(got.f, f(x0, y0), rtol=1e-12)
    assert np.isclose(got.fx, fx, rtol=1e-7)
    assert np.isclose(got.fy, fy, rtol=1e-7)
    assert np.isclose(got.fxx, fxx, rtol=1e-6)
    assert np.isclose(got.fxy, fxy, rtol=1e-6)
    assert np.isclose(got.fyy, fyy, rtol=1e-6)


def test_complex_monomial_jet():
    # w = z^k with z = x + iy: dw/dx = k z^{k-1}, dw/dy = i k z^{k-1}, etc.
    x = RNG.standard_normal(12)
    y = RNG.standard_normal(12)
    jx, jy = Jet.seed(x, y)
    z = jx + 1j * jy
    k = 5
    w = z ** k
    zz = x + 1j * y
    assert np.allclose(w.f, zz**k)
    assert np.allclose(w.fx, k * zz ** (k - 1))
    assert np.allclose(w.fy, 1j * k * zz ** (k - 1))
    assert np.allclose(w.fxx, k * (k - 1) * zz ** (k - 2))
    assert np.allclose(w.fxy, 1j * k * (k - 1) * zz ** (k - 2))
    assert np.allclose(w.fyy, -k * (k - 1) * zz ** (k - 2))


def test_real_part_of_complex_jet():
    x = np.array([0.3, -0.4])
    y = np.array([0.2, 0.9])
    jx, jy = Jet.seed(x, y)
    z = jx + 1j * jy
    w = (z ** 3).real
    zz = x + 1j * y
    assert np.allclose(w.f, (zz**3).real)
    assert np.allclose(w.fx, (3 * zz**2).real)
    assert np.allclose(w.fy, (1j * 3 * zz**2).real)


def test_harmonic_identity():
    # Re(z^k) is harmonic: fxx + fyy = 0 exactly in exact arithmetic
    x = RNG.standard_normal(30) * 0.5
    y = RNG.standard_normal(30) * 0.5
    jx, jy = Jet.seed(x, y)
    w = ((jx + 1j * jy) ** 4).real
    assert np.allclose(w.fxx + w.fyy, 0.0, atol=1e-13)


def test_division_and_negative_power():
    x, y = Jet.seed(1.3, 0.4)
    a = (x * x + y * y) ** (-1)
    b = 1.0 / (x * x + y * y)
    for s in ("f", "fx", "fy", "fxx", "fxy", "fyy"):
        assert np.isclose(getattr(a, s), getattr(b, s), rtol=1e-12)
