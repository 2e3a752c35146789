"""Closed-form and quadrature references, written independently of `specfun`.

Bessel values here come from integral representations evaluated by the
trapezoid rule, which converges geometrically for these smooth (periodic or
rapidly decaying) integrands.  Nothing in this module calls `specfun` except
`mode_value`, which is the object under test in kernel checks.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DomainError, QuadratureError
from .specfun import bessel_i, bessel_k


def bessel_k_quad(n, z, h=0.01):
    """K_n(z) = int_0^inf exp(-z cosh t) cosh(n t) dt."""
    if not z > 0:
        raise DomainError("K_n needs z > 0")
    # log of the integrand peaks near sinh t = n / z; integrate until it is 50 below
    t_peak = math.asinh(n / z)
    log_peak = -z * math.cosh(t_peak) + n * t_peak
    t_end = t_peak + 1.0
    while -z * math.cosh(t_end) + n * t_end > log_peak - 50.0:
        t_end += 1.0
    t = np.arange(0.0, t_end + h, h)
    log_f = -z * np.cosh(t) + np.log(np.cosh(n * t))
    f = np.exp(log_f - log_peak)
    total = h * (f.sum() - 0.5 * f[0] - 0.5 * f[-1])
    return float(total * math.exp(log_peak))


def bessel_i_quad(n, z, m=512):
    """I_n(z) via Poisson's integral

        I_n(z) = (z/2)^n / (sqrt(pi) Gamma(n + 1/2)) int_0^pi exp(z cos t) sin(t)^(2n) dt.

    The integrand is positive, so the sum has no cancellation, unlike the
    cos(n t) form at small z.
    """
    if z < 0:
        raise DomainError("I_n needs z >= 0")
    if z == 0:
        return 1.0 if n == 0 else 0.0
    # periodic, even integrand: trapezoid on the full period
    t = np.pi * np.arange(2 * m) / m
    g = np.exp(z * (np.cos(t) - 1.0)) * np.sin(t) ** (2 * n)
    integral = np.pi * g.mean()
    log_pref = n * math.log(0.5 * z) - 0.5 * math.log(math.pi) - math.lgamma(n + 0.5) + z
    return float(integral * math.exp(log_pref))


def bessel_i_quad_cos(n, z, m=512):
    """I_n(z) = (1/pi) int_0^pi exp(z cos t) cos(n t) dt (loses accuracy for small z, large n)."""
    t = np.pi * np.arange(2 * m) / m
    return float(np.mean(np.exp(z * np.cos(t)) * np.cos(n * t)))


@dataclass(frozen=True)
class HarmonicMode:
    n: int
    omega: float
    amplitude: float = 1.0
    kind: str = "K"

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("mode order must be >= 1")
        if not self.omega > 0:
            raise DomainError("mode frequency must be positive")
        if self.kind not in ("K", "I"):
            raise DomainError("kind is 'K' (decaying) or 'I' (regular)")


def mode_value(mode, r, phi):
    """amplitude * Z_n(n omega r) sin(n phi), Z = K_n or I_n."""
    if mode.kind == "K" and not r > 0:
        raise DomainError("K modes need r > 0")
    fn = bessel_k if mode.kind == "K" else bessel_i
    return mode.amplitude * fn(mode.n, mode.n * mode.omega * r) * math.sin(mode.n * phi)


def mode_cartesian(mode):
    """Vectorised (x, y) -> mode value, for boundary data and error norms."""
    def u(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.empty(np.broadcast(x, y).shape)
        it = np.nditer([x, y, out], op_flags=[["readonly"], ["readonly"], ["writeonly"]])
        for xx, yy, oo in it:
            oo[...] = mode_value(mode, math.hypot(xx, yy), math.atan2(yy, xx))
        return out
    return u


def _derivatives(fn, r, phi, h):
    """f_rr, f_r, f_phiphi by fourth-order central differences."""
    f0 = fn(r, phi)
    r1, r2 = fn(r + h, phi), fn(r + 2 * h, phi)
    m1, m2 = fn(r - h, phi), fn(r - 2 * h, phi)
    p1, p2 = fn(r, phi + h), fn(r, phi + 2 * h)
    q1, q2 = fn(r, phi - h), fn(r, phi - 2 * h)
    f_rr = (-r2 + 16 * r1 - 30 * f0 + 16 * m1 - m2) / (12 * h * h)
    f_r = (-r2 + 8 * r1 - 8 * m1 + m2) / (12 * h)
    f_pp = (-p2 + 16 * p1 - 30 * f0 + 16 * q1 - q2) / (12 * h * h)
    return f_rr, f_r, f_pp


def spiral_laplacian_fd(fn, r, phi, omega, h=1e-3):
    """Finite-difference (1/r) d_r(r d_r f) + ((1 + omega^2 r^2)/r^2) d_phi^2 f."""
    f_rr, f_r, f_pp = _derivatives(fn, r, phi, h)
    return f_rr + f_r / r + (1 + omega * omega * r * r) / (r * r) * f_pp


def second_derivative_scale(fn, r, phi, omega, h=1e-3):
    """max(|f_rr|, |f_r / r|, |(1 + w^2 r^2)/r^2 f_phiphi|): the size of the terms that cancel."""
    f_rr, f_r, f_pp = _derivatives(fn, r, phi, h)
    return max(abs(f_rr), abs(f_r / r), abs((1 + omega * omega * r * r) / (r * r) * f_pp))


def wire_dipole_integral(omega, r, phi, tol=1e-8):
    """int_{-inf}^{inf} r sin(omega z + phi) / (z^2 + r^2)^(3/2) dz.

    The window |z| <= 40/omega + 40 r goes to adaptive quadrature; the two
    oscillatory tails use QAWF Fourier quadrature.  Raises QuadratureError
    when the combined error estimate exceeds ``tol``.
    """
    if not r > 0:
        raise DomainError("r must be positive")

    def g(z):
        return r / (z * z + r * r) ** 1.5

    if omega == 0:
        val, err = integrate.quad(lambda z: g(z) * math.sin(phi), -np.inf, np.inf,
                                  epsabs=tol * 1e-3, epsrel=1e-13, limit=500)
        if err > tol:
            raise QuadratureError(f"error estimate {err:.2e} above {tol:.0e}")
        return val
    L = 40.0 / omega + 40.0 * r
    n_osc = int(omega * L / math.pi) + 1
    points = np.linspace(-L, L, 2 * n_osc + 1)
    centre, err_c = 0.0, 0.0
    for a, b in zip(points[:-1], points[1:]):
        v, e = integrate.quad(lambda z: g(z) * math.sin(omega * z + phi), a, b,
                              epsabs=1e-14, epsrel=1e-13, limit=200)
        centre += v
        err_c += e
    # sin(w z + phi) = sin(w z) cos(phi) + cos(w z) sin(phi); for z < 0 substitute z -> -s
    tails, err_t = 0.0, 0.0
    for sgn in (1.0, -1.0):
        vs, es = integrate.quad(g, L, np.inf, weight="sin", wvar=omega, epsabs=1e-14, limlst=200)
        vc, ec = integrate.quad(g, L, np.inf, weight="cos", wvar=omega, epsabs=1e-14, limlst=200)
        tails += sgn * vs * math.cos(phi) + vc * math.sin(phi)
        err_t += es + ec
    err = err_c + err_t
    if err > tol:
        raise QuadratureError(f"error estimate {err:.2e} above {tol:.0e}")
    return centre + tails


def coaxial_reference(r0, R):
    """Potential ln(R/r)/ln(R/r0) between two circles, and its energy 2 pi / ln(R/r0).

    The energy uses this package's convention, int |grad u|^2 dx with no
    1/(8 pi) and no 1/2.
    """
    if not 0 < r0 < R:
        raise DomainError("need 0 < r0 < R")
    log_ratio = math.log(R / r0)

    def potential(r):
        return np.log(R / np.asarray(r, dtype=float)) / log_ratio

    return potential, 2.0 * math.pi / log_ratio


def manufactured_source(omega):
    """u* = x y and f = -div(K grad u*) = 4 omega^2 x y.

    With t = (y, -x): K grad u* = grad u* + omega^2 t (t . grad u*), and
    t . grad(xy) = y^2 - x^2, div(t (y^2 - x^2)) = t . grad(y^2 - x^2) = -4 x y.
    """
    w2 = omega * omega

    def u(x, y):
        return np.asarray(x) * np.asarray(y)

    def f(x, y):
        return 4.0 * w2 * np.asarray(x) * np.asarray(y)

    return u, f
