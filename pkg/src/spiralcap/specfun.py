"""Modified Bessel functions of integer order, and the open-boundary Robin coefficient.

K_0 and K_1 use the ascending series for z <= 2 and Steed's continued fraction
(Temme's CF2) above; higher orders follow by upward recurrence, which is stable
for K_n.  I_n is summed directly from its power series: every term is positive,
so there is no cancellation and the relative error stays near machine precision
up to the overflow limit.
"""
import math

import numpy as np

from .errors import DomainError

EULER_GAMMA = 0.57721566490153286061
_SERIES_SPLIT = 2.0
_EPS = 1e-17
_MAXIT = 10000
# Below this value of omega * R the coefficient falls back to the plain 2D dipole.
ROBIN_SMALL_ARG = 0.01


def _check_order(n):
    if int(n) != n or n < 0:
        raise DomainError(f"Bessel order must be a non-negative integer, got {n!r}")
    return int(n)


def _k01_series(z):
    # ascending series, z <= 2
    q = 0.25 * z * z
    lg = math.log(0.5 * z)
    i0 = i1 = 0.0
    s0 = s1 = 0.0
    term0 = 1.0              # q^k / (k!)^2
    term1 = 1.0              # q^k / (k! (k+1)!)
    psi1 = -EULER_GAMMA      # psi(k+1)
    psi2 = 1.0 - EULER_GAMMA  # psi(k+2)
    k = 0
    while True:
        i0 += term0
        i1 += term1
        s0 += psi1 * term0
        s1 += (psi1 + psi2) * term1
        k += 1
        term0 *= q / (k * k)
        term1 *= q / (k * (k + 1))
        psi1 += 1.0 / k
        psi2 += 1.0 / (k + 1)
        if term0 < _EPS * abs(s0) and term0 < _EPS * i0 and k > 2:
            break
    i1 *= 0.5 * z
    k0 = -lg * i0 + s0
    k1 = 1.0 / z + lg * i1 - 0.25 * z * s1
    return k0, k1


def _cf2(z):
    # Steed's algorithm for Temme's CF2 at order 0, z > 2; returns (s, h)
    b = 2.0 * (1.0 + z)
    d = 1.0 / b
    h = delh = d
    q1, q2 = 0.0, 1.0
    a1 = 0.25
    q = c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, _MAXIT):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels / s) < _EPS:
            break
    else:  # pragma: no cover - CF2 converges in tens of steps for z > 2
        raise ArithmeticError(f"CF2 did not converge at z={z}")
    return s, h * a1


def _k01_cf2(z):
    s, h = _cf2(z)
    k0 = math.sqrt(math.pi / (2.0 * z)) * math.exp(-z) / s
    k1 = k0 * (z + 0.5 - h) / z
    return k0, k1


def _k_scalar(n, z):
    if z <= _SERIES_SPLIT:
        km, k = _k01_series(z)
    else:
        km, k = _k01_cf2(z)
    if n == 0:
        return km
    for j in range(1, n):
        km, k = k, km + (2.0 * j / z) * k
        if math.isinf(k):
            raise OverflowError(f"K_{n}({z}) overflows")
    return k


def bessel_k(n, z):
    """Modified Bessel function of the second kind, K_n(z), for integer n >= 0.

    Raises DomainError for z <= 0 and OverflowError when the value is not
    representable (tiny z with large n).
    """
    n = _check_order(n)
    z = float(z)
    if not z > 0.0:
        raise DomainError(f"K_n requires z > 0, got {z}")
    return _k_scalar(n, z)


def _i_scalar(n, z):
    if z == 0.0:
        return 1.0 if n == 0 else 0.0
    try:
        term = (0.5 * z) ** n / math.factorial(n)
    except OverflowError:
        raise OverflowError(f"I_{n}({z}) overflows") from None
    if term == 0.0:
        # underflowed leading power: accumulate in log space instead
        log_term = n * math.log(0.5 * z) - math.lgamma(n + 1)
        return _i_log_series(n, z, log_term)
    q = 0.25 * z * z
    total = 0.0
    k = 0
    while True:
        total += term
        k += 1
        term *= q / (k * (k + n))
        if term < _EPS * total:
            break
        if math.isinf(total):
            raise OverflowError(f"I_{n}({z}) overflows")
    if math.isinf(total):
        raise OverflowError(f"I_{n}({z}) overflows")
    return total


def _i_log_series(n, z, log_term):
    q = 0.25 * z * z
    total, term, k = 0.0, 1.0, 0
    while True:
        total += term
        k += 1
        term *= q / (k * (k + n))
        if term < _EPS * total:
            break
    return math.exp(log_term) * total


def bessel_i(n, z):
    """Modified Bessel function of the first kind, I_n(z), for integer n >= 0 and z >= 0."""
    n = _check_order(n)
    z = float(z)
    if not z >= 0.0:
        raise DomainError(f"I_n requires z >= 0, got {z}")
    return _i_scalar(n, z)


# numpy-friendly versions for mode evaluation on node arrays
bessel_k_array = np.vectorize(bessel_k, otypes=[float])
bessel_i_array = np.vectorize(bessel_i, otypes=[float])


def robin_coefficient(omega, R):
    """Coefficient beta of the far-field condition du/dr + beta*u = 0 on the circle r = R.

    beta = omega * (K_0 + K_2) / (2 K_1) evaluated at omega*R, i.e. minus the
    logarithmic radial derivative of the decaying dipole mode K_1(omega r).
    For omega*R < 0.01 the ordinary 2D dipole value 1/R is returned.
    """
    omega = float(omega)
    R = float(R)
    if not R > 0.0:
        raise DomainError(f"outer radius must be positive, got {R}")
    if omega < 0.0:
        raise DomainError(f"winding frequency must be non-negative, got {omega}")
    arg = omega * R
    if arg < ROBIN_SMALL_ARG:
        return 1.0 / R
    if arg <= _SERIES_SPLIT:
        k0, k1 = _k01_series(arg)
        ratio01 = k0 / k1
    else:
        # ratio straight from CF2 stays finite where K_0, K_1 underflow
        _, h = _cf2(arg)
        ratio01 = arg / (arg + 0.5 - h)
    # K_2 = K_0 + (2/arg) K_1
    return 0.5 * omega * (2.0 * ratio01 + 2.0 / arg)
