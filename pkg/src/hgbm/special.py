"""Gauss hypergeometric evaluation for real arguments z <= 1 and the
spectral Gamma weight used by the Jacobi-Fourier heat kernels.

The 2F1 strategy (every use in this package has real z <= 1):

* z = 0: exactly 1.
* 0 < z <= 0.5: the defining power series.
* 0.5 < z < 1: Euler transformation (1-z)^(c-a-b) 2F1(c-a, c-b; c; z), which
  decays faster term by term whenever c-a-b > 0, then the series.
* z = 1: Gauss summation Gamma(c)Gamma(c-a-b) / (Gamma(c-a)Gamma(c-b)),
  requiring Re(c-a-b) > 0.
* -1 <= z < 0: Pfaff transformation (1-z)^(-a) 2F1(a, c-b; c; z/(z-1)) with
  transformed argument in [0, 1/2).
* z < -1: the 1/z connection formula (two terms with Gamma prefactors),
  giving a fast series in 1/z; it needs a - b off the integers and falls back
  to the Pfaff route otherwise.
"""

from __future__ import annotations

import numpy as np
from scipy.special import loggamma, poch


class DomainError(ValueError):
    """Raised for divergent or pole parameter configurations."""


class AccuracyError(RuntimeError):
    """Raised when a series or quadrature fails to reach its target."""


def _series(a, b, c, z, tol, max_terms):
    """Power series sum with term recurrence; a, b, c, z scalars (complex ok)."""
    term = 1.0 + 0.0j
    total = 1.0 + 0.0j
    for m in range(max_terms):
        term = term * (a + m) * (b + m) / ((c + m) * (m + 1.0)) * z
        total += term
        if abs(term) <= tol * max(abs(total), 1e-300):
            return total
    raise AccuracyError(f"2F1 series did not converge in {max_terms} terms (z={z})")


def _gauss_at_one(a, b, c):
    s = c - a - b
    if np.real(s) <= 0:
        raise DomainError("2F1 at z=1 diverges unless Re(c-a-b) > 0")
    return np.exp(loggamma(c) + loggamma(s) - loggamma(c - a) - loggamma(c - b))


def _is_nonpositive_integer(x, tol=1e-12):
    xr = np.real(x)
    return abs(np.imag(x)) < tol and xr <= tol and abs(xr - round(xr)) < tol


def _connection_large_negative(a, b, c, z, tol, max_terms):
    """1/z connection for z < -1: two conjugate-structured terms."""
    mz = -z
    term1 = np.exp(loggamma(c) + loggamma(b - a) - loggamma(b) - loggamma(c - a)
                   - a * np.log(mz))
    term1 *= _series(a, a - c + 1.0, a - b + 1.0, 1.0 / z, tol, max_terms)
    term2 = np.exp(loggamma(c) + loggamma(a - b) - loggamma(a) - loggamma(c - b)
                   - b * np.log(mz))
    term2 *= _series(b, b - c + 1.0, b - a + 1.0, 1.0 / z, tol, max_terms)
    return term1 + term2


def gauss_2f1(a, b, c, z, tol: float = 1e-13, max_terms: int = 500000):
    """2F1(a, b; c; z) for real z <= 1; a, b may be complex, c real-ish."""
    a = complex(a); b = complex(b); c = complex(c)
    z = float(z)
    if z > 1.0:
        raise DomainError("only z <= 1 is supported")
    if _is_nonpositive_integer(c):
        # unless the series terminates first (a or b a nonpositive integer above c)
        raise DomainError("c is a nonpositive integer")
    if z == 0.0:
        return _maybe_real(1.0 + 0.0j, a, b, c)
    if z == 1.0:
        return _maybe_real(_gauss_at_one(a, b, c), a, b, c)
    if 0.0 < z <= 0.5:
        return _maybe_real(_series(a, b, c, z, tol, max_terms), a, b, c)
    if 0.5 < z < 1.0:
        val = (1.0 - z) ** (c - a - b) * _series(c - a, c - b, c, z, tol, max_terms)
        return _maybe_real(val, a, b, c)
    if z >= -2.0:
        # Pfaff argument z/(z-1) stays below 2/3 here
        x = z / (z - 1.0)
        val = (1.0 - z) ** (-a) * _series(a, c - b, c, x, tol, max_terms)
        return _maybe_real(val, a, b, c)
    # z < -2: the 1/z connection has |argument| <= 1/2
    ab = a - b
    if abs(np.imag(ab)) > 1e-13 or abs(np.real(ab) - round(np.real(ab))) > 1e-10:
        val = _connection_large_negative(a, b, c, z, tol, max_terms)
    else:
        # degenerate (integer a-b) case: fall back to the Pfaff series, whose
        # argument approaches 1 from below; slow but convergent
        x = z / (z - 1.0)
        val = (1.0 - z) ** (-a) * _series(a, c - b, c, x, tol, max_terms)
    return _maybe_real(val, a, b, c)


def _maybe_real(val, a, b, c):
    """Return a float when the parameters force a real value."""
    inputs_real = (abs(a.imag) < 1e-15 and abs(b.imag) < 1e-15 and abs(c.imag) < 1e-15)
    conjugate_pair = (abs(a.imag + b.imag) < 1e-15 and abs(a.real - b.real) < 1e-15
                      and abs(c.imag) < 1e-15)
    if inputs_real or conjugate_pair:
        return float(np.real(val))
    return complex(val)


def gamma_weight(kappa: float, alpha: float, mu):
    """|Gamma(kappa + i mu) Gamma(kappa - 2 alpha + i mu) / Gamma(2 i mu)|^2,
    vectorized over mu; the mu -> 0 limit is zero for regular parameters."""
    mu = np.asarray(mu, dtype=float)
    scalar = mu.ndim == 0
    mu = np.atleast_1d(mu)
    second = kappa - 2.0 * alpha
    if kappa <= 0 or _is_nonpositive_integer(second):
        if np.any(mu == 0.0):
            raise DomainError("pole configuration at mu = 0")
    out = np.zeros_like(mu)
    nz = mu != 0.0
    imu = 1j * mu[nz]
    logw = (loggamma(kappa + imu) + loggamma(second + imu) - loggamma(2.0 * imu))
    out[nz] = np.exp(2.0 * np.real(logw))
    return float(out[0]) if scalar else out


def pochhammer(x: float, m: int) -> float:
    """Rising factorial (x)_m."""
    return float(poch(x, m))
