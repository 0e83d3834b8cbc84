"""Closed-form Laplace transforms of the trace functional and the operator
intertwining check.

Two independent analytic routes are implemented for
E[exp(-2 alpha^2 int_0^t tr J ds)] started from the origin:

* ``km_laplace_transform``: the determinantal formula built from the drifted
  Jacobi-Fourier heat kernel (any rank k),
* ``rank_one_laplace``: the rank-one series expansion through the hyperbolic
  heat kernel, binomial-Pochhammer coefficients c_j and tanh moments of the
  hyperbolic radial distance.

Their agreement (and agreement with Monte Carlo) is the main analytic
cross-check of the package.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import gammaln

from hgbm.kernels import (
    DEFAULT_QUAD,
    JacobiHeatKernel,
    KernelParams,
    QuadratureConfig,
    hyperbolic_heat_kernel,
    hyperbolic_volume_weight,
)
from hgbm.spectral import CollisionError, vandermonde_log


class TruncationError(RuntimeError):
    """Raised when the series tail bound exceeds the requested tolerance."""


def laplace_series_coeff(j: int, alpha: float) -> float:
    """Taylor coefficient c_j of (1-y)^alpha 2F1(alpha+1/2, alpha; 1/2; y),

        c_j = (1/j!) sum_m C(j,m) (alpha+1/2)_m (alpha)_m (-alpha)_{j-m} / (1/2)_m,

    computed in log-magnitude/sign form (0 < alpha < 1 keeps every factor's
    sign explicit)."""
    if j < 1:
        raise ValueError("j must be >= 1")
    if alpha == 0.0:
        return 0.0
    if alpha >= 1.0:
        raise ValueError("series coefficients are used with alpha < 1")
    total = 0.0
    for m in range(j + 1):
        q = j - m
        logmag = gammaln(j + 1) - gammaln(m + 1) - gammaln(q + 1) - gammaln(j + 1)
        sign = 1.0
        if m > 0:
            logmag += (gammaln(alpha + 0.5 + m) - gammaln(alpha + 0.5)
                       + gammaln(alpha + m) - gammaln(alpha)
                       - gammaln(0.5 + m) + gammaln(0.5))
        if q > 0:
            sign = -1.0
            logmag += np.log(alpha) + gammaln(q - alpha) - gammaln(1.0 - alpha)
        total += sign * np.exp(logmag)
    return float(total)


def laplace_series_coeff_bound(j: int, alpha: float) -> float:
    """Upper majorant (alpha+1/2)_j (alpha)_j / (j! (1/2)_j)."""
    if alpha == 0.0:
        return 0.0
    logmag = (gammaln(alpha + 0.5 + j) - gammaln(alpha + 0.5)
              + gammaln(alpha + j) - gammaln(alpha)
              - gammaln(j + 1) - gammaln(0.5 + j) + gammaln(0.5))
    return float(np.exp(logmag))


@dataclass(frozen=True)
class LaplaceEstimate:
    value: float
    truncation_bound: float


def tanh_moments(n: int, t: float, jmax: int,
                 quad: QuadratureConfig | None = None) -> np.ndarray:
    """E[tanh^{2j}(d(0, B_t))], j = 1..jmax, for Brownian motion on H^{2n+1},
    by quadrature of the radial density."""
    quad = quad if quad is not None else DEFAULT_QUAD
    x_max = quad.resolve_x_max(t)
    xs, wts = quad.radial_grid(x_max)
    dens = hyperbolic_heat_kernel(xs, t, n) * hyperbolic_volume_weight(xs, n)
    th2 = np.tanh(xs) ** 2
    moments = np.empty(jmax + 1)
    power = np.ones_like(xs)
    moments[0] = float(np.dot(wts, dens))
    for j in range(1, jmax + 1):
        power = power * th2
        moments[j] = float(np.dot(wts, dens * power))
    return moments


def rank_one_laplace(n: int, alpha: float, t: float, jmax: int = 200,
                     quad: QuadratureConfig | None = None,
                     tail_tol: float = 1e-4) -> LaplaceEstimate:
    """E[exp(-2 alpha^2 int_0^t tr J ds)] from the origin in rank one.

    ``n`` is the series dimension parameter (the ambient shape (N, k=1) maps
    to n = N - 1; the complex hyperbolic target has complex dimension n).

        value = exp(-2 alpha^2 t) (1 + sum_{j>=1} c_j(alpha) I_j),
        I_j   = [(1/2)_j / (n+1/2)_j] E[tanh^{2j}(d(0, B_t))].
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    damp = float(np.exp(-2.0 * alpha * alpha * t))
    if alpha == 0.0:
        return LaplaceEstimate(1.0, 0.0)
    moments = tanh_moments(n, t, jmax + 1, quad)
    total = 1.0
    for j in range(1, jmax + 1):
        ratio = np.exp(gammaln(0.5 + j) - gammaln(0.5)
                       - gammaln(n + 0.5 + j) + gammaln(n + 0.5))
        total += laplace_series_coeff(j, alpha) * ratio * moments[j]
    # tail: c_j <= bound_j and E[tanh^{2j}] decreases in j
    tail = 0.0
    last_moment = moments[jmax + 1]
    for j in range(jmax + 1, jmax + 200001):
        b = np.exp(gammaln(alpha + 0.5 + j) - gammaln(alpha + 0.5)
                   + gammaln(alpha + j) - gammaln(alpha)
                   - gammaln(j + 1.0) - gammaln(n + 0.5 + j) + gammaln(n + 0.5))
        tail += b
        if b < 1e-4 * tail / (j - jmax):
            break
    tail *= last_moment * damp
    value = damp * total
    if tail > tail_tol * max(abs(value), 1e-300):
        raise TruncationError(f"tail bound {tail:.3e} above tolerance at jmax={jmax}")
    return LaplaceEstimate(float(value), float(tail))


def km_laplace_transform(rho0, n: int, k: int, alpha: float, t: float,
                         quad: QuadratureConfig | None = None) -> float:
    """Determinantal Laplace transform of the trace functional,

        exp([6 alpha (n-2k+1) - (k-1)(3n+2-4k)] k t / 3)
        prod_j (1 + rho_j(0))^alpha / V(rho(0))
        det( int_1^inf u^{a-1} (1+u)^{-alpha} q_t(rho_j(0), u) du )_{a,j},

    with q_t the drifted-generator heat kernel."""
    rho0 = np.atleast_1d(np.asarray(rho0, dtype=float))
    if len(rho0) != k:
        raise ValueError("rho0 must have length k")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if t <= 0:
        raise ValueError("t must be positive")
    sign0, logv0 = vandermonde_log(rho0)
    if sign0 == 0.0:
        raise CollisionError("rho0 has a collision (Vandermonde zero)")
    quad = quad if quad is not None else DEFAULT_QUAD
    params = KernelParams(n=n, k=k, alpha=alpha)
    kern = JacobiHeatKernel(params, t, quad, drifted=True)
    r_max = kern.default_r_max(float(np.max(rho0)))
    rs, wts = quad.radial_grid(r_max)
    us = np.cosh(2.0 * rs)
    jac = 2.0 * np.sinh(2.0 * rs)
    damp = (1.0 + us) ** (-alpha)
    entries = np.empty((k, k))
    for j in range(k):
        q_row = kern.row(rho0[j], us)
        base = wts * jac * damp * q_row
        for a in range(1, k + 1):
            entries[a - 1, j] = float(np.dot(base, us ** (a - 1)))
    sign_d, logdet = np.linalg.slogdet(entries)
    if sign_d == 0.0:
        return 0.0
    # the decreasing-chamber Vandermonde and the increasing-power moment
    # determinant differ by the permutation parity of the reversal
    chamber_parity = -1.0 if (k * (k - 1) // 2) % 2 else 1.0
    log_pref = ((6.0 * alpha * (n - 2 * k + 1) - (k - 1) * (3 * n + 2 - 4 * k))
                * k * t / 3.0)
    log_pref += alpha * np.sum(np.log1p(rho0)) - logv0
    return float(chamber_parity * sign0 * sign_d * np.exp(log_pref + logdet))


# ---------------------------------------------------------------------------
# intertwining of the hyperbolic Jacobi operator and the Maass radial operator
# ---------------------------------------------------------------------------

def intertwining_defect(f: Callable[[float], float], r: float, alpha: float,
                        m: int, h: float = 1e-4) -> float:
    """Finite-difference defect of

        H[cosh^{-2a} f](r) + ((2a+m)^2 / 2) cosh^{-2a}(r) f(r)
            = cosh^{-2a}(r) L[f](r),

    where H = (1/2){d^2 + [(2m-1) coth r + (4a+1) tanh r] d} and L is the
    shifted Maass radial operator
    (1/2) d^2 + [(m-1/2) coth r + (1/2) tanh r] d + 2a^2/cosh^2 r + m^2/2."""
    if r <= h:
        raise ValueError("r must exceed the difference step")

    def d1(fn, x):
        return (fn(x + h) - fn(x - h)) / (2.0 * h)

    def d2(fn, x):
        return (fn(x + h) - 2.0 * fn(x) + fn(x - h)) / (h * h)

    def g(x):
        return np.cosh(x) ** (-2.0 * alpha) * f(x)

    H_g = 0.5 * (d2(g, r) + ((2 * m - 1) / np.tanh(r) + (4 * alpha + 1) * np.tanh(r)) * d1(g, r))
    L_f = (0.5 * d2(f, r)
           + ((m - 0.5) / np.tanh(r) + 0.5 * np.tanh(r)) * d1(f, r)
           + (2.0 * alpha * alpha / np.cosh(r) ** 2 + m * m / 2.0) * f(r))
    lhs = H_g + 0.5 * (2.0 * alpha + m) ** 2 * g(r)
    rhs = np.cosh(r) ** (-2.0 * alpha) * L_f
    return float(abs(lhs - rhs))
