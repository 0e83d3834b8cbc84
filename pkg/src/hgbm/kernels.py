"""Heat kernels of the radial generators: the Jacobi-Fourier kernel on
[1, infinity), the odd-dimensional hyperbolic heat kernel, and the radial
kernel of the shifted Maass Laplacian on complex hyperbolic space.

The u-diffusion with generator

    2 (u^2 - 1) d^2/du^2 + 2 [(n+2-2k+2a) u + n-2k-2a] d/du,      u >= 1,

maps under u = cosh(2r) to (one half of) the Jacobi operator with parameters
(n-2k, 2a).  Its heat kernel with respect to du is computed by the
Jacobi-Fourier inversion integral

    q_t(u1, u2) = C (u2-1)^{n-2k} (u2+1)^{b} *
                  int_0^inf exp(-2t(mu^2 + A^2)) phi_mu(r1) phi_mu(r2) W(mu) dmu

with A the half-sum parameter, phi_mu the hypergeometric eigenfunctions
2F1(A+i mu, A-i mu; n-2k+1; -sinh^2 r), W the squared Gamma weight, and
C = 1 / (pi 2^{n-2k+b+2} Gamma(n-2k+1)^2).

Two modes are exposed.  ``jacobi_heat_kernel`` keeps the spectral data of the
alpha = 0 operator and lets alpha enter only through the Gamma weight (A =
kappa, b = 0); this is exact at alpha = 0 (normalization and detailed balance
are enforced by tests).  ``JacobiHeatKernel(..., drifted=True)`` uses the full
spectral data of the drifted generator (A = kappa + alpha, b = 2 alpha, weight
Gamma(kappa+alpha+i mu) Gamma(kappa-alpha+i mu)), which is the transition
density needed by the determinantal Laplace-transform formula; the two
coincide exactly at alpha = 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gamma as _gamma

import numpy as np
from scipy.special import loggamma

from hgbm.special import AccuracyError, DomainError, gamma_weight


@dataclass(frozen=True)
class QuadratureConfig:
    """Spectral and spatial truncation plus panel Gauss-Legendre sizes.

    ``mu_max = None`` resolves to sqrt(8 ln 10 / t), making the spectral
    factor exp(-2 t mu_max^2) equal to 1e-16 at the configured t.
    """

    mu_max: float | None = None
    panels: int = 24
    nodes_per_panel: int = 16
    x_max: float | None = None

    def resolve_mu_max(self, t: float) -> float:
        mu = self.mu_max if self.mu_max is not None else np.sqrt(8.0 * np.log(10.0) / t)
        if np.exp(-2.0 * t * mu * mu) > 1.0001e-16:
            raise ValueError("mu_max too small: spectral tail above 1e-16")
        return mu

    def resolve_x_max(self, t: float) -> float:
        return self.x_max if self.x_max is not None else 8.0 * np.sqrt(t) + 10.0

    def mu_grid(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        return panel_gauss(0.0, self.resolve_mu_max(t), self.panels, self.nodes_per_panel)

    def radial_grid(self, r_max: float) -> tuple[np.ndarray, np.ndarray]:
        panels = max(12, int(np.ceil(2.0 * r_max)))
        return panel_gauss(0.0, r_max, panels, self.nodes_per_panel)


DEFAULT_QUAD = QuadratureConfig()


@dataclass(frozen=True)
class KernelParams:
    """Shape (n, k) and spectral parameter alpha >= 0."""

    n: int
    k: int
    alpha: float = 0.0

    def __post_init__(self):
        if self.k < 1 or self.k > self.n - self.k:
            raise ValueError(f"need 1 <= k <= n - k, got n={self.n}, k={self.k}")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")

    @property
    def kappa(self) -> float:
        return (self.n - 2 * self.k + 1) / 2.0

    @property
    def m(self) -> int:
        """Hyperbolic dimension parameter n - 2k + 1."""
        return self.n - 2 * self.k + 1


def panel_gauss(a: float, b: float, panels: int, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights on [a, b]."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    xs = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    ws = (half[:, None] * w[None, :]).ravel()
    return xs, ws


# ---------------------------------------------------------------------------
# hypergeometric eigenfunctions phi_mu(-v) = 2F1(A+imu, A-imu; c; -v)
# ---------------------------------------------------------------------------

_SERIES_TOL = 5e-15
_SERIES_MAX = 400


def _phi_small(mus: np.ndarray, v: float, A: float, c: float) -> np.ndarray:
    """Direct series at z = -v for v <= 1/2; all-real arithmetic because
    (A+imu+m)(A-imu+m) = (A+m)^2 + mu^2."""
    mu2 = mus * mus
    term = np.ones_like(mus)
    total = np.ones_like(mus)
    z = -v
    for m in range(_SERIES_MAX):
        term = term * (((A + m) ** 2 + mu2) / ((c + m) * (m + 1.0))) * z
        total += term
        if np.max(np.abs(term)) <= _SERIES_TOL * max(np.max(np.abs(total)), 1e-30):
            return total
    raise AccuracyError("phi series (small v) did not converge")


def _phi_pfaff(mus: np.ndarray, v: float, A: float, c: float) -> np.ndarray:
    """Pfaff transformation for moderate v: (1+v)^{-(A+imu)} times a series
    at v/(1+v) < 1 with parameters (A+imu, c-A+imu; c)."""
    x = v / (1.0 + v)
    a = A + 1j * mus
    b = (c - A) + 1j * mus
    term = np.ones(len(mus), dtype=complex)
    total = np.ones(len(mus), dtype=complex)
    for m in range(4 * _SERIES_MAX):
        term = term * ((a + m) * (b + m) / ((c + m) * (m + 1.0))) * x
        total += term
        if np.max(np.abs(term)) <= _SERIES_TOL * max(np.max(np.abs(total)), 1e-30):
            break
    else:
        raise AccuracyError("phi series (pfaff) did not converge")
    pref = np.exp(-(A + 1j * mus) * np.log1p(v))
    return np.real(pref * total)


def _phi_large(mus: np.ndarray, v: float, A: float, c: float) -> np.ndarray:
    """Asymptotic-region connection formula for v >= 2 (argument -1/v):

    phi = 2 Re[ G(mu) v^{-(A+imu)} 2F1(A+imu, A+imu-c+1; 1+2imu; -1/v) ],
    G = Gamma(c) Gamma(-2imu) / (Gamma(A-imu) Gamma(c-A-imu)).

    Requires mu != 0 (quadrature grids never hit zero exactly)."""
    if np.any(mus == 0.0):
        raise DomainError("connection formula needs mu != 0; use a smaller v branch")
    imu = 1j * mus
    a = A + imu
    b2 = A + imu - c + 1.0
    c2 = 1.0 + 2.0 * imu
    x = -1.0 / v
    term = np.ones(len(mus), dtype=complex)
    total = np.ones(len(mus), dtype=complex)
    for m in range(_SERIES_MAX):
        term = term * ((a + m) * (b2 + m) / ((c2 + m) * (m + 1.0))) * x
        total += term
        if np.max(np.abs(term)) <= _SERIES_TOL * max(np.max(np.abs(total)), 1e-30):
            break
    else:
        raise AccuracyError("phi series (connection) did not converge")
    logpref = (loggamma(c) + loggamma(-2.0 * imu) - loggamma(A - imu)
               - loggamma(c - A - imu) - (A + imu) * np.log(v))
    return 2.0 * np.real(np.exp(logpref) * total)


def _phi_many_mu(mus: np.ndarray, v: float, A: float, c: float) -> np.ndarray:
    if v < 0:
        raise ValueError("v must be nonnegative")
    if v == 0.0:
        return np.ones_like(mus)
    if v <= 0.5:
        return _phi_small(mus, v, A, c)
    if v < 2.0 or np.any(mus == 0.0):
        return _phi_pfaff(mus, v, A, c)
    return _phi_large(mus, v, A, c)


def jacobi_function(mu: float, v: float, params: KernelParams) -> float:
    """F_mu(-v) = 2F1(kappa+imu, kappa-imu; n-2k+1; -v), real for real mu."""
    mus = np.atleast_1d(np.asarray(mu, dtype=float))
    vals = _phi_many_mu(mus, float(v), params.kappa, float(params.m))
    return float(vals[0]) if np.ndim(mu) == 0 else vals


# ---------------------------------------------------------------------------
# Jacobi-Fourier heat kernel on [1, infinity)
# ---------------------------------------------------------------------------

class JacobiHeatKernel:
    """Configured evaluator of q_t(u1, u2) with precomputed spectral data."""

    def __init__(self, params: KernelParams, t: float,
                 quad: QuadratureConfig | None = None, drifted: bool = False):
        if t <= 0:
            raise ValueError("t must be positive")
        self.params = params
        self.t = float(t)
        self.quad = quad if quad is not None else DEFAULT_QUAD
        self.drifted = drifted
        a = params.n - 2 * params.k
        alpha = params.alpha
        if drifted:
            self.A = params.kappa + alpha
            self.b_pow = 2.0 * alpha
            weight_kappa = params.kappa + alpha
        else:
            self.A = params.kappa
            self.b_pow = 0.0
            weight_kappa = params.kappa
        self.a_pow = float(a)
        self.c = float(a + 1)
        self.const = 1.0 / (np.pi * 2.0 ** (a + self.b_pow + 2.0) * _gamma(a + 1.0) ** 2)
        mus, wts = self.quad.mu_grid(self.t)
        self.mus = mus
        self.spectral = wts * np.exp(-2.0 * self.t * (mus ** 2 + self.A ** 2)) \
            * gamma_weight(weight_kappa, alpha, mus)
        self._phi_cache: dict[float, np.ndarray] = {}

    def phi(self, u: float) -> np.ndarray:
        u = float(u)
        if u < 1.0:
            if u < 1.0 - 1e-12:
                raise ValueError("u must be >= 1")
            u = 1.0
        hit = self._phi_cache.get(u)
        if hit is None:
            hit = _phi_many_mu(self.mus, (u - 1.0) / 2.0, self.A, self.c)
            if len(self._phi_cache) < 64:
                self._phi_cache[u] = hit
        return hit

    def row(self, u1: float, u2s: np.ndarray) -> np.ndarray:
        """q_t(u1, u2) for a vector of u2 values."""
        u2s = np.atleast_1d(np.asarray(u2s, dtype=float))
        f1 = self.phi(u1) * self.spectral
        mat = np.empty((len(u2s), len(self.mus)))
        for i, u2 in enumerate(u2s):
            mat[i] = self.phi(u2)
        pref = self.const * (u2s - 1.0) ** self.a_pow * (u2s + 1.0) ** self.b_pow
        return pref * (mat @ f1)

    def __call__(self, u1: float, u2: float) -> float:
        return float(self.row(u1, u2)[0])

    def default_r_max(self, u1: float) -> float:
        """Radial truncation for integrals against the kernel: the r-process
        drifts at rate a + b + 1, and integrating far beyond the Gaussian
        envelope only accumulates the cancellation floor of the oscillatory
        spectral integral (amplified by the (u-1)^a prefactor), so the cutoff
        tracks drift + 6 standard deviations."""
        r1 = 0.5 * np.arccosh(max(u1, 1.0))
        drift = self.a_pow + self.b_pow + 1.0
        return r1 + drift * self.t + 6.0 * np.sqrt(self.t) + 0.5

    def integrate(self, u1: float, fn=None, r_max: float | None = None) -> float:
        """int_1^inf fn(u) q_t(u1, u) du by the cosh(2r) substitution."""
        if r_max is None:
            r_max = self.default_r_max(u1)
        rs, wts = self.quad.radial_grid(r_max)
        us = np.cosh(2.0 * rs)
        vals = self.row(u1, us) * 2.0 * np.sinh(2.0 * rs)
        if fn is not None:
            vals = vals * fn(us)
        return float(np.dot(wts, vals))


def jacobi_heat_kernel(u1: float, u2: float, t: float, params: KernelParams,
                       quad: QuadratureConfig | None = None,
                       check_convergence: bool = False) -> float:
    """q_t(u1, u2) with alpha entering only through the Gamma weight."""
    if u1 < 1.0 or u2 < 1.0:
        raise ValueError("u1, u2 must be >= 1")
    quad = quad if quad is not None else DEFAULT_QUAD
    val = JacobiHeatKernel(params, t, quad)(u1, u2)
    if check_convergence:
        finer = QuadratureConfig(mu_max=quad.mu_max, panels=2 * quad.panels,
                                 nodes_per_panel=quad.nodes_per_panel, x_max=quad.x_max)
        val2 = JacobiHeatKernel(params, t, finer)(u1, u2)
        if abs(val - val2) > 1e-6 * max(1.0, abs(val)):
            raise AccuracyError(f"panel refinement disagrees: {val} vs {val2}")
    return val


# ---------------------------------------------------------------------------
# hyperbolic heat kernel s_{t, 2m+1}
# ---------------------------------------------------------------------------

# Taylor coefficients of arccosh(1+e)^2 = sum_j U_COEFFS[j-1] e^j
_U_COEFFS = (2.0, -1.0 / 3.0, 4.0 / 45.0, -1.0 / 35.0, 16.0 / 1575.0,
             -8.0 / 2079.0, 32.0 / 21021.0, -4.0 / 6435.0, 256.0 / 984555.0,
             -128.0 / 1154725.0, 512.0 / 10669659.0, -128.0 / 6084351.0,
             2048.0 / 219712675.0, -1024.0 / 245714175.0)

# below this x the monomial recursion loses digits to coth/csch cancellation
_SMALL_X_SWITCH = 0.1


def _derivative_monomials(m: int, t: float) -> dict[tuple[int, int, int], float]:
    """Monomial representation of (-(1/sinh x) d/dx)^m exp(-x^2/2t) divided by
    the Gaussian: keys (p, q, r) stand for x^p coth(x)^q csch(x)^r."""
    poly = {(0, 0, 0): 1.0}
    for _ in range(m):
        new: dict[tuple[int, int, int], float] = {}

        def add(key, val):
            new[key] = new.get(key, 0.0) + val

        for (p, q, r), cf in poly.items():
            # derivative of the monomial
            if p:
                add((p - 1, q, r), -cf * p)      # sign from the -csch multiply
            if q:
                add((p, q - 1, r + 2), cf * q)
            if r:
                add((p, q + 1, r), cf * r)
            # the -(x/t) factor from the Gaussian, then -csch
            add((p + 1, q, r), cf / t)
        poly = {(p, q, r + 1): cf for (p, q, r), cf in new.items()}
    return poly


def _series_small_x(x: np.ndarray, t: float, m: int) -> np.ndarray:
    """(-d/dc)^m exp(-arccosh(c)^2 / 2t) at c = cosh x for small x, via the
    frozen Taylor expansion in e = c - 1."""
    order = min(m + 8, len(_U_COEFFS))
    h = np.zeros(order + 1)
    for j in range(1, order + 1):
        h[j] = -_U_COEFFS[j - 1] / (2.0 * t)
    g = np.zeros(order + 1)
    g[0] = 1.0
    for j in range(1, order + 1):
        g[j] = sum(i * h[i] * g[j - i] for i in range(1, j + 1)) / j
    eps = np.cosh(x) - 1.0
    out = np.zeros_like(x)
    fact = 1.0
    for j in range(m, order + 1):
        # j!/(j-m)! coefficient of the m-th derivative
        coef = g[j] * np.prod(np.arange(j - m + 1, j + 1, dtype=float))
        out += coef * eps ** (j - m)
    return (-1.0) ** m * out


def hyperbolic_heat_kernel(x, t: float, m: int):
    """s_{t, 2m+1}(cosh x): heat kernel of the (2m+1)-dimensional real
    hyperbolic space at distance x, with respect to the volume measure."""
    if m < 1:
        raise ValueError("m must be a positive integer")
    if t <= 0:
        raise ValueError("t must be positive")
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xs < 0):
        raise ValueError("x must be nonnegative")
    pref = np.exp(-m * m * t / 2.0) / ((2.0 * np.pi) ** m * np.sqrt(2.0 * np.pi * t))
    out = np.empty_like(xs)
    small = xs < _SMALL_X_SWITCH
    if np.any(~small):
        xb = xs[~small]
        poly = _derivative_monomials(m, t)
        coth = 1.0 / np.tanh(xb)
        csch = 1.0 / np.sinh(xb)
        acc = np.zeros_like(xb)
        for (p, q, r), cf in poly.items():
            acc += cf * xb ** p * coth ** q * csch ** r
        out[~small] = acc * np.exp(-xb * xb / (2.0 * t))
    if np.any(small):
        out[small] = _series_small_x(xs[small], t, m)
    out *= pref
    return float(out[0]) if np.ndim(x) == 0 else out


def spherical_volume_weight(r, m: int):
    """Volume-element density of the radial coordinate on the complex
    hyperbolic space of complex dimension m: 2 pi^m / Gamma(m)
    sinh^{2m-1}(r) cosh(r)."""
    r = np.asarray(r, dtype=float)
    return 2.0 * np.pi ** m / _gamma(m) * np.sinh(r) ** (2 * m - 1) * np.cosh(r)


def hyperbolic_volume_weight(x, m: int):
    """Volume-element density of the radial coordinate on H^{2m+1}:
    2 pi^{m+1/2} / Gamma(m+1/2) sinh^{2m}(x)."""
    x = np.asarray(x, dtype=float)
    return 2.0 * np.pi ** (m + 0.5) / _gamma(m + 0.5) * np.sinh(x) ** (2 * m)


# ---------------------------------------------------------------------------
# Maass radial kernel
# ---------------------------------------------------------------------------

def maass_kernel(r: float, t: float, m: int, alpha: float,
                 quad: QuadratureConfig | None = None) -> float:
    """Radial heat kernel v_t^{(m, alpha)}(0, r) of the shifted Maass Laplacian
    on the complex hyperbolic space of complex dimension m.

    Computed through the substitution cosh x = cosh r cosh theta, which removes
    the inverse-square-root endpoint singularity and turns the Gauss factor
    2F1(-2 alpha, 2 alpha; 1/2; (cosh r - cosh x)/(2 cosh r)) into its exact
    elementary value cosh(2 alpha theta):

        v_t(0, r) = 2 int_0^inf s_{t, 2m+1}(cosh r cosh theta)
                      cosh(2 alpha theta) d theta.

    The overall constant is pinned by the alpha = 0 normalization
    int_0^inf v_t(0, r) spherical_volume_weight(r, m) dr = 1.
    """
    if r < 0:
        raise ValueError("r must be nonnegative")
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    quad = quad if quad is not None else DEFAULT_QUAD
    x_max = max(quad.resolve_x_max(t), r + 6.0 * np.sqrt(t) + 2.0)
    cosh_r = np.cosh(r)
    theta_max = float(np.arccosh(max(np.cosh(x_max) / cosh_r, 1.0 + 1e-12)))
    thetas, wts = quad.radial_grid(theta_max)
    arg = cosh_r * np.cosh(thetas)
    xs = np.arccosh(arg)
    vals = hyperbolic_heat_kernel(xs, t, m) * np.cosh(2.0 * alpha * thetas)
    return float(2.0 * np.dot(wts, vals))


# ---------------------------------------------------------------------------
# dominating radial sampler
# ---------------------------------------------------------------------------

def sample_hyperbolic_radius(m: int, t: float, paths: int,
                             rng: np.random.Generator, dt: float = 1e-4,
                             x0: float = 1e-3) -> np.ndarray:
    """Euler-Maruyama sampler of dH = dB + m coth(H) dt started near zero;
    in law the radial distance of Brownian motion on H^{2m+1}."""
    steps = int(round(t / dt))
    h = np.full(paths, x0)
    sq = np.sqrt(dt)
    for _ in range(steps):
        drift = np.minimum(m / np.tanh(h), 4.0 / sq)
        h = h + drift * dt + sq * rng.standard_normal(paths)
        h = np.abs(h)
        np.maximum(h, 1e-12, out=h)
    return h
