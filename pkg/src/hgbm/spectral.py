"""Eigenvalue dynamics of J = w*w in three coordinate charts.

Charts for a single eigenvalue x of J:

    lambda:  x itself, in [0, 1)
    rho:     (1 + lambda) / (1 - lambda), in [1, inf)
    zeta:    arccosh(rho), in [0, inf), equivalently lambda = tanh(zeta/2)^2

The lambda and rho charts share the clock of the underlying coordinate
process; the zeta process runs on a clock four times faster (the zeta path at
time 4t equals arccosh of the rho path at time t), which makes its drift
coefficients asymptotically constant and is the preferred chart for long
horizons.

The lambda-chart SDE (Ito) is

    d lambda_j = 2 sqrt(lambda_j) (1 - lambda_j) dN_j
                 + 2 [(n-1) - lambda_j] (1 - lambda_j) dt
                 + 4 (1 - lambda_j)^2 sum_{l != j} lambda_l / (lambda_j - lambda_l) dt

and the zeta-chart SDE is the BC_k interacting system

    d zeta_j = dN_j + [ coth(zeta_j)/2 + (n-2k)/2 coth(zeta_j/2)
                 + 1/2 sum_{i != j} ( coth((zeta_j - zeta_i)/2)
                                    + coth((zeta_j + zeta_i)/2) ) ] dt.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np


CHARTS = ("lambda", "rho", "zeta")

# clamp for the lambda chart: values live in [0, 1 - LAMBDA_GUARD]
LAMBDA_GUARD = 1e-12


class ChartError(ValueError):
    """Raised on invalid chart names or out-of-domain values."""


class StepRejectedError(RuntimeError):
    """Raised when a step violates ordering or the gap guard."""


class CollisionError(ValueError):
    """Raised for degenerate (collided) starting configurations."""


@dataclass(frozen=True)
class SpectralState:
    values: np.ndarray  # ordered decreasing
    chart: str
    time: float = 0.0

    def __post_init__(self):
        if self.chart not in CHARTS:
            raise ChartError(f"unknown chart {self.chart!r}")
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if np.any(np.diff(v) > 0):
            raise ChartError("values must be sorted in decreasing order")
        lo = {"lambda": 0.0, "rho": 1.0, "zeta": 0.0}[self.chart]
        if v.size and v[-1] < lo - 1e-15:
            raise ChartError(f"values below the {self.chart}-chart domain")
        if self.chart == "lambda" and v.size and v[0] >= 1.0:
            raise ChartError("lambda values must be < 1")

    @property
    def k(self) -> int:
        return len(self.values)

    def min_gap(self) -> float:
        if self.k < 2:
            return np.inf
        return float(np.min(-np.diff(self.values)))


def _lam_to_zeta(lam):
    return 2.0 * np.arctanh(np.sqrt(np.clip(lam, 0.0, 1.0)))


def _zeta_to_lam(zeta):
    return np.tanh(zeta / 2.0) ** 2


def chart_convert(state: SpectralState, target: str) -> SpectralState:
    """Convert between charts; the zeta clock runs four times faster than the
    shared lambda/rho clock (t_zeta = 4 t_rho)."""
    if target not in CHARTS:
        raise ChartError(f"unknown chart {target!r}")
    if target == state.chart:
        return state
    v, t = state.values, state.time
    src = state.chart
    if src == "lambda":
        if np.any(v >= 1.0):
            raise ChartError("lambda = 1 maps to infinity")
        if target == "rho":
            return SpectralState((1.0 + v) / (1.0 - v), "rho", t)
        return SpectralState(_lam_to_zeta(v), "zeta", 4.0 * t)
    if src == "rho":
        if target == "lambda":
            return SpectralState((v - 1.0) / (v + 1.0), "lambda", t)
        return SpectralState(np.arccosh(np.maximum(v, 1.0)), "zeta", 4.0 * t)
    # src == zeta
    if target == "lambda":
        return SpectralState(_zeta_to_lam(v), "lambda", t / 4.0)
    if np.any(v > 350.0):
        raise ChartError("cosh overflow converting zeta to rho; use the lambda chart")
    return SpectralState(np.cosh(v), "rho", t / 4.0)


def spread_degenerate(values: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Deterministic eps-spread lifting repeated entries off the collision set."""
    v = np.asarray(values, dtype=float).copy()
    k = len(v)
    return v + eps * np.arange(k - 1, -1, -1)


# ---------------------------------------------------------------------------
# drifts and one-step maps (vectorized over leading batch dimensions)
# ---------------------------------------------------------------------------

def lambda_drift(lam: np.ndarray, n: int, k: int) -> np.ndarray:
    """Drift of the lambda chart; lam has shape (..., k)."""
    lam = np.asarray(lam, dtype=float)
    one = 1.0 - lam
    drift = 2.0 * ((n - 1) - lam) * one
    if k > 1:
        diff = lam[..., :, None] - lam[..., None, :]
        np.einsum('...jj->...j', diff)[...] = 1.0  # keep diagonal off the sum
        inter = lam[..., None, :] / diff
        np.einsum('...jj->...j', inter)[...] = 0.0
        drift = drift + 4.0 * one ** 2 * inter.sum(axis=-1)
    return drift


def lambda_diffusion(lam: np.ndarray) -> np.ndarray:
    return 2.0 * np.sqrt(np.clip(lam, 0.0, None)) * (1.0 - lam)


def zeta_drift(zeta: np.ndarray, n: int, k: int) -> np.ndarray:
    """Drift of the zeta chart (its own, four-times-faster clock)."""
    z = np.asarray(zeta, dtype=float)
    drift = 0.5 / np.tanh(z) + 0.5 * (n - 2 * k) / np.tanh(z / 2.0)
    if k > 1:
        diff = z[..., :, None] - z[..., None, :]
        np.einsum('...jj->...j', diff)[...] = 1.0
        summ = z[..., :, None] + z[..., None, :]
        inter = 0.5 * (1.0 / np.tanh(diff / 2.0) + 1.0 / np.tanh(summ / 2.0))
        np.einsum('...jj->...j', inter)[...] = 0.0
        drift = drift + inter.sum(axis=-1)
    return drift


def _check_ordered_gap(values, gap_guard):
    gaps = -np.diff(values, axis=-1)
    return (gaps > gap_guard).all()


def step_lambda(state: SpectralState, n: int, k: int, dt: float,
                rng: np.random.Generator, gap_guard: float = 1e-7) -> SpectralState:
    """One Euler-Maruyama step in the lambda chart."""
    if state.chart != "lambda":
        raise ChartError("state must be in the lambda chart")
    if dt == 0:
        return state
    lam = state.values
    if k > 1 and state.min_gap() <= gap_guard:
        raise StepRejectedError("gap below guard before step")
    xi = rng.standard_normal(k)
    new = lam + lambda_drift(lam, n, k) * dt + lambda_diffusion(lam) * np.sqrt(dt) * xi
    new = np.clip(new, 0.0, 1.0 - LAMBDA_GUARD)
    if k > 1 and not _check_ordered_gap(new, gap_guard):
        raise StepRejectedError("ordering or gap violated after step")
    return SpectralState(new, "lambda", state.time + dt)


def step_zeta(state: SpectralState, n: int, k: int, dt: float,
              rng: np.random.Generator, gap_guard: float = 1e-7,
              max_drift_move: float = 1.0) -> SpectralState:
    """One Euler-Maruyama step in the zeta chart (zeta-clock dt)."""
    if state.chart != "zeta":
        raise ChartError("state must be in the zeta chart")
    if dt == 0:
        return state
    z = state.values
    if np.any(z <= 0):
        raise StepRejectedError("zeta must be strictly positive to step")
    if k > 1 and state.min_gap() <= gap_guard:
        raise StepRejectedError("gap below guard before step")
    xi = rng.standard_normal(k)
    move = np.clip(zeta_drift(z, n, k) * dt, -max_drift_move, max_drift_move)
    new = z + move + np.sqrt(dt) * xi
    if np.any(new <= 0):
        raise StepRejectedError("step crossed zero")
    if k > 1 and not _check_ordered_gap(new, gap_guard):
        raise StepRejectedError("ordering or gap violated after step")
    return SpectralState(new, "zeta", state.time + dt)


# ---------------------------------------------------------------------------
# Vandermonde, Doob constant, diagnostics
# ---------------------------------------------------------------------------

def vandermonde_log(values: Sequence[float]) -> tuple[float, float]:
    """(sign, log magnitude) of prod_{l<j} (v_l - v_j); sign 0 on collisions."""
    v = np.asarray(values, dtype=float)
    k = len(v)
    sign, logmag = 1.0, 0.0
    for l in range(k):
        for j in range(l + 1, k):
            d = v[l] - v[j]
            if d == 0.0:
                return 0.0, -np.inf
            sign *= np.sign(d)
            logmag += np.log(abs(d))
    return sign, logmag


def vandermonde(values: Sequence[float]) -> float:
    sign, logmag = vandermonde_log(values)
    return float(sign * np.exp(logmag))


def doob_constant(n: int, k: int) -> float:
    """Additive constant of the Vandermonde transform, k(k-1)(3n+2-4k)/3."""
    return k * (k - 1) * (3 * n + 2 - 4 * k) / 3.0


class CollisionReport(NamedTuple):
    min_gap: float
    time_at_min: float
    rejections: int


def collision_diagnostics(times: np.ndarray, values: np.ndarray,
                          rejections: int = 0) -> CollisionReport:
    """Scan a stored path (times, (T, k) values) for the minimum pairwise gap."""
    values = np.asarray(values, dtype=float)
    times = np.asarray(times, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    if values.shape[1] < 2:
        return CollisionReport(np.inf, float(times[0]) if len(times) else 0.0, rejections)
    gaps = np.min(-np.diff(values, axis=1), axis=1)
    idx = int(np.argmin(gaps))
    return CollisionReport(float(gaps[idx]), float(times[idx]), rejections)


def km_transition_density(rho0: Sequence[float], rho: Sequence[float], t: float,
                          n: int, k: int, kernel=None) -> float:
    """Karlin-McGregor transition density of the ordered rho process:
    exp(-doob_constant(n,k) t) V(rho)/V(rho0) det(q_t(rho0_j, rho_a))."""
    rho0 = np.asarray(rho0, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if t <= 0:
        raise ValueError("t must be positive")
    s0, logv0 = vandermonde_log(rho0)
    if s0 == 0.0:
        raise CollisionError("rho0 has a collision (Vandermonde zero)")
    s1, logv1 = vandermonde_log(rho)
    if s1 == 0.0:
        return 0.0
    if kernel is None:
        from hgbm.kernels import JacobiHeatKernel, KernelParams
        kernel = JacobiHeatKernel(KernelParams(n=n, k=k, alpha=0.0), t)
    qmat = np.empty((k, k))
    for j in range(k):
        qmat[j, :] = kernel.row(rho0[j], rho)
    sign, logdet = np.linalg.slogdet(qmat)
    if sign == 0.0:
        return 0.0
    log_total = -doob_constant(n, k) * t + (logv1 - logv0) + logdet
    return float(s1 * s0 * sign * np.exp(log_total))
