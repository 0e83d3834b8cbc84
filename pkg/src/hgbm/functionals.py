"""Path functionals of the Grassmannian Brownian motion: the running trace
integral of J = w*w, the generalized stochastic area (the trace of the
u(k)-valued connection one-form integrated along the path), the unitary fiber
process it develops, the winding angle of det Z, and the exponential
change-of-measure martingale.

Sign convention: ``area_increment`` returns the increment of +int tr(eta),

    d int tr(eta) = -1/2 tr[ (I-J)^{-1/2} (dw* w - w* dw) (I-J)^{-1/2} ],

a purely imaginary quantity (the integrand matrix is anti-Hermitian).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hgbm.grassmann import ContractionError, sqrtm_psd


class UnwrapError(RuntimeError):
    """Raised when an angle increment is too large to unwrap unambiguously."""


class FiberContractError(ValueError):
    """Raised when a fiber increment is not skew-Hermitian."""


@dataclass
class FunctionalAccumulators:
    """Per-path running state for the path functionals."""

    trace_integral: float = 0.0
    area_im: float = 0.0
    theta: float = 0.0
    theta0: float = 0.0
    varrho: float = 1.0
    fiber: np.ndarray | None = None      # (k, k) unitary
    girsanov: float = 1.0
    last_trace: float = 0.0

    @classmethod
    def initial(cls, J0: np.ndarray, Z0: np.ndarray | None = None) -> "FunctionalAccumulators":
        k = J0.shape[0]
        acc = cls(last_trace=float(np.real(np.trace(J0))))
        if Z0 is not None:
            detz = np.linalg.det(Z0)
            acc.theta0 = acc.theta = float(np.angle(detz))
            acc.varrho = float(abs(detz))
            acc.fiber = fiber_start(Z0)
        else:
            acc.fiber = np.eye(k, dtype=complex)
        return acc


def accumulate_trace(acc: FunctionalAccumulators, J: np.ndarray, dt: float,
                     ) -> FunctionalAccumulators:
    """Trapezoidal update of int tr(J) ds."""
    tr = float(np.real(np.trace(J)))
    acc.trace_integral += 0.5 * (acc.last_trace + tr) * dt
    acc.last_trace = tr
    return acc


def area_integrand_matrix(w: np.ndarray, dw: np.ndarray) -> np.ndarray:
    """(I-J)^{-1/2} (dw* w - w* dw) (I-J)^{-1/2}, an anti-Hermitian k x k matrix."""
    k = w.shape[1]
    m = np.eye(k) - w.conj().T @ w
    vals = np.linalg.eigvalsh(m)
    if vals[0] <= 0:
        raise ContractionError("w is not a strict contraction")
    root_inv = np.linalg.inv(sqrtm_psd(m))
    s = dw.conj().T @ w - w.conj().T @ dw
    return root_inv @ s @ root_inv


def area_increment(w: np.ndarray, dw_ito: np.ndarray, dt: float | None = None) -> complex:
    """Increment of +int tr(eta) for an Ito increment dw at the point w."""
    return complex(-0.5 * np.trace(area_integrand_matrix(w, dw_ito)))


def eta_increment(w0: np.ndarray, w1: np.ndarray) -> np.ndarray:
    """Midpoint (Stratonovich) increment of the full u(k)-valued one-form over
    a path segment from w0 to w1, including the square-root commutator part
    whose trace vanishes."""
    k = w0.shape[1]
    dw = w1 - w0

    def pieces(w):
        m = np.eye(k) - w.conj().T @ w
        root = sqrtm_psd(m)
        return root, np.linalg.inv(root)

    root0, rinv0 = pieces(w0)
    root1, rinv1 = pieces(w1)
    rinv = 0.5 * (rinv0 + rinv1)
    wmid = 0.5 * (w0 + w1)
    core = 0.5 * rinv @ (wmid.conj().T @ dw - dw.conj().T @ wmid) @ rinv
    droot = root1 - root0
    comm = -0.5 * (rinv @ droot - droot @ rinv)
    return core + comm


def fiber_start(Z0: np.ndarray) -> np.ndarray:
    """Theta_0 = (Z0 Z0*)^{-1/2} Z0, the unitary polar factor of Z0."""
    root = sqrtm_psd(Z0 @ Z0.conj().T)
    return np.linalg.solve(root, Z0)


@dataclass
class FiberConfig:
    """Options for developing the unitary fiber along a coordinate path."""

    include_fiber_bm: bool = False   # compose with an independent U(k) BM
    z0: np.ndarray | None = None     # start block fixing theta_0 (default I)


def horizontal_lift(ws, config: FiberConfig | None = None,
                    rng: np.random.Generator | None = None,
                    dt: float | None = None) -> list[np.ndarray]:
    """Lift a coordinate path to the matrix pair (X; Z) through the developed
    fiber: each point maps to (w; I)(I - w*w)^{-1/2} Theta, optionally
    composed with an independent unitary Brownian motion (which leaves the
    projection unchanged)."""
    config = config or FiberConfig()
    ws = [np.asarray(w, dtype=complex) for w in ws]
    k = ws[0].shape[1]
    theta0 = fiber_start(config.z0) if config.z0 is not None else np.eye(k, dtype=complex)
    incs = [eta_increment(ws[i], ws[i + 1]) for i in range(len(ws) - 1)]
    thetas = solve_fiber(theta0, incs)
    if config.include_fiber_bm:
        if rng is None or dt is None:
            raise ValueError("include_fiber_bm needs rng and dt")
        omega = np.eye(k, dtype=complex)
        new_thetas = [thetas[0] @ omega]
        for th in thetas[1:]:
            # orthonormal-basis increments give complex entry variance 2 dt
            h = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
            du = np.sqrt(dt / 2.0) * (h - h.conj().T)
            omega = omega @ _expm_skew(du)
            new_thetas.append(th @ omega)
        thetas = new_thetas
    out = []
    for w, th in zip(ws, thetas):
        root_inv = np.linalg.inv(sqrtm_psd(np.eye(k) - w.conj().T @ w))
        out.append(np.vstack([w @ root_inv @ th, root_inv @ th]))
    return out


def _expm_skew(a: np.ndarray) -> np.ndarray:
    """expm of a skew-Hermitian matrix via the eigendecomposition of -i a."""
    h = -1j * a
    vals, vecs = np.linalg.eigh(0.5 * (h + h.conj().T))
    return (vecs * np.exp(1j * vals)) @ vecs.conj().T


def solve_fiber(theta0: np.ndarray, a_increments, skew_tol: float = 1e-8,
                restore_every: int = 64) -> list[np.ndarray]:
    """Integrate d Theta = (o d a) Theta through exponential midpoint steps.

    ``a_increments`` iterates over k x k skew-Hermitian increments of the
    integrated one-form; the returned list starts at theta0.
    """
    theta = np.array(theta0, dtype=complex)
    out = [theta.copy()]
    for m, da in enumerate(a_increments):
        da = np.asarray(da, dtype=complex)
        skew = np.linalg.norm(da + da.conj().T)
        scale = max(np.linalg.norm(da), 1e-30)
        if skew > skew_tol * max(1.0, scale):
            raise FiberContractError(f"increment is not skew-Hermitian (defect {skew:.3g})")
        theta = _expm_skew(da) @ theta
        if (m + 1) % restore_every == 0:
            theta = fiber_start(theta)  # unitary polar restoration
        out.append(theta.copy())
    return out


def winding_angle(detz_path: np.ndarray, theta0: float | None = None,
                  max_increment: float = np.pi / 2) -> tuple[np.ndarray, np.ndarray]:
    """Continuously unwrapped argument and modulus along a det Z path."""
    detz = np.asarray(detz_path, dtype=complex)
    if np.any(detz == 0):
        raise ValueError("det Z vanishes along the path")
    ratios = detz[1:] / detz[:-1]
    darg = np.angle(ratios)
    if np.any(np.abs(darg) >= max_increment):
        raise UnwrapError("angle increment >= pi/2; refine dt")
    start = float(np.angle(detz[0])) if theta0 is None else theta0
    theta = start + np.concatenate([[0.0], np.cumsum(darg)])
    return theta, np.abs(detz)


def girsanov_martingale(times: np.ndarray, J_path: np.ndarray, alpha: float,
                        n: int, k: int) -> float:
    """Exponential martingale value at the end of a J path,

        M_t = exp(-2 a k (n-k) t) [det(I-J_0)/det(I-J_t)]^a
              exp(-2 a^2 int tr J ds),

    with the trace integral accumulated by the trapezoid rule."""
    times = np.asarray(times, dtype=float)
    J_path = np.asarray(J_path, dtype=complex)
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    traces = np.real(np.einsum('tii->t', J_path))
    trace_integral = float(np.trapezoid(traces, times))
    t = float(times[-1] - times[0])
    _, ld0 = np.linalg.slogdet(np.eye(k) - J_path[0])
    _, ldt = np.linalg.slogdet(np.eye(k) - J_path[-1])
    return girsanov_from_parts(ld0, ldt, trace_integral, alpha, n, k, t)


def girsanov_from_parts(logdet_m0: float, logdet_mt: float, trace_integral: float,
                        alpha: float, n: int, k: int, t: float) -> float:
    log_m = (-2.0 * alpha * k * (n - k) * t
             + alpha * (logdet_m0 - logdet_mt)
             - 2.0 * alpha * alpha * trace_integral)
    return float(np.exp(log_m))
