"""Brownian motion on the hyperbolic complex Grassmannian in inhomogeneous
coordinates w (a strict contraction in C^{(n-k) x k}), the invariant measure,
the carre du champ / generator evaluated by Wirtinger finite differences, and
the exact contraction-matrix identities used throughout.

The driftless Ito SDE for the coordinate process is

    dw = sqrt(I - w w*) dB sqrt(I - w* w),

with dB a complex Brownian increment whose real and imaginary parts each have
variance dt per entry, so that

    dw_{ij} d(conj w)_{i'j'} = 2 (I - w w*)_{ii'} (I - w* w)_{j'j} dt.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from hgbm.group import BlockGroupElement


class ContractionError(ValueError):
    """Raised when I - w*w is not positive definite."""


class ProjectionError(RuntimeError):
    """Raised when the Z block of a group element is numerically singular."""


class StepRejectedError(RuntimeError):
    """Raised when a step leaves the contraction set; callers halve dt."""


@dataclass
class GrassmannPoint:
    """Inhomogeneous coordinate w with I_k - w*w positive definite."""

    w: np.ndarray  # (n-k, k)

    @property
    def J(self) -> np.ndarray:
        return self.w.conj().T @ self.w

    def contraction_margin(self) -> float:
        """Smallest eigenvalue of I - w*w (positive on the domain)."""
        svals = np.linalg.svd(self.w, compute_uv=False)
        top = svals[0] if len(svals) else 0.0
        return float(1.0 - top * top)

    def require_contraction(self, guard: float = 0.0):
        if self.contraction_margin() <= guard:
            raise ContractionError("I - w*w is not positive definite enough")


def _as_w(x) -> np.ndarray:
    return x.w if isinstance(x, GrassmannPoint) else np.asarray(x, dtype=complex)


def sqrtm_psd(mat: np.ndarray, clamp: float = -1e-14) -> np.ndarray:
    """Hermitian square root with tiny negative eigenvalues clamped to zero."""
    vals, vecs = np.linalg.eigh(mat)
    if np.min(vals) < clamp:
        raise ContractionError(f"matrix is not PSD: min eigenvalue {np.min(vals):.3e}")
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def project_to_grassmann(U: BlockGroupElement, cond_threshold: float = 1e12) -> GrassmannPoint:
    """w = X Z^{-1}; Z is invertible for every group element but may be
    numerically degenerate after long horizons."""
    cond = np.linalg.cond(U.Z)
    if not np.isfinite(cond) or cond > cond_threshold:
        raise ProjectionError(f"Z block numerically singular (cond {cond:.3g})")
    w = np.linalg.solve(U.Z.conj().T, U.X.conj().T).conj().T
    return GrassmannPoint(w=w)


def step_grassmann(point: GrassmannPoint, dt: float, rng: np.random.Generator,
                   guard: float = 1e-10) -> GrassmannPoint:
    """One Euler-Maruyama step of the driftless coordinate SDE."""
    w = point.w
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    if dt == 0:
        return GrassmannPoint(w=w.copy())
    p, k = w.shape
    if point.contraction_margin() < guard:
        raise StepRejectedError("contraction margin below boundary guard")
    db = (rng.standard_normal((p, k)) + 1j * rng.standard_normal((p, k))) * np.sqrt(dt)
    left = sqrtm_psd(np.eye(p) - w @ w.conj().T)
    right = sqrtm_psd(np.eye(k) - w.conj().T @ w)
    out = GrassmannPoint(w=w + left @ db @ right)
    if out.contraction_margin() < guard:
        raise StepRejectedError("step left the contraction set")
    return out


def invariant_density(point, n: int) -> float:
    """det(I - w*w)^{-n}, the invariant density w.r.t. Lebesgue measure."""
    w = _as_w(point)
    m = np.eye(w.shape[1]) - w.conj().T @ w
    sign, logdet = np.linalg.slogdet(m)
    if sign <= 0:
        raise ContractionError("w is not a strict contraction")
    return float(np.exp(-n * logdet))


# ---------------------------------------------------------------------------
# Wirtinger finite differences
# ---------------------------------------------------------------------------

@dataclass
class ScalarField:
    """Deterministic complex-valued function of the coordinate matrix."""

    fn: Callable[[np.ndarray], complex]
    smoothness_radius: float = np.inf

    def __call__(self, w: np.ndarray) -> complex:
        return complex(self.fn(w))


def _wirtinger_first(f, w, i, j, h):
    """(d/dw_ij f, d/dwbar_ij f) by central differences on Re/Im parts."""
    e = np.zeros_like(w)
    e[i, j] = h
    dx = (f(w + e) - f(w - e)) / (2 * h)
    dy = (f(w + 1j * e) - f(w - 1j * e)) / (2 * h)
    return 0.5 * (dx - 1j * dy), 0.5 * (dx + 1j * dy)


def _mixed_second(f, w, i, j, i2, j2, h):
    """d^2 f / (dw_ij dwbar_{i2 j2}) by mixed central differences."""

    def d2(e1, e2):
        if (e1 == e2).all():
            return (f(w + e1) - 2 * f(w) + f(w - e1)) / (h * h)
        return (f(w + e1 + e2) - f(w + e1 - e2) - f(w - e1 + e2) + f(w - e1 - e2)) / (4 * h * h)

    ex1 = np.zeros_like(w); ex1[i, j] = h
    ex2 = np.zeros_like(w); ex2[i2, j2] = h
    dxx = d2(ex1, ex2)
    dyy = d2(1j * ex1, 1j * ex2)
    dxy = d2(ex1, 1j * ex2)
    dyx = d2(1j * ex1, ex2)
    return 0.25 * ((dxx + dyy) + 1j * (dxy - dyx))


def _coef(w):
    p, k = w.shape
    left = np.eye(p) - w @ w.conj().T    # (I - w w*)_{i i'}
    right = np.eye(k) - w.conj().T @ w   # (I - w* w)_{j' j}
    return left, right


def carre_du_champ(f: ScalarField, g: ScalarField, point, h: float = 1e-4) -> complex:
    """Gamma(f,g)(w) = 2 sum A_{ii'jj'} (d_ij f dbar_i'j' g + d_ij g dbar_i'j' f)."""
    w = _as_w(point)
    p, k = w.shape
    left, right = _coef(w)
    df = np.empty((p, k), dtype=complex); dbf = np.empty((p, k), dtype=complex)
    dg = np.empty((p, k), dtype=complex); dbg = np.empty((p, k), dtype=complex)
    for i in range(p):
        for j in range(k):
            df[i, j], dbf[i, j] = _wirtinger_first(f, w, i, j, h)
            dg[i, j], dbg[i, j] = _wirtinger_first(g, w, i, j, h)
    total = 0.0 + 0.0j
    for i in range(p):
        for j in range(k):
            for i2 in range(p):
                for j2 in range(k):
                    a = left[i, i2] * right[j2, j]
                    total += a * (df[i, j] * dbg[i2, j2] + dg[i, j] * dbf[i2, j2])
    return 2.0 * total


def apply_generator(f: ScalarField, point, h: float = 1e-4) -> complex:
    """Laplace-Beltrami operator in inhomogeneous coordinates,
    4 sum A_{ii'jj'} d^2 f / (dw_ij dwbar_i'j')."""
    w = _as_w(point)
    p, k = w.shape
    left, right = _coef(w)
    total = 0.0 + 0.0j
    for i in range(p):
        for j in range(k):
            for i2 in range(p):
                for j2 in range(k):
                    a = left[i, i2] * right[j2, j]
                    if abs(a) < 1e-15:
                        continue
                    total += a * _mixed_second(f, w, i, j, i2, j2, h)
    return 4.0 * total


# ---------------------------------------------------------------------------
# exact algebraic identities for contractions
# ---------------------------------------------------------------------------

class IdentityDefects(NamedTuple):
    inverse_product: float   # (I + w M^{-1} w*)(I - w w*) = I
    resolvent: float         # I + w M^{-1} w* = (I - w w*)^{-1}
    trace_symmetry: float    # the two sandwiched trace forms agree


def contraction_identity_defects(point, test_matrix: np.ndarray | None = None,
                                 rng: np.random.Generator | None = None) -> IdentityDefects:
    """Frobenius defects of the exact resolvent identities on the contraction
    set.  The resolvent and trace comparisons are normalized by the size of
    the compared objects, so near the boundary the defects stay at the
    conditioning floor eps / margin rather than growing with the resolvent."""
    w = _as_w(point)
    p, k = w.shape
    m = np.eye(k) - w.conj().T @ w
    if np.min(np.linalg.eigvalsh(m)) <= 0:
        raise ContractionError("w is not a strict contraction")
    if test_matrix is None:
        gen = rng if rng is not None else np.random.default_rng(0)
        test_matrix = gen.standard_normal((p, k)) + 1j * gen.standard_normal((p, k))
    minv = np.linalg.inv(m)
    pmat = np.eye(p) - w @ w.conj().T
    lhs = np.eye(p) + w @ minv @ w.conj().T
    d1 = float(np.linalg.norm(lhs @ pmat - np.eye(p)))
    pinv = np.linalg.inv(pmat)
    d2 = float(np.linalg.norm(lhs - pinv) / max(np.linalg.norm(pinv), 1.0))
    a = test_matrix
    t1 = np.trace(pinv @ a @ minv @ a.conj().T)
    t2 = np.trace(minv @ a.conj().T @ pinv @ a)
    d3 = float(abs(t1 - t2) / max(abs(t1), abs(t2), 1.0))
    return IdentityDefects(d1, d2, d3)


def kahler_metric_defect(point, h: float = 1e-4) -> float:
    """Max entrywise difference between the matrix-form metric coefficients
    M^{-1}_{bd} P^{-1}_{ca} and the mixed Wirtinger derivatives of
    -log det(I - w*w) evaluated by finite differences.  Entries are compared
    relative to max(1, |coefficient|) since both the coefficients and the
    difference-quotient truncation grow with the inverse contraction margin."""
    w = _as_w(point)
    p, k = w.shape
    m = np.eye(k) - w.conj().T @ w
    pmat = np.eye(p) - w @ w.conj().T
    minv = np.linalg.inv(m)
    pinv = np.linalg.inv(pmat)

    def neglogdet(x):
        sign, logdet = np.linalg.slogdet(np.eye(k) - x.conj().T @ x)
        return -logdet

    worst = 0.0
    for a in range(p):
        for b in range(k):
            for c in range(p):
                for d in range(k):
                    fd = _mixed_second(neglogdet, w, a, b, c, d, h)
                    exact = minv[b, d] * pinv[c, a]
                    worst = max(worst, abs(fd - exact) / max(1.0, abs(exact)))
    return worst
