"""Monte Carlo path engine with reproducible per-path Philox streams.

Streams are keyed by (seed, path index), so results are independent of
execution order and path count; each path consumes its stream in a fixed
order (window draws first, then any rejection re-draws).

Simulation routes (``RunConfig.chart``):

* ``matrix``     group Brownian motion dU = U o dA.  For short horizons the
                 raw element is propagated ("raw" engine).  For long horizons
                 raw coordinates degenerate in double precision (the group
                 entries grow like exp(c t) while the Grassmannian coordinate
                 pins against its boundary), so the default "reduced" engine
                 propagates only the bounded block ratio s = Z^{-1} W together
                 with scalar accumulators.  Exact identities used:

                     tr J           = ||s||_F^2
                     d log det Z    = log det(s G12 + G22)   (G the step factor)
                     s'             = (s G12 + G22)^{-1} (s G11 + G21)
                     d int tr(eta)  = i Im tr(s dgamma)

                 all consequences of the pseudo-unitarity block relations.
* ``grassmann``  the intrinsic driftless coordinate SDE for w.
* ``lambda``     eigenvalue chart on [0,1).
* ``zeta``       eigenvalue chart with asymptotically constant drifts (its
                 clock runs four times faster; ``dt`` always refers to the
                 underlying clock).
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from hgbm.grassmann import GrassmannPoint, step_grassmann
from hgbm.grassmann import StepRejectedError as GrassmannRejected
from hgbm.group import GroupShape, _basis_cached, exp_factor, reproject_matrix
from hgbm.spectral import SpectralState, step_lambda, step_zeta, StepRejectedError

CHARTS = ("matrix", "grassmann", "lambda", "zeta")
ENGINES = ("auto", "raw", "reduced")


class ConfigError(ValueError):
    """Invalid run configuration."""


class RunError(RuntimeError):
    """Raised when too many paths fail."""


@dataclass
class RunConfig:
    n: int
    k: int
    horizon: float
    dt: float
    paths: int
    seed: int
    chart: str = "matrix"
    alpha: float = 0.25
    scenario: str = "simulate"
    engine: str = "auto"
    scheme: str = "cayley"
    lambda0: Sequence[float] | None = None
    zeta0: Sequence[float] | None = None
    max_failure_fraction: float = 0.01
    out: str | None = None
    fmt: str = "csv"

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigError("dt must be positive")
        if self.horizon < 0 or (self.horizon > 0 and self.horizon < self.dt):
            raise ConfigError("need horizon = 0 or horizon >= dt")
        if self.paths < 1:
            raise ConfigError("paths must be >= 1")
        if self.seed < 0 or self.seed > 2 ** 64 - 1:
            raise ConfigError("seed must fit an unsigned 64-bit integer")
        steps = round(self.horizon / self.dt)
        if self.horizon > 0 and abs(steps * self.dt - self.horizon) > 1e-9 * self.horizon:
            raise ConfigError("horizon must be an integer multiple of dt")
        if self.chart not in CHARTS:
            raise ConfigError(f"chart must be one of {CHARTS}")
        if self.engine not in ENGINES:
            raise ConfigError(f"engine must be one of {ENGINES}")
        if self.k < 1 or self.k > self.n - self.k:
            raise ConfigError(f"need 1 <= k <= n - k, got n={self.n}, k={self.k}")
        if self.fmt not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if self.chart == "matrix" and self.resolved_engine() == "reduced" \
                and self.scheme == "heun":
            raise ConfigError(
                "the reduced engine needs a constraint-preserving scheme "
                "(cayley or exponential); heun is only meaningful with the "
                "raw engine and per-step reprojection")

    @property
    def shape(self) -> GroupShape:
        return GroupShape(self.n, self.k)

    def resolved_engine(self) -> str:
        if self.engine != "auto":
            return self.engine
        return "raw" if self.horizon <= 5.0 else "reduced"

    def to_dict(self) -> dict:
        return {
            "n": self.n, "k": self.k, "horizon": self.horizon, "dt": self.dt,
            "paths": self.paths, "seed": self.seed, "chart": self.chart,
            "alpha": self.alpha, "scenario": self.scenario,
            "engine": self.engine, "scheme": self.scheme,
        }


@dataclass
class PathTable:
    """One row per path; fixed, versioned column set."""

    n: int
    k: int
    horizon: float
    dt: float
    status: np.ndarray          # bool, True = ok
    trace_integral: np.ndarray
    area_im: np.ndarray
    theta: np.ndarray
    varrho: np.ndarray
    girsanov: np.ndarray
    lambdas: np.ndarray         # (paths, k), final spectrum, descending
    diagnostics: dict = field(default_factory=dict)

    @property
    def paths(self) -> int:
        return len(self.status)

    def ok(self) -> np.ndarray:
        return self.status

    def failure_fraction(self) -> float:
        return 1.0 - float(np.mean(self.status))

    def columns(self) -> list[str]:
        return (["path_id", "status", "T", "dt", "trace_integral", "area_im",
                 "theta", "varrho", "girsanov"]
                + [f"lambda_{j + 1}" for j in range(self.k)])

    def _rows(self):
        for i in range(self.paths):
            row = [str(i), "ok" if self.status[i] else "failed",
                   _fmt(self.horizon), _fmt(self.dt),
                   _fmt(self.trace_integral[i]), _fmt(self.area_im[i]),
                   _fmt(self.theta[i]), _fmt(self.varrho[i]),
                   _fmt(self.girsanov[i])]
            row += [_fmt(v) for v in self.lambdas[i]]
            yield row

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.columns()) + "\n")
        for row in self._rows():
            buf.write(",".join(row) + "\n")
        return buf.getvalue()

    def to_json(self) -> str:
        payload = {"columns": self.columns(), "rows": [list(r) for r in self._rows()]}
        return json.dumps(payload, indent=None, separators=(",", ":"), sort_keys=True)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _path_rngs(seed: int, paths: int) -> list[np.random.Generator]:
    return [np.random.Generator(np.random.Philox(key=np.array([seed, i], dtype=np.uint64)))
            for i in range(paths)]


def _windows(total: int, width: int):
    done = 0
    while done < total:
        take = min(width, total - done)
        yield done, take
        done += take


def _window_width(paths: int, dim: int, budget: float = 2.5e7) -> int:
    return max(4, min(512, int(budget / max(paths * dim, 1))))


# ---------------------------------------------------------------------------
# matrix engines
# ---------------------------------------------------------------------------

def _cayley(dA: np.ndarray, eye: np.ndarray) -> np.ndarray:
    return np.linalg.solve(eye - 0.5 * dA, eye + 0.5 * dA)


def _heun(dA: np.ndarray, eye: np.ndarray) -> np.ndarray:
    return eye + dA + 0.5 * (dA @ dA)


def _det_small(m: np.ndarray) -> np.ndarray:
    k = m.shape[-1]
    if k == 1:
        return m[..., 0, 0]
    if k == 2:
        return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    return np.linalg.det(m)


@dataclass
class _MatrixState:
    s: np.ndarray            # (P, k, p) block ratio Z^{-1} W
    theta: np.ndarray
    logrho: np.ndarray
    trace_prev: np.ndarray
    trace_integral: np.ndarray
    area_im: np.ndarray
    failed: np.ndarray
    u: np.ndarray | None = None   # raw engine only


def _matrix_engine(cfg: RunConfig, keep_raw: bool, collect=None) -> _MatrixState:
    shape = cfg.shape
    n, k, p = cfg.n, cfg.k, shape.p
    paths = cfg.paths
    steps = int(round(cfg.horizon / cfg.dt)) if cfg.horizon > 0 else 0
    basis_flat = _basis_cached(n, k).reshape(n * n, n * n)
    eye = np.eye(n, dtype=complex)
    sqdt = np.sqrt(cfg.dt)
    reproject_heun = cfg.scheme == "heun"
    signs = shape.eta_signs()

    st = _MatrixState(
        s=np.zeros((paths, k, p), dtype=complex),
        theta=np.zeros(paths), logrho=np.zeros(paths),
        trace_prev=np.zeros(paths), trace_integral=np.zeros(paths),
        area_im=np.zeros(paths), failed=np.zeros(paths, dtype=bool),
        u=np.broadcast_to(eye, (paths, n, n)).copy() if keep_raw else None,
    )
    gens = _path_rngs(cfg.seed, paths)
    width = _window_width(paths, n * n)
    step_index = 0
    for _, take in _windows(steps, width):
        coeffs = np.stack([g.standard_normal((take, n * n)) for g in gens])
        for m in range(take):
            dA = (coeffs[:, m, :] @ basis_flat).reshape(paths, n, n) * sqdt
            if cfg.scheme == "heun":
                G = _heun(dA, eye)
            elif cfg.scheme == "exponential":
                G = exp_factor(dA)
            else:
                G = _cayley(dA, eye)
            G11 = G[:, :p, :p]; G12 = G[:, :p, p:]
            G21 = G[:, p:, :p]; G22 = G[:, p:, p:]
            nmat = st.s @ G12 + G22
            numer = st.s @ G11 + G21
            dgamma = dA[:, :p, p:]
            # functional increments from the bounded block ratio
            d = _det_small(nmat)
            dtheta = np.angle(d)
            st.area_im += np.einsum('pab,pba->p', st.s, dgamma).imag
            s_new = np.linalg.solve(nmat, numer)
            tr_new = np.einsum('pab,pab->p', s_new, s_new.conj()).real
            st.trace_integral += 0.5 * (st.trace_prev + tr_new) * cfg.dt
            st.trace_prev = tr_new
            st.theta += dtheta
            st.logrho += np.log(np.abs(d))
            st.failed |= np.abs(dtheta) >= np.pi / 2
            st.s = s_new
            if keep_raw:
                st.u = st.u @ G
                if reproject_heun:
                    st.u = reproject_matrix(st.u, shape, tol=1e-12, max_iter=4)
            step_index += 1
            if collect is not None:
                collect(step_index, st)
    return st


def _matrix_table(cfg: RunConfig, keep_raw: bool) -> PathTable:
    st = _matrix_engine(cfg, keep_raw=keep_raw)
    paths, k = cfg.paths, cfg.k
    t = cfg.horizon
    ss = st.s @ np.swapaxes(st.s, -1, -2).conj()
    lam = np.linalg.eigvalsh(ss)[:, ::-1]
    with np.errstate(over="ignore"):
        varrho = np.exp(st.logrho)
        girsanov = np.exp(-2.0 * cfg.alpha * k * (cfg.n - k) * t
                          + 2.0 * cfg.alpha * st.logrho
                          - 2.0 * cfg.alpha ** 2 * st.trace_integral)
    ok = ~st.failed
    return PathTable(
        n=cfg.n, k=k, horizon=t, dt=cfg.dt, status=ok,
        trace_integral=_mask(st.trace_integral, ok), area_im=_mask(st.area_im, ok),
        theta=_mask(st.theta, ok), varrho=_mask(varrho, ok),
        girsanov=_mask(girsanov, ok), lambdas=_mask(lam, ok[:, None] * np.ones(k, bool)),
    )


def _mask(arr: np.ndarray, ok: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out[~ok] = np.nan
    return out


# ---------------------------------------------------------------------------
# intrinsic Grassmannian engine
# ---------------------------------------------------------------------------

def _sqrtm_psd_batch(mats: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(mats)
    vals = np.clip(vals, 0.0, None)
    root = np.sqrt(vals)
    return (vecs * root[..., None, :]) @ np.swapaxes(vecs, -1, -2).conj()


def _advance_grassmann(w, dt, gen, guard=1e-10, depth=0):
    """One coordinate step with rejection halving (fresh per-path draws)."""
    try:
        return step_grassmann(GrassmannPoint(w), dt, gen, guard=guard).w
    except GrassmannRejected:
        if depth >= 20:
            raise
        half = _advance_grassmann(w, dt / 2.0, gen, guard, depth + 1)
        return _advance_grassmann(half, dt / 2.0, gen, guard, depth + 1)


def _grassmann_table(cfg: RunConfig) -> PathTable:
    shape = cfg.shape
    k, p = cfg.k, shape.p
    paths = cfg.paths
    steps = int(round(cfg.horizon / cfg.dt)) if cfg.horizon > 0 else 0
    sqdt = np.sqrt(cfg.dt)
    guard = 1e-10

    w = np.zeros((paths, p, k), dtype=complex)
    trace_prev = np.zeros(paths)
    trace_integral = np.zeros(paths)
    area_im = np.zeros(paths)
    failed = np.zeros(paths, dtype=bool)
    eye_p = np.eye(p)
    eye_k = np.eye(k)

    gens = _path_rngs(cfg.seed, paths)
    width = _window_width(paths, 2 * p * k)
    for _, take in _windows(steps, width):
        draws = np.stack([g.standard_normal((take, 2, p, k)) for g in gens])
        for m in range(take):
            db = (draws[:, m, 0] + 1j * draws[:, m, 1]) * sqdt
            mats_m = eye_k - np.swapaxes(w, -1, -2).conj() @ w
            mats_p = eye_p - w @ np.swapaxes(w, -1, -2).conj()
            right = _sqrtm_psd_batch(mats_m)
            left = _sqrtm_psd_batch(mats_p)
            dw = left @ db @ right
            # area increment (Ito left point): i Im tr(M^{-1} w* dw)
            z = np.einsum('pab,pba->p', np.linalg.solve(mats_m, np.swapaxes(w, -1, -2).conj()), dw)
            area_im += z.imag
            w_new = w + dw
            margins = 1.0 - np.linalg.svd(w_new, compute_uv=False)[:, 0] ** 2
            bad = margins < guard
            for i in np.nonzero(bad)[0]:
                if failed[i]:
                    continue
                try:
                    w_new[i] = _advance_grassmann(w[i], cfg.dt, gens[i], guard)
                except GrassmannRejected:
                    failed[i] = True
                    w_new[i] = w[i]
            w = w_new
            tr_new = np.einsum('pab,pab->p', w, w.conj()).real
            trace_integral += 0.5 * (trace_prev + tr_new) * cfg.dt
            trace_prev = tr_new

    jmat = np.swapaxes(w, -1, -2).conj() @ w
    lam = np.linalg.eigvalsh(jmat)[:, ::-1]
    sign_ld = np.linalg.slogdet(np.eye(k) - jmat)[1]
    ok = ~failed
    t = cfg.horizon
    girsanov = np.exp(-2.0 * cfg.alpha * k * (cfg.n - k) * t
                      - cfg.alpha * sign_ld
                      - 2.0 * cfg.alpha ** 2 * trace_integral)
    varrho = np.exp(-0.5 * sign_ld)
    theta = np.full(paths, np.nan)
    return PathTable(
        n=cfg.n, k=k, horizon=t, dt=cfg.dt, status=ok,
        trace_integral=_mask(trace_integral, ok), area_im=_mask(area_im, ok),
        theta=theta, varrho=_mask(varrho, ok), girsanov=_mask(girsanov, ok),
        lambdas=_mask(lam, ok[:, None] * np.ones(k, bool)),
    )


# ---------------------------------------------------------------------------
# spectral-chart engines
# ---------------------------------------------------------------------------

def _gaussian_kick(gen: np.random.Generator, p: int, k: int, dt: float) -> np.ndarray:
    """Exact one-step law of the spectrum started from the origin."""
    b = (gen.standard_normal((p, k)) + 1j * gen.standard_normal((p, k))) * np.sqrt(dt)
    lam = np.linalg.eigvalsh(b.conj().T @ b)[::-1]
    return np.clip(lam, 0.0, 1.0 - 1e-12)


def _advance_spectral(vals, n, k, dt, gen, chart, depth=0):
    """One dt step with rejection-halving; returns new values."""
    state = SpectralState(vals, chart, 0.0)
    stepper = step_lambda if chart == "lambda" else step_zeta
    try:
        return stepper(state, n, k, dt, gen).values, 0
    except StepRejectedError:
        if depth >= 20:
            raise
        first, r1 = _advance_spectral(vals, n, k, dt / 2.0, gen, chart, depth + 1)
        second, r2 = _advance_spectral(first, n, k, dt / 2.0, gen, chart, depth + 1)
        return second, r1 + r2 + 1


def _spectral_table(cfg: RunConfig) -> PathTable:
    chart = cfg.chart
    shape = cfg.shape
    n, k, p = cfg.n, cfg.k, shape.p
    paths = cfg.paths
    zeta_mode = chart == "zeta"
    # dt refers to the underlying clock; the zeta clock runs 4x faster
    dt_c = 4.0 * cfg.dt if zeta_mode else cfg.dt
    gens = _path_rngs(cfg.seed, paths)

    vals = np.zeros((paths, k))
    trace_prev = np.zeros(paths)
    trace_integral = np.zeros(paths)
    failed = np.zeros(paths, dtype=bool)
    min_gap = np.full(paths, np.inf)
    min_gap_time = np.zeros(paths)
    rejections = np.zeros(paths, dtype=int)
    t_used = 0.0

    if cfg.lambda0 is not None or cfg.zeta0 is not None:
        if zeta_mode:
            start = np.asarray(cfg.zeta0 if cfg.zeta0 is not None
                               else 2.0 * np.arctanh(np.sqrt(np.asarray(cfg.lambda0))))
        else:
            start = np.asarray(cfg.lambda0 if cfg.lambda0 is not None
                               else np.tanh(np.asarray(cfg.zeta0) / 2.0) ** 2)
        vals[:] = start[None, :]
        lam0 = np.tanh(start / 2.0) ** 2 if zeta_mode else start
        trace_prev[:] = np.sum(lam0)
    elif cfg.horizon > 0:
        # exact first-step law from the origin
        for i, g in enumerate(gens):
            lam = _gaussian_kick(g, p, k, cfg.dt)
            if zeta_mode:
                vals[i] = 2.0 * np.arctanh(np.sqrt(lam))
            else:
                vals[i] = lam
        # trapezoid from the origin over the kick step
        kick_tr = (np.tanh(vals / 2.0) ** 2 if zeta_mode else vals).sum(axis=1)
        trace_integral += 0.5 * kick_tr * cfg.dt
        trace_prev = kick_tr
        t_used = cfg.dt

    steps = max(int(round((cfg.horizon - t_used) / cfg.dt)), 0) if cfg.horizon > 0 else 0
    from hgbm.spectral import lambda_drift, lambda_diffusion, zeta_drift

    width = _window_width(paths, k)
    gap_guard = 1e-7
    for _, take in _windows(steps, width):
        draws = np.stack([g.standard_normal((take, k)) for g in gens])
        for m in range(take):
            xi = draws[:, m, :]
            if zeta_mode:
                move = np.clip(zeta_drift(vals, n, k) * dt_c, -1.0, 1.0)
                prop = vals + move + np.sqrt(dt_c) * xi
                bad = (prop <= 0).any(axis=1)
            else:
                prop = (vals + lambda_drift(vals, n, k) * dt_c
                        + lambda_diffusion(vals) * np.sqrt(dt_c) * xi)
                prop = np.clip(prop, 0.0, 1.0 - 1e-12)
                bad = np.zeros(paths, dtype=bool)
            if k > 1:
                bad |= (-np.diff(prop, axis=1) <= gap_guard).any(axis=1)
            for i in np.nonzero(bad)[0]:
                if failed[i]:
                    continue
                try:
                    prop[i], extra = _advance_spectral(vals[i], n, k, dt_c, gens[i], chart)
                    rejections[i] += extra
                except StepRejectedError:
                    failed[i] = True
                    prop[i] = vals[i]
            vals = prop
            if k > 1:
                gaps = np.min(-np.diff(vals, axis=1), axis=1)
                better = gaps < min_gap
                min_gap_time[better] = t_used
                np.minimum(min_gap, gaps, out=min_gap)
            lam = np.tanh(vals / 2.0) ** 2 if zeta_mode else vals
            tr_new = lam.sum(axis=1)
            trace_integral += 0.5 * (trace_prev + tr_new) * cfg.dt
            trace_prev = tr_new
            t_used += cfg.dt

    lam = np.sort(np.tanh(vals / 2.0) ** 2 if zeta_mode else vals, axis=1)[:, ::-1]
    with np.errstate(divide="ignore"):
        logdet_m = np.sum(np.log1p(-np.clip(lam, 0.0, 1.0)), axis=1)
    ok = ~failed
    t = cfg.horizon
    with np.errstate(over="ignore"):
        girsanov = np.exp(-2.0 * cfg.alpha * k * (cfg.n - k) * t
                          - cfg.alpha * logdet_m
                          - 2.0 * cfg.alpha ** 2 * trace_integral)
        varrho = np.exp(-0.5 * logdet_m)
    nanarr = np.full(paths, np.nan)
    return PathTable(
        n=cfg.n, k=k, horizon=t, dt=cfg.dt, status=ok,
        trace_integral=_mask(trace_integral, ok), area_im=nanarr.copy(),
        theta=nanarr.copy(), varrho=_mask(varrho, ok),
        girsanov=_mask(girsanov, ok), lambdas=_mask(lam, ok[:, None] * np.ones(k, bool)),
        diagnostics={"min_gap": min_gap, "min_gap_time": min_gap_time,
                     "rejections": rejections},
    )


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def run_paths(config: RunConfig) -> PathTable:
    """Simulate all paths under the configured route and return the table."""
    if config.chart == "matrix":
        table = _matrix_table(config, keep_raw=config.resolved_engine() == "raw")
    elif config.chart == "grassmann":
        table = _grassmann_table(config)
    else:
        table = _spectral_table(config)
    if table.failure_fraction() > config.max_failure_fraction:
        raise RunError(f"{table.failure_fraction():.1%} of paths failed")
    return table
