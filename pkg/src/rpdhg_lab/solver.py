"""Restarted PDHG (rPDHG) for standard-form LPs.

The iteration is the plain PDHG step

    x' = (x - tau (c - A'y))^+
    y' = y + sigma (b - A(2x' - x))

wrapped in outer loops that restart from the running average once its
normalized duality gap has dropped by a factor ``beta`` relative to the
previous restart point.  The run starts at the origin.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize

from . import _kernels
from .errors import BisectionFailure, InvalidStepSizes, IterationLimit
from .lp_core import LpInstance, OptimalCertificate, duality_gap, relative_error
from .spectral import SpectralData, StepSizes, extreme_singular_values, m_matrix, mtilde_norm

NORM_MODES = ("mtilde", "M")
TARGETS = ("distance", "rel_err")


def support_threshold(x: np.ndarray) -> float:
    return 1e-9 * (1.0 + float(np.abs(x).max(initial=0.0)))


def support_of(x: np.ndarray) -> np.ndarray:
    """Indices with ``x_i`` above the roundoff threshold."""
    return np.flatnonzero(x > support_threshold(x))


def default_step_sizes(spec: SpectralData) -> StepSizes:
    """``tau = 1/(2 kappa)``, ``sigma = 1/(2 lambda_max lambda_min)``."""
    return StepSizes(1.0 / (2.0 * spec.kappa), 1.0 / (2.0 * spec.lambda_max * spec.lambda_min))


@dataclass
class SolverConfig:
    steps: StepSizes | None = None
    beta: float = 1.0 / math.e
    norm_mode: str = "mtilde"
    target: str = "distance"
    eps: float = 1e-6
    max_onepdhg: int = 1_000_000
    bisection_tol: float = 1e-10
    bisection_maxit: int = 200
    trace_level: str = "restarts"
    # termination is judged on (x / unscale[0], y / unscale[1]); used when a
    # reweighted problem is solved but accuracy is measured on the original
    unscale: tuple[float, float] = (1.0, 1.0)
    x_start: np.ndarray | None = None
    y_start: np.ndarray | None = None

    def validate(self) -> None:
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if not self.eps > 0.0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.norm_mode not in NORM_MODES:
            raise ValueError(f"norm_mode must be one of {NORM_MODES}")
        if self.target not in TARGETS:
            raise ValueError(f"target must be one of {TARGETS}")
        if self.trace_level not in ("restarts", "full"):
            raise ValueError("trace_level must be 'restarts' or 'full'")
        if self.max_onepdhg < 1:
            raise ValueError("max_onepdhg must be at least 1")


@dataclass
class RestartRecord:
    n: int
    k: int
    rho: float
    mtilde_dist_moved: float
    support_size: int
    gap: float
    rel_err: float
    total: int

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "rho": self.rho,
            "mtilde_dist_moved": self.mtilde_dist_moved,
            "support_size": self.support_size,
            "gap": self.gap,
            "rel_err": self.rel_err,
        }


@dataclass
class InnerRecord:
    """One OnePDHG step inside outer loop ``n`` (full traces only)."""

    n: int
    k: int
    x: np.ndarray
    y: np.ndarray
    xbar: np.ndarray
    ybar: np.ndarray
    rho: float
    radius: float
    support_size: int
    gap: float
    rel_err: float

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "rho": self.rho,
            "mtilde_dist_moved": self.radius,
            "support_size": self.support_size,
            "gap": self.gap,
            "rel_err": self.rel_err,
        }


@dataclass
class SolveTrace:
    """Outer iterates ``z^{n,0}`` (n = 0 is the start) and restart records.

    ``restarts[i]`` describes the loop that produced ``outer_x[i + 1]``.
    """

    steps: StepSizes
    beta: float
    norm_mode: str
    outer_x: list = field(default_factory=list)
    outer_y: list = field(default_factory=list)
    restarts: list = field(default_factory=list)
    inner: list = field(default_factory=list)

    @property
    def total_onepdhg(self) -> int:
        return sum(rec.k for rec in self.restarts) + self.pending

    pending: int = 0  # steps of an unfinished final loop (iteration limit)

    @property
    def inner_counts(self) -> list[int]:
        return [rec.k for rec in self.restarts]

    def cumulative_counts(self) -> np.ndarray:
        """OnePDHG count at each outer iterate ``z^{n,0}``, n = 0..N."""
        return np.concatenate([[0], np.cumsum(self.inner_counts)]).astype(int)

    def jsonl_lines(self) -> list[str]:
        rows = self.inner if self.inner else self.restarts
        return [json.dumps(_jsonable(rec.as_dict())) for rec in rows]

    def digest(self) -> dict:
        return {
            "restarts": len(self.restarts),
            "total_onepdhg": self.total_onepdhg,
            "inner_counts_head": self.inner_counts[:10],
            "final_rho": self.restarts[-1].rho if self.restarts else None,
        }


def _jsonable(rec: dict) -> dict:
    out = {}
    for key, val in rec.items():
        if isinstance(val, float) and not math.isfinite(val):
            out[key] = str(val)
        else:
            out[key] = val
    return out


@dataclass
class SolveResult:
    x: np.ndarray
    y: np.ndarray
    s: np.ndarray
    iterations: int
    restarts: int
    reason: str
    metric: float
    converged: bool

    def raise_if_limited(self) -> None:
        if not self.converged:
            raise IterationLimit(
                f"stopped after {self.iterations} OnePDHG steps ({self.reason}), metric={self.metric:.3e}"
            )

    def summary(self) -> str:
        return (
            f"{self.reason}: {self.iterations} OnePDHG steps, {self.restarts} restarts, "
            f"metric {self.metric:.3e}"
        )


# ---------------------------------------------------------------------------
# single pieces of the method
# ---------------------------------------------------------------------------


def pdhg_step(inst: LpInstance, x: np.ndarray, y: np.ndarray, steps: StepSizes):
    """One OnePDHG update; returns ``(x', y')``."""
    x_new = np.maximum(x - steps.tau * (inst.c - inst.A.T @ y), 0.0)
    y_new = y + steps.sigma * (inst.b - inst.A @ (2.0 * x_new - x))
    return x_new, y_new


def _gap_direction(inst: LpInstance, x, y):
    return inst.A.T @ y - inst.c, inst.b - inst.A @ x


def _rho_m_norm(A, x, dx, dy, r, steps: StepSizes) -> float:
    """Normalized gap in the M-norm by minimizing the concave dual.

    ``r rho = min_{nu >= 0} nu'x + r |d + (nu, 0)|_{M^-1}``.  Returns the
    value of a primal feasible point when it matches the dual to 1e-9,
    otherwise the dual value (an upper bound).
    """
    n = x.size
    G = m_matrix(A, steps)
    try:
        chol = linalg.cho_factor(G, lower=True)
    except linalg.LinAlgError as exc:
        raise InvalidStepSizes("M is not positive definite for these step sizes") from exc
    d = np.concatenate([dx, dy])
    if not np.any(d):
        return 0.0
    # work with d / scale and nu / scale so the objective is O(1) whatever r and |d| are
    scale = math.sqrt(d @ linalg.cho_solve(chol, d))
    e = d / scale
    xr = x / r

    def fun(mu):
        g = e.copy()
        g[:n] += mu
        w = linalg.cho_solve(chol, g)
        nrm = math.sqrt(max(g @ w, 0.0))
        if nrm == 0.0:
            return float(mu @ xr), xr.copy()
        return float(mu @ xr + nrm), xr + w[:n] / nrm

    res = optimize.minimize(
        fun, np.zeros(n), jac=True, method="L-BFGS-B", bounds=[(0.0, None)] * n,
        options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 5000, "maxls": 50},
    )
    upper = r * scale * min(float(res.fun), 1.0)
    nu = scale * res.x

    # recover a feasible primal point from the dual solution
    g = d.copy()
    g[:n] += nu
    w = linalg.cho_solve(chol, g)
    nrm = math.sqrt(max(g @ w, 0.0))
    lower = 0.0
    if nrm > 0.0:
        delta = r * w / nrm
        delta[:n] = np.maximum(delta[:n], -x)
        size = math.sqrt(max(delta @ (G @ delta), 0.0))
        if size > r:
            delta *= r / size
        lower = float(d @ delta)
    if upper - lower <= 1e-9 * (1.0 + abs(upper)):
        return max(lower, 0.0) / r
    return max(upper, 0.0) / r


def normalized_duality_gap(
    inst: LpInstance,
    x: np.ndarray,
    y: np.ndarray,
    r: float,
    steps: StepSizes,
    norm_mode: str = "mtilde",
    rtol: float = 1e-10,
    maxit: int = 200,
) -> float:
    """``rho(r; z) = max{ d'Delta : |Delta| <= r, x + Delta_x >= 0 } / r``.

    Here ``d = (A'y - c, b - Ax)``; the bilinear Lagrangian difference over
    the ball reduces to this linear form.
    """
    if not r > 0.0:
        raise ValueError("radius must be positive")
    dx, dy = _gap_direction(inst, x, y)
    if norm_mode == "M":
        return _rho_m_norm(inst.A, np.asarray(x, float), dx, dy, r, steps)
    rho, status = _kernels.rho_mtilde(
        np.ascontiguousarray(x, dtype=float), dx, dy, float(r), steps.tau, steps.sigma, rtol, maxit
    )
    if status != _kernels.STATUS_OK:
        raise BisectionFailure(f"bisection did not reach tolerance {rtol} in {maxit} steps")
    return float(rho)


def restart_triggered(n: int, k: int, rho_new: float, rho_ref: float, beta: float) -> bool:
    """Restart test; the very first step (n=0, k=1) always restarts."""
    if n == 0 and k == 1:
        return True
    return rho_new <= beta * rho_ref


def _norm_fn(inst, steps, mode):
    if mode == "M":
        A = inst.A

        def dist(dx_, dy_):
            val = dx_ @ dx_ / steps.tau + dy_ @ dy_ / steps.sigma + 2.0 * dy_ @ (A @ dx_)
            return math.sqrt(max(val, 0.0))

        return dist
    return lambda dx_, dy_: math.sqrt(dx_ @ dx_ / steps.tau + dy_ @ dy_ / steps.sigma)


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------


class _Monitor:
    """Evaluates the termination target at outer iterates."""

    def __init__(self, inst, cfg: SolverConfig, cert):
        self.inst = inst
        self.cfg = cfg
        self.cert = cert
        if cfg.target == "distance" and cert is None:
            raise ValueError("distance termination needs an optimal certificate")

    def metric(self, x, y) -> float:
        sx, sy = self.cfg.unscale
        x = x / sx
        y = y / sy
        if self.cfg.target == "distance":
            ex = x - self.cert.x
            ey = y - self.cert.y
            return math.sqrt(ex @ ex + ey @ ey)
        return relative_error(self.inst, x, y)


def _resolve_steps(inst: LpInstance, cfg: SolverConfig) -> StepSizes:
    spec = extreme_singular_values(inst.A)
    steps = cfg.steps or default_step_sizes(spec)
    steps.check(spec.lambda_max)
    return steps


def run_rpdhg(
    inst: LpInstance,
    config: SolverConfig | None = None,
    certificate: OptimalCertificate | None = None,
    original: LpInstance | None = None,
) -> tuple[SolveResult, SolveTrace]:
    """Restarted PDHG from the origin (or a configured warm start).

    When ``inst`` is a reweighted copy of ``original``, pass the original and
    its certificate together with ``config.unscale`` so termination is judged
    on the recovered iterate.
    """
    cfg = config or SolverConfig()
    cfg.validate()
    steps = _resolve_steps(inst, cfg)
    monitor = _Monitor(original if original is not None else inst, cfg, certificate)
    if cfg.norm_mode == "mtilde" and cfg.trace_level == "restarts":
        return _run_compiled(inst, cfg, steps, monitor)
    return _run_reference(inst, cfg, steps, monitor)


def _start(inst, cfg):
    x = np.zeros(inst.n) if cfg.x_start is None else np.maximum(np.asarray(cfg.x_start, float), 0.0)
    y = np.zeros(inst.m) if cfg.y_start is None else np.asarray(cfg.y_start, float).copy()
    return x, y


def _restart_record(inst, n, k, rho, radius, x, y, total) -> RestartRecord:
    return RestartRecord(
        n=n,
        k=k,
        rho=float(rho),
        mtilde_dist_moved=float(radius),
        support_size=int(support_of(x).size),
        gap=duality_gap(inst, x, y),
        rel_err=relative_error(inst, x, y),
        total=total,
    )


def _finish(inst, trace, x, y, total, reason, metric, converged):
    s = inst.c - inst.A.T @ y
    res = SolveResult(x.copy(), y.copy(), s, total, len(trace.restarts), reason, metric, converged)
    return res, trace


def _run_compiled(inst, cfg, steps, monitor):
    A = np.ascontiguousarray(inst.A)
    AT = np.ascontiguousarray(inst.A.T)
    b = np.ascontiguousarray(inst.b)
    c = np.ascontiguousarray(inst.c)
    m, n = A.shape
    x, y = _start(inst, cfg)
    trace = SolveTrace(steps, cfg.beta, cfg.norm_mode)
    trace.outer_x.append(x.copy())
    trace.outer_y.append(y.copy())

    ax = A @ x
    aty = AT @ y
    xbar, ybar = np.empty(n), np.empty(m)
    axbar, atybar = np.empty(m), np.empty(n)
    xnew = np.empty(n)
    rho_ref = np.inf
    total = 0
    outer = 0
    while True:
        x0, y0 = x.copy(), y.copy()
        xbar[:] = 0.0
        ybar[:] = 0.0
        axbar[:] = 0.0
        atybar[:] = 0.0
        k = 0
        restarted = False
        while not restarted:
            budget = cfg.max_onepdhg - total
            if budget <= 0:
                break
            k, taken, restarted, rho, radius, status = _kernels.inner_loop(
                A, AT, b, c, steps.tau, steps.sigma, cfg.beta, rho_ref, outer == 0,
                x, y, ax, aty, x0, y0, xbar, ybar, axbar, atybar, xnew,
                k, budget, cfg.bisection_tol, cfg.bisection_maxit,
            )
            total += taken
            if status != _kernels.STATUS_OK:
                raise BisectionFailure("restart test could not bracket the normalized gap")
        if not restarted:
            trace.pending = k
            metric = monitor.metric(x0, y0)
            return _finish(inst, trace, x0, y0, total, "iteration_limit", metric, False)

        x[:] = xbar
        y[:] = ybar
        ax[:] = A @ x
        aty[:] = AT @ y
        rho_ref = rho
        outer += 1
        trace.outer_x.append(x.copy())
        trace.outer_y.append(y.copy())
        trace.restarts.append(_restart_record(inst, outer, k, rho, radius, x, y, total))
        metric = monitor.metric(x, y)
        if metric < cfg.eps:
            return _finish(inst, trace, x, y, total, cfg.target, metric, True)
        if rho == 0.0:
            return _finish(inst, trace, x, y, total, "saddle", metric, True)


def _run_reference(inst, cfg, steps, monitor):
    """Plain numpy loop; records every inner iterate when asked to."""
    full = cfg.trace_level == "full"
    dist = _norm_fn(inst, steps, cfg.norm_mode)
    x, y = _start(inst, cfg)
    trace = SolveTrace(steps, cfg.beta, cfg.norm_mode)
    trace.outer_x.append(x.copy())
    trace.outer_y.append(y.copy())
    rho_ref = np.inf
    total = 0
    outer = 0
    while True:
        x0, y0 = x.copy(), y.copy()
        xbar = np.zeros(inst.n)
        ybar = np.zeros(inst.m)
        k = 0
        restarted = False
        while total < cfg.max_onepdhg:
            x, y = pdhg_step(inst, x, y, steps)
            total += 1
            k += 1
            xbar += (x - xbar) / k
            ybar += (y - ybar) / k
            radius = dist(xbar - x0, ybar - y0)
            if radius == 0.0:
                rho = 0.0
            else:
                rho = normalized_duality_gap(
                    inst, xbar, ybar, radius, steps, cfg.norm_mode, cfg.bisection_tol, cfg.bisection_maxit
                )
            if full:
                trace.inner.append(
                    InnerRecord(
                        outer, k, x.copy(), y.copy(), xbar.copy(), ybar.copy(), rho, radius,
                        int(support_of(x).size), duality_gap(inst, x, y), relative_error(inst, x, y),
                    )
                )
            if restart_triggered(outer, k, rho, rho_ref, cfg.beta):
                restarted = True
                break
        if not restarted:
            trace.pending = k
            metric = monitor.metric(x0, y0)
            return _finish(inst, trace, x0, y0, total, "iteration_limit", metric, False)

        x, y = xbar.copy(), ybar.copy()
        rho_ref = rho
        outer += 1
        trace.outer_x.append(x.copy())
        trace.outer_y.append(y.copy())
        trace.restarts.append(_restart_record(inst, outer, k, rho, radius, x, y, total))
        metric = monitor.metric(x, y)
        if metric < cfg.eps:
            return _finish(inst, trace, x, y, total, cfg.target, metric, True)
        if rho == 0.0:
            return _finish(inst, trace, x, y, total, "saddle", metric, True)
