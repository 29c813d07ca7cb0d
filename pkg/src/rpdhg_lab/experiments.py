"""Batch experiments: perturbation sweeps, two-stage studies and the log-log regression."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .conditioning import condition_report
from .errors import InsufficientData, LpError, NeverStabilized
from .generators import ToddSpec, derive_seed, family_certificate, generate_family, generate_todd
from .lp_core import relative_error
from .reporting import csv_text, dumps_json
from .solver import SolverConfig, run_rpdhg
from .stages import detect_stages

TODD_COLUMNS = [
    "seed", "m", "n", "kappa", "phi", "kphi_ln", "binv_a_norm", "xi", "w_norm",
    "total_iters", "stage1_iters", "stage2_iters", "term_reason",
]
PERTURBATION_COLUMNS = [
    "family", "gamma", "kappa", "phi", "total_iters", "stage1_iters", "stage2_iters",
    "stage2_decades", "stage2_per_decade", "final_rel_err", "term_reason",
]


@dataclass
class ExperimentRecord:
    seed: int
    m: int
    n: int
    kappa: float = math.nan
    phi: float = math.nan
    kphi_ln: float = math.nan
    binv_a_norm: float = math.nan
    xi: float = math.nan
    w_norm: float = math.nan
    total_iters: int = 0
    stage1_iters: int = 0
    stage2_iters: int = 0
    term_reason: str = ""
    extra: dict = field(default_factory=dict)

    def row(self) -> dict:
        return {col: getattr(self, col) for col in TODD_COLUMNS}

    @property
    def ok(self) -> bool:
        return self.term_reason in ("distance", "rel_err", "saddle")


@dataclass
class ToddBatchParams:
    m: int = 50
    n: int = 100
    count: int = 100
    seed: int = 7
    tol: float = 1e-4
    max_iters: int = 5_000_000
    beta: float = 1.0 / math.e
    with_bounds: bool = False


def todd_record(params: ToddBatchParams, index: int) -> ExperimentRecord:
    """Generate, analyze and solve instance ``index`` of a Todd batch."""
    seed = derive_seed(params.seed, index)
    rec = ExperimentRecord(seed=seed, m=params.m, n=params.n)
    try:
        inst, cert = generate_todd(ToddSpec(params.m, params.n, seed))
        rep = condition_report(inst, cert, epsilon=params.tol, beta=params.beta)
        rec.kappa, rec.phi, rec.kphi_ln = rep.kappa, rep.phi, rep.kphi_ln
        rec.binv_a_norm, rec.xi, rec.w_norm = rep.binv_a_norm, rep.xi, rep.w_norm
        cfg = SolverConfig(beta=params.beta, eps=params.tol, max_onepdhg=params.max_iters)
        result, trace = run_rpdhg(inst, cfg, cert)
        rec.total_iters = result.iterations
        rec.term_reason = result.reason
        try:
            split = detect_stages(trace, cert)
        except NeverStabilized as exc:
            split = exc.split
            rec.term_reason += "+unstable_support"
        rec.stage1_iters, rec.stage2_iters = split.stage1_iters, split.stage2_iters
        rec.extra = {"name": inst.name, "restarts": result.restarts, "trace": trace.digest()}
        if params.with_bounds:
            b = rep.bounds
            rec.extra["bounds"] = {
                "global_phi": b.global_T["phi"],
                "global_2phi": b.global_T["2phi"],
                "T_basis_phi": b.T_basis["phi"],
                "T_basis_2phi": b.T_basis["2phi"],
                "T_local": b.T_local,
            }
    except LpError as exc:
        rec.term_reason = f"error:{type(exc).__name__}"
        rec.extra = {"message": str(exc)}
    return rec


def _map(fn, items, jobs: int):
    if jobs and jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _todd_task(args):
    params, index = args
    return todd_record(params, index)


def run_todd_batch(params: ToddBatchParams, jobs: int = 1) -> list[ExperimentRecord]:
    """Records in index order regardless of worker scheduling."""
    return _map(_todd_task, [(params, i) for i in range(params.count)], jobs)


# ---------------------------------------------------------------------------
# perturbation sweeps over the toy families
# ---------------------------------------------------------------------------


@dataclass
class PerturbationRecord:
    family: str
    gamma: float
    kappa: float
    phi: float
    total_iters: int
    stage1_iters: int
    stage2_iters: int
    stage2_decades: float
    stage2_per_decade: float
    final_rel_err: float
    term_reason: str
    rel_err_trace: list = field(default_factory=list, repr=False)

    def row(self) -> dict:
        return {col: getattr(self, col) for col in PERTURBATION_COLUMNS}


def perturbation_record(family: str, gamma: float, tol: float = 1e-8, max_iters: int = 5_000_000,
                        beta: float = 1.0 / math.e) -> PerturbationRecord:
    """Solve one family member to relative error ``tol`` and split its stages.

    The Stage-II cost per decade is the Stage-II iteration count divided by
    the number of decades the relative error fell during Stage II.
    """
    inst = generate_family(family, gamma)
    cert = family_certificate(family, gamma)
    rep = condition_report(inst, cert, epsilon=tol, beta=beta)
    cfg = SolverConfig(beta=beta, target="rel_err", eps=tol, max_onepdhg=max_iters)
    result, trace = run_rpdhg(inst, cfg, cert)
    reason = result.reason
    try:
        split = detect_stages(trace, cert)
    except NeverStabilized as exc:
        split = exc.split
        reason += "+unstable_support"
    errs = [rec.rel_err for rec in trace.restarts]
    decades = math.nan
    per_decade = math.nan
    if split.boundary is not None and errs:
        start = errs[split.boundary]
        decades = math.log10(start / max(errs[-1], 1e-300)) if start > 0 else 0.0
        if decades > 0:
            per_decade = split.stage2_iters / decades
    return PerturbationRecord(
        family=family.upper(),
        gamma=gamma,
        kappa=rep.kappa,
        phi=rep.phi,
        total_iters=result.iterations,
        stage1_iters=split.stage1_iters,
        stage2_iters=split.stage2_iters,
        stage2_decades=decades,
        stage2_per_decade=per_decade,
        final_rel_err=relative_error(inst, result.x, result.y),
        term_reason=reason,
        rel_err_trace=[(rec.total, rec.rel_err) for rec in trace.restarts],
    )


def _pert_task(args):
    return perturbation_record(*args)


def run_perturbation(families=("LP1", "LP2"), gammas=(0.02, 0.005, 0.001), tol: float = 1e-8,
                     max_iters: int = 5_000_000, beta: float = 1.0 / math.e, jobs: int = 1):
    tasks = [(f, g, tol, max_iters, beta) for f in families for g in gammas]
    return _map(_pert_task, tasks, jobs)


# ---------------------------------------------------------------------------
# log-log fit with unit slope
# ---------------------------------------------------------------------------

PREDICTORS = {"kphi_lnkphi": "kphi_ln", "binv_a": "binv_a_norm"}
RESPONSES = {"total": "total_iters", "stage1": "stage1_iters", "stage2": "stage2_iters"}


@dataclass
class LogLogFit:
    intercept: float
    r2: float
    max_excess: float  # largest log10(response) above the fitted line
    count: int


def fit_loglog(records, predictor: str, response: str) -> LogLogFit:
    """Fit ``log10(response) = log10(predictor) + intercept``; R^2 against that line.

    Records with nonpositive or non-finite values are skipped.
    """
    pk = PREDICTORS.get(predictor, predictor)
    rk = RESPONSES.get(response, response)
    px, ry = [], []
    for rec in records:
        p = rec[pk] if isinstance(rec, dict) else getattr(rec, pk)
        r = rec[rk] if isinstance(rec, dict) else getattr(rec, rk)
        if p is not None and r is not None and np.isfinite(p) and np.isfinite(r) and p > 0 and r > 0:
            px.append(p)
            ry.append(r)
    if len(px) < 2:
        raise InsufficientData(f"need at least 2 usable records, got {len(px)}")
    lp = np.log10(px)
    lr = np.log10(ry)
    intercept = float(np.mean(lr - lp))
    fitted = lp + intercept
    ss_res = float(((lr - fitted) ** 2).sum())
    ss_tot = float(((lr - lr.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res == 0 else -math.inf)
    return LogLogFit(intercept, r2, float((lr - fitted).max()), len(px))


def regression_summary(records) -> dict:
    usable = [r for r in records if (r.ok if hasattr(r, "ok") else True)]
    out = {}
    for name, (pred, resp) in {
        "total_vs_kphi": ("kphi_lnkphi", "total"),
        "stage1_vs_kphi": ("kphi_lnkphi", "stage1"),
        "stage2_vs_binv_a": ("binv_a", "stage2"),
    }.items():
        try:
            fit = fit_loglog(usable, pred, resp)
            out[name] = {"intercept": fit.intercept, "r2": fit.r2, "max_excess": fit.max_excess, "count": fit.count}
        except InsufficientData as exc:
            out[name] = {"error": str(exc)}
    return out


# ---------------------------------------------------------------------------
# output files
# ---------------------------------------------------------------------------


def write_todd_outputs(records, out_dir, stem: str) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{stem}.csv"
    jsonl_path = out / f"{stem}.jsonl"
    csv_path.write_text(csv_text(TODD_COLUMNS, [r.row() for r in records]))
    with open(jsonl_path, "w") as fh:
        for r in records:
            fh.write(dumps_json({**r.row(), **r.extra}) + "\n")
    return csv_path, jsonl_path


def write_perturbation_outputs(records, out_dir, stem: str = "perturbation") -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{stem}.csv"
    jsonl_path = out / f"{stem}.jsonl"
    csv_path.write_text(csv_text(PERTURBATION_COLUMNS, [r.row() for r in records]))
    with open(jsonl_path, "w") as fh:
        for r in records:
            fh.write(dumps_json({**r.row(), "rel_err_trace": r.rel_err_trace}) + "\n")
    return csv_path, jsonl_path
