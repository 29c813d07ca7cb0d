"""Command line: generate, solve, analyze, bounds, verify, experiment.

Exit codes: 0 success, 1 usage error, 2 numerical or convergence failure,
3 file error.  A short summary goes to stdout; machine output goes to files.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import experiments, verification
from .conditioning import condition_report
from .errors import LpError, TooLarge, UnsupportedFormat
from .generators import ToddSpec, family_certificate, generate_family, generate_todd
from .lp_core import load_instance, save_instance
from .oracle import certify
from .reporting import emit_report
from .solver import SolverConfig, run_rpdhg

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3
AUTO_CERTIFY_MAX_N = 12


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive(kind):
    def parse(text):
        val = kind(text)
        if not val > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return val

    return parse


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rpdhg-lab", description="Restarted PDHG solver and LP conditioning lab.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write an instance (with certificate) to JSON")
    g.add_argument("kind", choices=["todd", "lp1", "lp2"])
    g.add_argument("--m", type=_positive(int), default=50)
    g.add_argument("--n", type=_positive(int), default=100)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--gamma", type=float, default=0.01)
    g.add_argument("--plain-c", action="store_true", help="use c = s_hat instead of the projected cost")
    g.add_argument("--out", required=True)

    s = sub.add_parser("solve", help="run restarted PDHG on an instance file")
    s.add_argument("--input", required=True)
    s.add_argument("--eps", type=_positive(float), help="distance to the certificate (needs one)")
    s.add_argument("--tol", type=_positive(float), help="relative error target")
    s.add_argument("--beta", type=float, default=1.0 / math.e)
    s.add_argument("--max-iters", type=_positive(int), default=1_000_000)
    s.add_argument("--norm", choices=["mtilde", "M"], default="mtilde")
    s.add_argument("--trace", help="write per-restart (or per-step) records as JSONL")
    s.add_argument("--full-trace", action="store_true", help="record every OnePDHG step")
    s.add_argument("--out", help="write the solve result")
    s.add_argument("--format", choices=["json", "csv", "text"], default="json")

    for name, helptext in (("analyze", "condition report"), ("bounds", "iteration bounds only")):
        a = sub.add_parser(name, help=helptext)
        a.add_argument("--input", required=True)
        a.add_argument("--eps", type=_positive(float), default=1e-6)
        a.add_argument("--beta", type=float, default=1.0 / math.e)
        a.add_argument("--certify", action="store_true", help="compute the certificate by enumeration")
        a.add_argument("--gamma-note", action="store_true",
                       help="add the reciprocal relation between phi and the stability radius")
        a.add_argument("--out")
        a.add_argument("--format", choices=["json", "csv", "text"], default="json")

    v = sub.add_parser("verify", help="oracle cross-check suite")
    v.add_argument("--input", help="also check this instance")
    v.add_argument("--seed", type=int, default=11)
    v.add_argument("--count", type=int, default=4, help="random 3x6 instances in the corpus")
    v.add_argument("--out")

    e = sub.add_parser("experiment", help="batch studies written as CSV + JSONL")
    e.add_argument("kind", choices=["perturbation", "two_stage", "regression"])
    e.add_argument("--m", type=_positive(int), default=50)
    e.add_argument("--n", type=_positive(int), default=100)
    e.add_argument("--count", type=int, default=100)
    e.add_argument("--seed", type=int, default=7)
    e.add_argument("--tol", type=_positive(float), help="default 1e-4 distance (Todd) or 1e-8 relative error")
    e.add_argument("--gamma", type=float, nargs="+", default=[0.02, 0.005, 0.001])
    e.add_argument("--beta", type=float, default=1.0 / math.e)
    e.add_argument("--max-iters", type=_positive(int), default=5_000_000)
    e.add_argument("--jobs", type=int, default=1)
    e.add_argument("--out", required=True)
    return p


def _write(path, data: bytes | str) -> None:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode()
    path.write_bytes(data)


def _report_path(input_path: str, out: str | None, suffix: str, fmt: str) -> Path:
    if out:
        return Path(out)
    ext = {"json": "json", "csv": "csv", "text": "txt"}[fmt]
    src = Path(input_path)
    return src.with_name(f"{src.stem}.{suffix}.{ext}")


def cmd_generate(args) -> int:
    if args.kind == "todd":
        if not args.m < args.n:
            raise UsageError(f"need m < n, got m={args.m}, n={args.n}")
        inst, cert = generate_todd(ToddSpec(args.m, args.n, args.seed, not args.plain_c))
    else:
        if args.gamma < 0:
            raise UsageError("gamma must be nonnegative")
        inst = generate_family(args.kind, args.gamma)
        cert = family_certificate(args.kind, args.gamma) if args.gamma > 0 else None
    save_instance(args.out, inst, cert)
    print(f"wrote {inst.name} (m={inst.m}, n={inst.n}) to {args.out}")
    return EXIT_OK


def cmd_solve(args) -> int:
    inst, cert = load_instance(args.input)
    if args.eps is not None and args.tol is not None:
        raise UsageError("give either --eps or --tol, not both")
    if args.eps is not None or (args.tol is None and cert is not None):
        if cert is None:
            raise UsageError("--eps needs a certificate in the instance file; use --tol")
        target, eps = "distance", args.eps or 1e-6
    else:
        target, eps = "rel_err", args.tol or 1e-8
    cfg = SolverConfig(
        beta=args.beta, norm_mode=args.norm, target=target, eps=eps, max_onepdhg=args.max_iters,
        trace_level="full" if args.full_trace else "restarts",
    )
    result, trace = run_rpdhg(inst, cfg, cert)
    if args.trace:
        _write(args.trace, "".join(line + "\n" for line in trace.jsonl_lines()))
    if args.out:
        _write(args.out, emit_report(result, args.format))
    print(f"{inst.name}: {result.summary()}")
    return EXIT_OK if result.converged else EXIT_NUMERIC


def _certificate_for(args, inst, cert):
    if args.certify or (cert is None and inst.n <= AUTO_CERTIFY_MAX_N):
        try:
            return certify(inst), True
        except TooLarge as exc:
            if cert is None:
                raise LpError(f"no certificate and enumeration is not possible: {exc}") from exc
    if cert is None:
        raise LpError(f"no certificate in the file and n={inst.n} is too large for enumeration")
    return cert, False


def cmd_analyze(args, bounds_only: bool = False) -> int:
    inst, cert = load_instance(args.input)
    cert, from_oracle = _certificate_for(args, inst, cert)
    rep = condition_report(inst, cert, epsilon=args.eps, beta=args.beta)
    if from_oracle:
        rep.notes.append("certificate computed by basis enumeration")
    if args.gamma_note:
        total = float(abs(cert.x).sum() + abs(cert.s).sum())
        rep.notes.append(
            f"phi * min(zeta_p, zeta_d) = {rep.phi * min(rep.zeta_p, rep.zeta_d):.17g}"
            f" equals |x*|_1 + |s*|_1 = {total:.17g}"
        )
    payload = rep.bounds if bounds_only else rep
    path = _report_path(args.input, args.out, "bounds" if bounds_only else "report", args.format)
    _write(path, emit_report(payload, args.format))
    if bounds_only:
        b = rep.bounds
        print(f"{inst.name}: global {b.global_T['phi']:.4g}..{b.global_T['2phi']:.4g}, "
              f"T_basis {b.T_basis['phi']:.4g}..{b.T_basis['2phi']:.4g}, T_local {b.T_local:.4g} -> {path}")
    else:
        print(f"{inst.name}: phi={rep.phi:.6g} kappa={rep.kappa:.6g} zeta_p={rep.zeta_p:.6g} "
              f"zeta_d={rep.zeta_d:.6g} xi={rep.xi:.6g} -> {path}")
    return EXIT_OK


def cmd_verify(args) -> int:
    corpus = verification.default_corpus(seed=args.seed, todd_count=args.count)
    if args.input:
        inst, cert = load_instance(args.input)
        corpus.append((inst, certify(inst) if cert is None else cert))
    results = verification.run_suite(corpus)
    for res in results:
        print(res.line())
    if args.out:
        _write(args.out, "".join(json.dumps(vars(r)) + "\n" for r in results))
    failed = sum(not r.ok for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_NUMERIC


def cmd_experiment(args) -> int:
    out = Path(args.out)
    if args.kind == "perturbation":
        tol = args.tol or 1e-8
        recs = experiments.run_perturbation(gammas=tuple(args.gamma), tol=tol, max_iters=args.max_iters,
                                            beta=args.beta, jobs=args.jobs)
        csv_path, _ = experiments.write_perturbation_outputs(recs, out)
        for r in recs:
            print(f"{r.family} gamma={r.gamma:g}: {r.total_iters} steps "
                  f"(stage I {r.stage1_iters}, stage II {r.stage2_iters}), {r.term_reason}")
        print(f"wrote {csv_path}")
        return EXIT_OK
    if args.count < 0:
        raise UsageError("count must be nonnegative")
    if not args.m < args.n:
        raise UsageError(f"need m < n, got m={args.m}, n={args.n}")
    params = experiments.ToddBatchParams(
        m=args.m, n=args.n, count=args.count, seed=args.seed, tol=args.tol or 1e-4,
        max_iters=args.max_iters, beta=args.beta, with_bounds=args.kind == "two_stage",
    )
    recs = experiments.run_todd_batch(params, jobs=args.jobs)
    csv_path, _ = experiments.write_todd_outputs(recs, out, args.kind)
    ok = sum(r.ok for r in recs)
    print(f"{ok}/{len(recs)} instances reached the target; wrote {csv_path}")
    if args.kind == "regression" and ok >= 2:
        summary = experiments.regression_summary(recs)
        _write(out / "regression_fit.json", json.dumps(summary, indent=1, sort_keys=True) + "\n")
        for name, fit in summary.items():
            if "r2" in fit:
                print(f"{name}: intercept {fit['intercept']:.3f}, R^2 {fit['r2']:.4f}, "
                      f"max excess {fit['max_excess']:.3f} decades")
    return EXIT_OK


def dispatch(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "generate":
            return cmd_generate(args)
        if args.command == "solve":
            return cmd_solve(args)
        if args.command == "analyze":
            return cmd_analyze(args)
        if args.command == "bounds":
            return cmd_analyze(args, bounds_only=True)
        if args.command == "verify":
            return cmd_verify(args)
        return cmd_experiment(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UnsupportedFormat as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        print(f"file error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (LpError, ValueError, ArithmeticError) as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
