import math

import numpy as np
import pytest

from _invariants import fixed_point_residual, trace_violations
from rpdhg_lab.conditioning import iteration_bounds
from rpdhg_lab.errors import IterationLimit
from rpdhg_lab.generators import ToddSpec, generate_family, family_certificate, generate_todd
from rpdhg_lab.lp_core import validate_instance
from rpdhg_lab.oracle import rho_face_oracle, rho_grid_oracle
from rpdhg_lab.solver import (
    SolverConfig,
    default_step_sizes,
    normalized_duality_gap,
    pdhg_step,
    restart_triggered,
    run_rpdhg,
    support_of,
)
from rpdhg_lab.spectral import StepSizes, extreme_singular_values


def test_default_steps_lp1():
    steps = default_step_sizes(extreme_singular_values([[1.0, 1.0, 1.0]]))
    assert (steps.tau, steps.sigma) == pytest.approx((0.5, 1 / 6), rel=1e-12)


def test_default_steps_identity_and_lp2():
    steps = default_step_sizes(extreme_singular_values(np.eye(3)))
    assert (steps.tau, steps.sigma) == pytest.approx((0.5, 0.5))
    steps = default_step_sizes(extreme_singular_values([[1.0, 1.0, -1.0], [1.0, 0.0, 1.0]]))
    assert steps.tau == pytest.approx(1 / (2 * math.sqrt(1.5)), rel=1e-12)
    assert steps.sigma == pytest.approx(1 / (2 * math.sqrt(6)), rel=1e-12)
    assert steps.tau * steps.sigma * 3 == pytest.approx(0.25, rel=1e-12)


def test_pdhg_step_t0(t0):
    inst, cert = t0
    x, y = pdhg_step(inst, np.zeros(2), np.zeros(1), StepSizes(0.5, 0.5))
    np.testing.assert_array_equal(x, [0, 0])
    np.testing.assert_array_equal(y, [0.5])
    x, y = pdhg_step(inst, cert.x, cert.y, StepSizes(0.5, 0.5))
    np.testing.assert_array_equal(x, cert.x)
    np.testing.assert_array_equal(y, cert.y)


def test_fixed_point_on_certified_optima(t0, lp1_001, lp2_01, small_todd):
    for inst, cert in [t0, lp1_001, lp2_01, *small_todd]:
        steps = default_step_sizes(extreme_singular_values(inst.A))
        assert fixed_point_residual(inst, cert, steps) <= 1e-12


def test_rho_t0_example(t0):
    inst, _ = t0
    steps = StepSizes(0.5, 0.5)
    for r in (0.5, 1.0, 3.0):
        val = normalized_duality_gap(inst, np.array([1.0, 0.0]), np.array([0.5]), r, steps)
        assert val == pytest.approx(0.5 / math.sqrt(2), rel=1e-9)
    grid = rho_grid_oracle(inst, [1.0, 0.0], [0.5], 1.0, steps, n_samples=200_000)
    assert grid == pytest.approx(0.35355, abs=1e-4)


def test_rho_zero_at_optimum(lp1_001, lp2_01):
    for inst, cert in (lp1_001, lp2_01):
        steps = default_step_sizes(extreme_singular_values(inst.A))
        assert normalized_duality_gap(inst, cert.x, cert.y, 1.0, steps) == pytest.approx(0.0, abs=1e-12)
        assert normalized_duality_gap(inst, cert.x, cert.y, 1.0, steps, norm_mode="M") == pytest.approx(0.0, abs=1e-9)


def test_rho_m_mode_matches_face_oracle(small_todd, rng):
    for inst, cert in small_todd[:3]:
        steps = default_step_sizes(extreme_singular_values(inst.A))
        for _ in range(5):
            x = np.abs(cert.x + rng.standard_normal(inst.n))
            y = cert.y + rng.standard_normal(inst.m)
            got = normalized_duality_gap(inst, x, y, 0.7, steps, norm_mode="M")
            exact = rho_face_oracle(inst, x, y, 0.7, steps, norm="M")
            assert got == pytest.approx(exact, rel=1e-6, abs=1e-9)


@pytest.mark.parametrize("r", [1e-9, 1e-6, 1e-3, 10.0])
def test_rho_m_mode_small_radius_near_optimum(small_todd, r):
    # near the optimum both d and r are tiny; the M-norm value must stay relative-accurate
    inst, cert = small_todd[0]
    steps = default_step_sizes(extreme_singular_values(inst.A))
    rng = np.random.default_rng(3)
    for _ in range(5):
        x = np.abs(cert.x + 1e-3 * rng.standard_normal(inst.n))
        x[cert.s > 0] = 0.0
        y = cert.y + 1e-3 * rng.standard_normal(inst.m)
        got = normalized_duality_gap(inst, x, y, r, steps, norm_mode="M")
        exact = rho_face_oracle(inst, x, y, r, steps, norm="M")
        assert got == pytest.approx(exact, rel=1e-5)


def test_rho_rejects_bad_radius(t0):
    with pytest.raises(ValueError):
        normalized_duality_gap(t0[0], np.zeros(2), np.zeros(1), 0.0, StepSizes(0.5, 0.5))


def test_restart_rule():
    assert restart_triggered(0, 1, 5.0, math.inf, 1 / math.e)
    assert restart_triggered(3, 7, 0.0, 1.0, 1 / math.e)
    assert not restart_triggered(2, 4, 0.5, 1.0, 1 / math.e)


def test_t0_converges_within_global_bound(t0):
    inst, cert = t0
    res, trace = run_rpdhg(inst, SolverConfig(eps=1e-6), cert)
    assert res.converged and res.reason in ("distance", "saddle")
    assert abs(res.x @ inst.c - inst.b @ res.y) < 1e-5
    bound = iteration_bounds(inst, cert, 1e-6, 1 / math.e).global_T["phi"]
    assert res.iterations <= bound
    assert trace.total_onepdhg == res.iterations == sum(trace.inner_counts)


def test_lp1_gamma_trend():
    counts = []
    for gamma in (0.02, 0.001):
        inst = generate_family("LP1", gamma)
        res, _ = run_rpdhg(inst, SolverConfig(target="rel_err", eps=1e-8))
        assert res.converged
        counts.append(res.iterations)
    assert counts[1] >= 10 * counts[0]


def test_optimal_start_stops_after_one_step():
    inst = validate_instance([[1.0, 1.0, 0.0], [0.0, 1.0, 1.0]], [0.0, 0.0], [1.0, 2.0, 3.0])
    res, trace = run_rpdhg(inst, SolverConfig(target="rel_err", eps=1e-8))
    assert res.iterations == 1 and res.converged
    assert len(trace.restarts) == 1


def test_iteration_limit_flagged(lp1_001):
    inst, cert = lp1_001
    res, trace = run_rpdhg(inst, SolverConfig(eps=1e-12, max_onepdhg=50), cert)
    assert not res.converged and res.reason == "iteration_limit"
    assert res.iterations == 50 == trace.total_onepdhg
    with pytest.raises(IterationLimit):
        res.raise_if_limited()


def test_distance_target_needs_certificate(lp1_001):
    with pytest.raises(ValueError):
        run_rpdhg(lp1_001[0], SolverConfig(target="distance"))


def test_config_validation():
    for bad in (dict(beta=1.0), dict(eps=0.0), dict(norm_mode="L1"), dict(target="x"), dict(trace_level="all")):
        with pytest.raises(ValueError):
            SolverConfig(**bad).validate()


def test_compiled_and_reference_paths_agree():
    inst, cert = generate_todd(ToddSpec(6, 12, 3))
    fast, ft = run_rpdhg(inst, SolverConfig(eps=1e-6), cert)
    ref, rt = run_rpdhg(inst, SolverConfig(eps=1e-6, trace_level="full"), cert)
    assert fast.iterations == ref.iterations
    assert ft.inner_counts == rt.inner_counts
    np.testing.assert_allclose(fast.x, ref.x, rtol=1e-9, atol=1e-12)


def test_full_trace_averages(lp2_01):
    inst, cert = lp2_01
    _, trace = run_rpdhg(inst, SolverConfig(eps=1e-6, trace_level="full"), cert)
    loop = [rec for rec in trace.inner if rec.n == 1]
    xs = np.array([rec.x for rec in loop])
    for k, rec in enumerate(loop, start=1):
        np.testing.assert_allclose(rec.xbar, xs[:k].mean(axis=0), rtol=1e-12, atol=1e-12)


def test_deterministic_traces(lp2_01):
    inst, cert = lp2_01
    a = run_rpdhg(inst, SolverConfig(eps=1e-6), cert)[1].jsonl_lines()
    b = run_rpdhg(inst, SolverConfig(eps=1e-6), cert)[1].jsonl_lines()
    assert a == b


def test_trace_jsonl_fields(lp2_01):
    import json

    inst, cert = lp2_01
    _, trace = run_rpdhg(inst, SolverConfig(eps=1e-4), cert)
    rec = json.loads(trace.jsonl_lines()[0])
    assert list(rec) == ["n", "k", "rho", "mtilde_dist_moved", "support_size", "gap", "rel_err"]


@pytest.mark.parametrize("family,gamma", [("LP1", 0.1), ("LP2", 0.1)])
def test_trace_invariants_families(family, gamma):
    inst, cert = generate_family(family, gamma), family_certificate(family, gamma)
    _, trace = run_rpdhg(inst, SolverConfig(eps=1e-6, trace_level="full"), cert)
    bad = trace_violations(inst, cert, trace, sublinear_stride=3)
    assert bad["checked"] > 0
    assert {k: v for k, v in bad.items() if k != "checked"} == dict.fromkeys(
        ["nonexpansive_inner", "nonexpansive_outer", "sublinear", "restart_decrease"], 0
    )


def test_support_threshold():
    assert support_of(np.array([1.0, 1e-12, 0.0, 2.0])).tolist() == [0, 3]
