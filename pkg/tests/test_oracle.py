import math

import numpy as np
import pytest

from rpdhg_lab.conditioning import stability_measures
from rpdhg_lab.errors import Infeasible, MultipleOptima, TooLarge, Unbounded
from rpdhg_lab.generators import ToddSpec, generate_family, generate_todd
from rpdhg_lab.lp_core import validate_instance
from rpdhg_lab.oracle import (
    best_suboptimal_gap,
    certify,
    enumerate_optimal_basis,
    rho_face_oracle,
    rho_grid_oracle,
    zeta_perturbation_search,
)
from rpdhg_lab.solver import default_step_sizes, normalized_duality_gap
from rpdhg_lab.spectral import StepSizes, extreme_singular_values


def test_enumerate_t0(t0):
    cert = certify(t0[0])
    assert cert.basis == (0,)
    np.testing.assert_allclose(cert.x, [1, 0])
    np.testing.assert_allclose(cert.y, [0], atol=1e-15)
    np.testing.assert_allclose(cert.s, [0, 1])


def test_lp1_gamma0_multiple_optima():
    with pytest.raises(MultipleOptima) as info:
        certify(generate_family("LP1", 0.0))
    assert len(info.value.result.optimal_bases) == 2


def test_lp1_unique(lp1_001):
    cert = certify(lp1_001[0])
    assert cert.basis == (1,)
    np.testing.assert_allclose(cert.x, [0, 2, 0])


def test_planted_basis_recovered():
    for seed in range(5):
        inst, cert = generate_todd(ToddSpec(8, 16, seed))
        got = certify(inst)
        assert sorted(got.basis) == list(range(8))
        assert max(got.residuals(inst).values()) <= 1e-9


def test_infeasible_and_unbounded():
    with pytest.raises(Infeasible):
        enumerate_optimal_basis(validate_instance([[1.0, 1.0]], [-1.0], [1.0, 1.0]))
    with pytest.raises(Unbounded):
        enumerate_optimal_basis(validate_instance([[1.0, -1.0]], [1.0], [0.0, -1.0]))


def test_too_large():
    inst, _ = generate_todd(ToddSpec(15, 40, 0))
    with pytest.raises(TooLarge):
        enumerate_optimal_basis(inst)


def test_best_suboptimal_gap(t0, lp1_001):
    assert best_suboptimal_gap(*t0) == pytest.approx(1.0)
    assert best_suboptimal_gap(*lp1_001) == pytest.approx(0.02, rel=1e-12)
    single = validate_instance([[1.0, 0.0], [0.0, 2.0]], [1.0, 1.0], [1.0, 1.0])
    assert best_suboptimal_gap(single) == math.inf


def test_rho_oracles_t0(t0):
    inst, cert = t0
    steps = StepSizes(0.5, 0.5)
    assert rho_face_oracle(inst, [1.0, 0.0], [0.5], 1.0, steps) == pytest.approx(0.5 / math.sqrt(2), rel=1e-12)
    assert rho_grid_oracle(inst, cert.x, cert.y, 1.0, steps, n_samples=100_000) <= 1e-6


def test_rho_grid_lower_bounds_exact(rng, lp2_01):
    inst, cert = lp2_01
    steps = default_step_sizes(extreme_singular_values(inst.A))
    for _ in range(5):
        x = np.abs(rng.standard_normal(3))
        y = rng.standard_normal(2)
        exact = normalized_duality_gap(inst, x, y, 0.5, steps)
        grid = rho_grid_oracle(inst, x, y, 0.5, steps, n_samples=100_000, seed=1)
        assert grid <= exact * (1 + 1e-9) + 1e-12
        assert grid >= exact * (1 - 1e-3)


def test_rho_grid_size_limit():
    inst, cert = generate_todd(ToddSpec(3, 6, 0))
    with pytest.raises(TooLarge):
        rho_grid_oracle(inst, cert.x, cert.y, 1.0, StepSizes(0.1, 0.1))


def test_zeta_search_t0(t0):
    res = zeta_perturbation_search(*t0, n_dirs=500, mode="cost")
    assert res.value >= (1 / math.sqrt(2)) * (1 - 1e-6)
    assert res.edge_value == pytest.approx(1 / math.sqrt(2), rel=1e-6)
    assert res.random_value >= res.edge_value * (1 - 1e-6)


def test_zeta_search_lp1(lp1_001):
    res = zeta_perturbation_search(*lp1_001, n_dirs=50, mode="cost")
    assert res.value == pytest.approx(0.01 / math.sqrt(2), rel=1e-5)
    assert abs(res.direction[2]) == pytest.approx(max(abs(res.direction)))


def test_zeta_search_rhs(lp2_01):
    st = stability_measures(*lp2_01)
    res = zeta_perturbation_search(*lp2_01, n_dirs=50, mode="rhs")
    assert res.value >= st.zeta_d * (1 - 1e-6)
    assert res.value == pytest.approx(st.zeta_d, rel=1e-5)


def test_zeta_search_bad_mode(t0):
    with pytest.raises(ValueError):
        zeta_perturbation_search(*t0, mode="both")
