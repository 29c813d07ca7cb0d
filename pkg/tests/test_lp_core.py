import json
import math

import numpy as np
import pytest

from rpdhg_lab.errors import DimensionMismatch, NonFiniteData, RankDeficient, SingularBasis
from rpdhg_lab.lp_core import (
    PrimalDualPoint,
    certificate_from_basis,
    compute_symmetric_form,
    duality_gap,
    duality_gap_xs,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    permute_to_basis_order,
    relative_error,
    save_instance,
    unpermute_instance,
    validate_instance,
)


def test_validate_t0(t0):
    inst, _ = t0
    assert (inst.m, inst.n) == (1, 2)


def test_validate_rank_deficient():
    with pytest.raises(RankDeficient):
        validate_instance([[1, 1], [2, 2]], [1, 2], [0, 0])


def test_validate_lp2_zero_data():
    inst = validate_instance([[1, 1, -1], [1, 0, 1]], [1, 1], [-0.5, 1, 0.5])
    assert (inst.m, inst.n) == (2, 3)


def test_validate_rejects_bad_shapes_and_values():
    with pytest.raises(DimensionMismatch):
        validate_instance([[1, 1]], [1, 2], [0, 1])
    with pytest.raises(DimensionMismatch):
        validate_instance([[1, 1]], [1], [0, 1, 2])
    with pytest.raises(NonFiniteData):
        validate_instance([[1, np.nan]], [1], [0, 1])
    with pytest.raises(DimensionMismatch):
        validate_instance([[1], [2]], [1, 1], [1])


def test_instance_arrays_are_read_only(t0):
    inst, _ = t0
    with pytest.raises(ValueError):
        inst.A[0, 0] = 5.0


def test_symmetric_form_t0(t0):
    sym = compute_symmetric_form(t0[0])
    np.testing.assert_allclose(sym.q, [0.5, 0.5], atol=1e-15)
    np.testing.assert_allclose(sym.c_bar, [-0.5, 0.5], atol=1e-15)


def test_symmetric_form_lp2_zero():
    inst = validate_instance([[1, 1, -1], [1, 0, 1]], [1, 1], [-0.5, 1, 0.5])
    np.testing.assert_allclose(inst.symmetric.q, [5 / 6, 1 / 3, 1 / 6], atol=1e-14)


def test_symmetric_form_identity_on_nullspace():
    inst = validate_instance([[1, 1, 1]], [2], [2, -1, -1])
    np.testing.assert_allclose(inst.symmetric.c_bar, inst.c, atol=1e-14)


def test_gaps_t0(t0):
    inst, cert = t0
    assert duality_gap(inst, [1, 0], [0]) == 0.0
    assert duality_gap(inst, [0, 1], [0]) == 1.0
    assert duality_gap(inst, cert.x, cert.y) == 0.0


def test_gap_variants_agree(lp2_01, rng):
    inst, _ = lp2_01
    x = np.abs(rng.standard_normal(3))
    y = rng.standard_normal(2)
    s = inst.c - inst.A.T @ y
    assert duality_gap(inst, x, y) == pytest.approx(duality_gap_xs(inst, x, s), rel=1e-12, abs=1e-12)


def test_relative_error_examples(t0):
    inst, cert = t0
    assert relative_error(inst, cert.x, cert.y) == 0.0
    assert relative_error(inst, [1.1, 0], [0]) == pytest.approx(0.05, abs=1e-15)
    # dual infeasibility |(-2, -1)|/2 plus gap 2/3 is 1.7847; the primal term |A0 - b|/2 adds 0.5
    dual_and_gap = math.hypot(2, 1) / 2 + 2 / 3
    assert dual_and_gap == pytest.approx(1.7847, abs=1e-4)
    assert relative_error(inst, [0, 0], [2]) == pytest.approx(dual_and_gap + 0.5, rel=1e-12)


def test_permute_lp1(lp1_001):
    inst, _ = lp1_001
    permuted, perm = permute_to_basis_order(inst, (1,))
    assert perm.tolist() == [1, 0, 2]
    np.testing.assert_array_equal(permuted.A, [[1.0, 1.0, 1.0]])
    assert unpermute_instance(permuted, perm).c.tolist() == inst.c.tolist()


def test_permute_identity_and_singular(t0):
    _, perm = permute_to_basis_order(t0[0], (0,))
    assert perm.tolist() == [0, 1]
    inst = validate_instance([[1, 0]], [1], [0, 1])
    with pytest.raises(SingularBasis):
        permute_to_basis_order(inst, (1,))


def test_permute_bad_basis(t0):
    with pytest.raises(DimensionMismatch):
        permute_to_basis_order(t0[0], (0, 1))
    with pytest.raises(DimensionMismatch):
        permute_to_basis_order(t0[0], (5,))


def test_certificate_from_basis(lp1_001):
    inst, cert = lp1_001
    got = certificate_from_basis(inst, (1,))
    np.testing.assert_allclose(got.x, cert.x)
    np.testing.assert_allclose(got.y, cert.y)
    np.testing.assert_allclose(got.s, cert.s, atol=1e-15)
    assert max(got.residuals(inst).values()) <= 1e-12
    assert got.nondegenerate


def test_point_slack(t0):
    inst, _ = t0
    pt = PrimalDualPoint(np.array([1.0, 0.0]), np.array([0.5]))
    np.testing.assert_allclose(pt.slack(inst), [-0.5, 0.5])
    assert pt.check(inst)
    assert not PrimalDualPoint(pt.x, pt.y, np.zeros(2)).check(inst)


def test_json_round_trip(tmp_path, lp1_001):
    inst, cert = lp1_001
    path = tmp_path / "lp1.json"
    save_instance(path, inst, cert)
    back, back_cert = load_instance(path)
    np.testing.assert_array_equal(back.A, inst.A)
    np.testing.assert_array_equal(back.c, inst.c)
    assert back_cert.basis == cert.basis
    data = json.loads(path.read_text())
    assert set(data) == {"name", "m", "n", "A", "b", "c", "certificate"}


def test_json_rejects_inconsistent(lp1_001):
    data = instance_to_dict(*lp1_001)
    data["m"] = 2
    with pytest.raises(DimensionMismatch):
        instance_from_dict(data)
    data = instance_to_dict(*lp1_001)
    data["certificate"]["basis"] = [0, 1]
    with pytest.raises(DimensionMismatch):
        instance_from_dict(data)
    with pytest.raises(DimensionMismatch):
        instance_from_dict({"A": [[1]]})
