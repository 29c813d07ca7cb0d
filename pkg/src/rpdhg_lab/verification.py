"""Oracle cross-checks of the closed forms on a small built-in corpus.

Each check returns a :class:`CheckResult`; ``verify`` on the command line
runs :func:`run_suite` and fails when any check fails.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conditioning import condition_report, optimal_reweight, phi_reweighted, stability_measures
from .generators import ToddSpec, derive_seed, family_certificate, generate_family, generate_todd
from .lp_core import LpInstance, OptimalCertificate, validate_instance
from .oracle import enumerate_optimal_basis, rho_face_oracle, zeta_perturbation_search
from .solver import default_step_sizes, normalized_duality_gap
from .spectral import extreme_singular_values


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.ok else 'FAIL'} {self.name}: {self.detail}"


def t0_instance() -> tuple[LpInstance, OptimalCertificate]:
    """``min x2  s.t.  x1 + x2 = 1, x >= 0`` with optimum ``(1, 0)``."""
    inst = validate_instance([[1.0, 1.0]], [1.0], [0.0, 1.0], name="T0")
    cert = OptimalCertificate((0,), np.array([1.0, 0.0]), np.zeros(1), np.array([0.0, 1.0]), True)
    return inst, cert


def default_corpus(seed: int = 11, todd_count: int = 4) -> list:
    corpus = [t0_instance()]
    corpus.append((generate_family("LP1", 0.01), family_certificate("LP1", 0.01)))
    corpus.append((generate_family("LP2", 0.1), family_certificate("LP2", 0.1)))
    for i in range(todd_count):
        corpus.append(generate_todd(ToddSpec(3, 6, derive_seed(seed, i))))
    return corpus


def check_certificate(inst, cert) -> CheckResult:
    res = enumerate_optimal_basis(inst)
    got = res.certificate
    ok = got is not None and sorted(got.basis) == sorted(cert.basis)
    if ok:
        ok = np.allclose(got.x, cert.x, atol=1e-8) and np.allclose(got.s, cert.s, atol=1e-8)
    basis = None if got is None else list(got.basis)
    return CheckResult(f"{inst.name} enumeration", bool(ok), f"oracle basis {basis}, certificate {list(cert.basis)}")


def check_rho(inst, cert, samples: int = 20, seed: int = 0, rtol: float = 1e-6) -> CheckResult:
    """Bisection value of rho against exact face enumeration at random points."""
    rng = np.random.default_rng(seed)
    steps = default_step_sizes(extreme_singular_values(inst.A))
    worst = 0.0
    for _ in range(samples):
        x = np.abs(cert.x + rng.standard_normal(inst.n))
        y = cert.y + rng.standard_normal(inst.m)
        r = float(rng.uniform(0.05, 2.0))
        fast = normalized_duality_gap(inst, x, y, r, steps)
        exact = rho_face_oracle(inst, x, y, r, steps)
        worst = max(worst, abs(fast - exact) / max(1.0, abs(exact)))
    return CheckResult(f"{inst.name} rho", worst <= rtol, f"worst relative difference {worst:.2e}")


def check_zeta(inst, cert, n_dirs: int = 60, seed: int = 0) -> CheckResult:
    """Closed-form zeta against the smallest basis-breaking perturbation found."""
    st = stability_measures(inst, cert)
    cost = zeta_perturbation_search(inst, cert, n_dirs=n_dirs, mode="cost", seed=seed)
    rhs = zeta_perturbation_search(inst, cert, n_dirs=n_dirs, mode="rhs", seed=seed)
    # no perturbation below the closed form may break the basis; the edge search attains it
    ok = all(
        found >= 0.999 * formula and abs(found - formula) <= 1e-6 * max(1.0, formula)
        for found, formula in ((cost.value, st.zeta_p), (rhs.value, st.zeta_d))
    )
    detail = f"zeta_p {st.zeta_p:.6g} vs {cost.value:.6g}; zeta_d {st.zeta_d:.6g} vs {rhs.value:.6g}"
    return CheckResult(f"{inst.name} zeta", ok, detail)


def check_phi_identities(inst, cert) -> CheckResult:
    rep = condition_report(inst, cert)
    l1 = float(np.abs(cert.x).sum() + np.abs(cert.s).sum())
    via_zeta = l1 / min(rep.zeta_p, rep.zeta_d)
    rw = optimal_reweight(inst, cert)
    grid_min = min(phi_reweighted(inst, cert, 2.0**k, 1.0) for k in range(-20, 21))
    checks = {
        "zeta form": abs(rep.phi - via_zeta) <= 1e-9 * rep.phi,
        "upper bound": rep.phi <= rep.phi_upper * (1 + 1e-12),
        "sublevel ratio": abs(rep.sublevel["ratio"] - rep.phi) <= 1e-9 * rep.phi,
        "unit weights": abs(phi_reweighted(inst, cert, 1.0, 1.0) - rep.phi) <= 1e-12 * rep.phi,
        "reweight factor 2": rw.phi_opt <= 2.0 * grid_min * (1 + 1e-12),
    }
    bad = [k for k, v in checks.items() if not v]
    return CheckResult(f"{inst.name} phi identities", not bad, "all hold" if not bad else f"violated: {bad}")


def run_suite(corpus=None, rho_samples: int = 20, zeta_dirs: int = 60) -> list[CheckResult]:
    corpus = default_corpus() if corpus is None else corpus
    out = []
    for inst, cert in corpus:
        out.append(check_certificate(inst, cert))
        out.append(check_phi_identities(inst, cert))
        out.append(check_zeta(inst, cert, n_dirs=zeta_dirs))
        if inst.n <= 16:
            out.append(check_rho(inst, cert, samples=rho_samples))
    return out
