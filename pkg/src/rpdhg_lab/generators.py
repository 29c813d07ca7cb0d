"""Instance generators: random LPs with a planted optimum and the two toy families."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RankDeficient
from .lp_core import LpInstance, OptimalCertificate, validate_instance


@dataclass(frozen=True)
class ToddSpec:
    m: int
    n: int
    seed: int
    use_projected_c: bool = True

    def __post_init__(self):
        if not 1 <= self.m < self.n:
            raise ValueError(f"need 1 <= m < n, got m={self.m}, n={self.n}")


def derive_seed(master_seed: int, index: int) -> int:
    """64-bit seed of instance ``index`` in a batch driven by ``master_seed``."""
    return int(np.random.SeedSequence([master_seed, index]).generate_state(1, dtype=np.uint64)[0])


def instance_rng(seed: int, attempt: int = 0) -> np.random.Generator:
    """PCG64 stream for one instance; ``attempt`` moves to a fresh stream after a bad draw."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, attempt])))


def generate_todd(spec: ToddSpec, max_attempts: int = 20) -> tuple[LpInstance, OptimalCertificate]:
    """Gaussian ``A`` with a planted nondegenerate optimal basis ``{0, ..., m-1}``.

    ``x_hat`` is half-normal on the basis, ``s_hat`` half-normal off it,
    ``b = A x_hat``.  The cost is ``s_hat`` (dual optimum ``y = 0``) or, with
    ``use_projected_c``, the least-norm member ``s_hat + A'y_hat`` of the
    same affine family, whose dual optimum is ``y_hat``.
    """
    m, n = spec.m, spec.n
    for attempt in range(max_attempts):
        rng = instance_rng(spec.seed, attempt)
        A = rng.standard_normal((m, n))
        x_hat = np.zeros(n)
        x_hat[:m] = np.abs(rng.standard_normal(m))
        s_hat = np.zeros(n)
        s_hat[m:] = np.abs(rng.standard_normal(n - m))
        b = A @ x_hat
        try:
            probe = validate_instance(A, b, s_hat)
        except RankDeficient:
            continue
        if np.linalg.svd(A[:, :m], compute_uv=False)[-1] <= 1e-10 * np.linalg.norm(A, 2):
            continue
        if spec.use_projected_c:
            y_hat = -probe.gram_solve(A @ s_hat)
            c = s_hat + A.T @ y_hat
        else:
            y_hat = np.zeros(m)
            c = s_hat
        name = f"todd-m{m}-n{n}-seed{spec.seed}"
        if attempt:
            name += f"-redraw{attempt}"
        inst = validate_instance(A, b, c, name=name)
        cert = OptimalCertificate(tuple(range(m)), x_hat, y_hat, s_hat, True)
        return inst, cert
    raise RankDeficient(f"no full-rank draw in {max_attempts} attempts")


def lp1(gamma: float) -> LpInstance:
    """One-row family with unique optimum (0, 2, 0) for small ``gamma > 0``."""
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    c = np.array([2.0, -1.0, -1.0]) + np.array([0.0, -gamma / 2.0, gamma / 2.0])
    return validate_instance([[1.0, 1.0, 1.0]], [2.0], c, name=f"LP1-gamma{gamma:g}")


def lp2(gamma: float) -> LpInstance:
    """Two-row family whose right-hand side approaches a degenerate one as ``gamma -> 0``."""
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    A = [[1.0, 1.0, -1.0], [1.0, 0.0, 1.0]]
    b = np.array([1.0, 1.0]) + np.array([gamma, 2.0 * gamma])
    return validate_instance(A, b, [-0.5, 1.0, 0.5], name=f"LP2-gamma{gamma:g}")


def generate_family(kind: str, gamma: float) -> LpInstance:
    kinds = {"LP1": lp1, "LP2": lp2, "lp1": lp1, "lp2": lp2}
    if kind not in kinds:
        raise ValueError(f"unknown family {kind!r}")
    return kinds[kind](gamma)


def family_certificate(kind: str, gamma: float) -> OptimalCertificate:
    """Hand-derived optimum of the toy families (valid for ``0 < gamma`` small)."""
    if kind.upper() == "LP1":
        x = np.array([0.0, 2.0, 0.0])
        y = np.array([-1.0 - gamma / 2.0])
        s = np.array([3.0 + gamma / 2.0, 0.0, gamma])
        return OptimalCertificate((1,), x, y, s, True)
    if kind.upper() == "LP2":
        x = np.array([1.0 + 1.5 * gamma, 0.0, gamma / 2.0])
        y = np.array([-0.5, 0.0])
        s = np.array([0.0, 1.5, 0.0])
        return OptimalCertificate((0, 2), x, y, s, True)
    raise ValueError(f"unknown family {kind!r}")
