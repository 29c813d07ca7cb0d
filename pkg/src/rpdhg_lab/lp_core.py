"""Standard-form LP data, the symmetric primal-dual view, gaps and residuals.

The problem is ``min c'x  s.t.  Ax = b, x >= 0`` with dual
``max b'y  s.t.  A'y + s = c, s >= 0``.  Everything here is dense and
desk-scale; ``A`` must have full row rank.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import linalg

from .errors import (
    DimensionMismatch,
    FactorizationFailure,
    NonFiniteData,
    RankDeficient,
    SingularBasis,
)

RANK_TOL = 1e-10


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=float, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class LpInstance:
    """Validated standard-form LP.  Build it with :func:`validate_instance`."""

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    name: str = ""

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @cached_property
    def gram_factor(self):
        """Cholesky factor of ``A A'``, computed once and reused."""
        try:
            return linalg.cho_factor(self.A @ self.A.T, lower=True, check_finite=False)
        except linalg.LinAlgError as exc:
            raise FactorizationFailure(f"A A' is not positive definite: {exc}") from exc

    def gram_solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve ``(A A') u = rhs``."""
        return linalg.cho_solve(self.gram_factor, rhs, check_finite=False)

    @cached_property
    def symmetric(self) -> "SymmetricForm":
        return compute_symmetric_form(self)

    def with_data(self, *, b=None, c=None, name=None) -> "LpInstance":
        return validate_instance(
            self.A,
            self.b if b is None else b,
            self.c if c is None else c,
            name=self.name if name is None else name,
        )


@dataclass(frozen=True, eq=False)
class SymmetricForm:
    """``q`` is the min-norm point of ``{x: Ax = b}``; ``c_bar`` is ``c`` projected onto Null(A)."""

    q: np.ndarray
    c_bar: np.ndarray

    @property
    def norm_q(self) -> float:
        return float(np.linalg.norm(self.q))

    @property
    def norm_c_bar(self) -> float:
        return float(np.linalg.norm(self.c_bar))


@dataclass
class PrimalDualPoint:
    x: np.ndarray
    y: np.ndarray
    s: np.ndarray | None = None

    def slack(self, inst: LpInstance) -> np.ndarray:
        if self.s is None:
            self.s = inst.c - inst.A.T @ self.y
        return self.s

    def check(self, inst: LpInstance, tol: float = 1e-10) -> bool:
        if self.s is None:
            return True
        ref = inst.c - inst.A.T @ self.y
        return bool(np.linalg.norm(self.s - ref) <= tol * (1.0 + np.linalg.norm(inst.c)))


@dataclass(frozen=True, eq=False)
class OptimalCertificate:
    """Optimal basis together with the primal-dual optimal pair.

    ``basis`` lists the ``m`` column indices (0-based) of the optimal basis.
    """

    basis: tuple[int, ...]
    x: np.ndarray
    y: np.ndarray
    s: np.ndarray
    unique: bool = True

    @property
    def nonbasis(self) -> tuple[int, ...]:
        chosen = set(self.basis)
        return tuple(j for j in range(self.x.size) if j not in chosen)

    @property
    def nondegenerate(self) -> bool:
        xb = self.x[list(self.basis)]
        sn = self.s[list(self.nonbasis)]
        return bool(np.all(xb > 0) and np.all(sn > 0))

    @property
    def w_norm(self) -> float:
        """Euclidean norm of ``w* = (x*, s*)``."""
        return float(np.sqrt(self.x @ self.x + self.s @ self.s))

    def residuals(self, inst: LpInstance) -> dict[str, float]:
        """Violation of every certificate invariant (all should be ~0)."""
        basis = list(self.basis)
        nonbasis = list(self.nonbasis)
        return {
            "primal": float(np.linalg.norm(inst.A @ self.x - inst.b)),
            "dual": float(np.linalg.norm(inst.A.T @ self.y + self.s - inst.c)),
            "x_neg": float(max(0.0, -self.x.min())),
            "s_neg": float(max(0.0, -self.s.min())),
            "complementarity": float(abs(self.x @ self.s)),
            "x_off_basis": float(np.abs(self.x[nonbasis]).max(initial=0.0)),
            "s_on_basis": float(np.abs(self.s[basis]).max(initial=0.0)),
        }

    def to_dict(self) -> dict:
        return {
            "basis": [int(i) for i in self.basis],
            "x": self.x.tolist(),
            "y": self.y.tolist(),
            "s": self.s.tolist(),
        }


def validate_instance(A, b, c, name: str = "") -> LpInstance:
    """Check shapes, finiteness and full row rank, then freeze the data."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    c = np.atleast_1d(np.asarray(c, dtype=float))
    if A.ndim != 2 or b.ndim != 1 or c.ndim != 1:
        raise DimensionMismatch("A must be a matrix, b and c vectors")
    m, n = A.shape
    if m < 1 or n < m:
        raise DimensionMismatch(f"need n >= m >= 1, got m={m}, n={n}")
    if b.size != m:
        raise DimensionMismatch(f"b has length {b.size}, expected {m}")
    if c.size != n:
        raise DimensionMismatch(f"c has length {c.size}, expected {n}")
    if not (np.isfinite(A).all() and np.isfinite(b).all() and np.isfinite(c).all()):
        raise NonFiniteData("instance data contain NaN or infinite entries")
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[0] == 0.0 or sv[-1] <= RANK_TOL * sv[0]:
        raise RankDeficient(
            f"rows of A are not linearly independent (sigma_min={sv[-1]:.3e}, sigma_max={sv[0]:.3e})"
        )
    return LpInstance(_frozen(A), _frozen(b), _frozen(c), name)


def compute_symmetric_form(inst: LpInstance) -> SymmetricForm:
    q = inst.A.T @ inst.gram_solve(inst.b)
    c_bar = inst.c - inst.A.T @ inst.gram_solve(inst.A @ inst.c)
    return SymmetricForm(_frozen(q), _frozen(c_bar))


def duality_gap(inst: LpInstance, x, y) -> float:
    """``c'x - b'y``."""
    return float(inst.c @ x - inst.b @ y)


def duality_gap_xs(inst: LpInstance, x, s) -> float:
    """Gap written on the slack: ``c'x - q'(c - s)``."""
    q = inst.symmetric.q
    return float(inst.c @ x - q @ (inst.c - s))


def relative_error(inst: LpInstance, x, y) -> float:
    """Relative KKT error with ``x`` clipped to the orthant.

    Sum of relative primal residual, dual infeasibility of ``c - A'y`` and
    relative gap.
    """
    xp = np.maximum(x, 0.0)
    s = inst.c - inst.A.T @ y
    primal = np.linalg.norm(inst.A @ xp - inst.b) / (1.0 + np.linalg.norm(inst.b))
    dual = np.linalg.norm(np.minimum(s, 0.0)) / (1.0 + np.linalg.norm(inst.c))
    pobj = float(inst.c @ xp)
    dobj = float(inst.b @ y)
    gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
    return float(primal + dual + gap)


def basis_matrix_check(inst: LpInstance, basis) -> np.ndarray:
    """Return ``B = A[:, basis]`` or raise :class:`SingularBasis`."""
    basis = list(basis)
    B = inst.A[:, basis]
    sv = np.linalg.svd(B, compute_uv=False)
    scale = np.linalg.norm(inst.A, 2)
    if sv[-1] <= RANK_TOL * scale:
        raise SingularBasis(f"basis {[i + 1 for i in basis]} (1-based) is singular")
    return B


def permute_to_basis_order(inst: LpInstance, basis) -> tuple[LpInstance, np.ndarray]:
    """Reorder columns so the basis comes first, the rest in increasing order.

    Returns the permuted instance and ``perm`` with ``new[:, k] = old[:, perm[k]]``.
    """
    basis = [int(i) for i in basis]
    if len(basis) != inst.m or len(set(basis)) != inst.m:
        raise DimensionMismatch(f"basis must hold {inst.m} distinct indices")
    if min(basis) < 0 or max(basis) >= inst.n:
        raise DimensionMismatch("basis index out of range")
    basis_matrix_check(inst, basis)
    chosen = set(basis)
    perm = np.array(basis + [j for j in range(inst.n) if j not in chosen], dtype=int)
    permuted = LpInstance(_frozen(inst.A[:, perm]), inst.b, _frozen(inst.c[perm]), inst.name)
    return permuted, perm


def inverse_permutation(perm: np.ndarray) -> np.ndarray:
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.size)
    return inv


def unpermute_instance(inst: LpInstance, perm: np.ndarray) -> LpInstance:
    inv = inverse_permutation(perm)
    return LpInstance(_frozen(inst.A[:, inv]), inst.b, _frozen(inst.c[inv]), inst.name)


def certificate_from_basis(inst: LpInstance, basis, unique: bool = True) -> OptimalCertificate:
    """Basic solution and dual pair of ``basis`` (no optimality check)."""
    basis = tuple(int(i) for i in basis)
    B = basis_matrix_check(inst, basis)
    lu = linalg.lu_factor(B, check_finite=False)
    x = np.zeros(inst.n)
    x[list(basis)] = linalg.lu_solve(lu, inst.b, check_finite=False)
    y = linalg.lu_solve(lu, inst.c[list(basis)], trans=1, check_finite=False)
    s = inst.c - inst.A.T @ y
    s[list(basis)] = 0.0
    return OptimalCertificate(basis, x, y, s, unique)


# ---------------------------------------------------------------------------
# JSON instance files
# ---------------------------------------------------------------------------


def instance_to_dict(inst: LpInstance, cert: OptimalCertificate | None = None) -> dict:
    data = {
        "name": inst.name,
        "m": inst.m,
        "n": inst.n,
        "A": inst.A.tolist(),
        "b": inst.b.tolist(),
        "c": inst.c.tolist(),
    }
    if cert is not None:
        data["certificate"] = cert.to_dict()
    return data


def instance_from_dict(data: dict) -> tuple[LpInstance, OptimalCertificate | None]:
    try:
        inst = validate_instance(data["A"], data["b"], data["c"], name=str(data.get("name", "")))
    except KeyError as exc:
        raise DimensionMismatch(f"instance file is missing field {exc}") from exc
    for key in ("m", "n"):
        if key in data and int(data[key]) != getattr(inst, key):
            raise DimensionMismatch(f"declared {key}={data[key]} disagrees with the data")
    cert = None
    raw = data.get("certificate")
    if raw:
        cert = OptimalCertificate(
            tuple(int(i) for i in raw["basis"]),
            np.asarray(raw["x"], dtype=float),
            np.asarray(raw["y"], dtype=float),
            np.asarray(raw["s"], dtype=float),
        )
        if cert.x.size != inst.n or cert.s.size != inst.n or cert.y.size != inst.m:
            raise DimensionMismatch("certificate vectors do not match the instance")
        if len(cert.basis) != inst.m:
            raise DimensionMismatch("certificate basis must have m entries")
    return inst, cert


def load_instance(path) -> tuple[LpInstance, OptimalCertificate | None]:
    with open(path) as fh:
        return instance_from_dict(json.load(fh))


def save_instance(path, inst: LpInstance, cert: OptimalCertificate | None = None) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst, cert), indent=1))
