"""Brute-force ground truth for tiny LPs.

Optimal bases are found by enumerating every m-subset of columns, and
unboundedness by enumerating the extreme rays of ``{d >= 0, Ad = 0}``.  The
normalized duality gap is checked by exact enumeration of the faces of the
orthant constraint plus dense sampling, and the stability radii by bisecting
along perturbation directions with a full re-enumeration at every probe.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .conditioning import basis_data
from .errors import Infeasible, MultipleOptima, TooLarge, Unbounded
from .lp_core import LpInstance, OptimalCertificate
from .spectral import StepSizes, m_matrix

MAX_SUBSETS = 1_000_000
ENUM_TOL = 1e-9


@dataclass
class EnumerationResult:
    objective: float
    optimal_bases: list
    solutions: list  # (x, y, s) per optimal basis
    unique: bool
    nondegenerate: bool
    vertices: np.ndarray = field(repr=False)  # feasible basic solutions, one per row
    vertex_bases: list = field(repr=False)
    certificate: OptimalCertificate | None = None


class _Enumerator:
    """Caches basis inverses and extreme rays of a fixed constraint matrix."""

    def __init__(self, A: np.ndarray):
        m, n = A.shape
        if math.comb(n, m) > MAX_SUBSETS or math.comb(n, min(m + 1, n)) > MAX_SUBSETS:
            raise TooLarge(f"C({n}, {m}) subsets exceed the enumeration limit {MAX_SUBSETS}")
        self.A = A
        scale = float(np.linalg.norm(A, 2))
        combos = np.array(list(itertools.combinations(range(n), m)), dtype=int)
        Bs = A[:, combos].transpose(1, 0, 2)  # (K, m, m)
        sv = np.linalg.svd(Bs, compute_uv=False)
        ok = sv[:, -1] > 1e-10 * scale
        self.bases = combos[ok]
        self.Binv = np.linalg.inv(Bs[ok])
        self.rays = self._extreme_rays(A, scale)

    @staticmethod
    def _extreme_rays(A, scale):
        # extreme rays of {d >= 0, Ad = 0} normalized by sum(d) = 1 are the
        # basic feasible solutions of [A; 1'] d = [0; 1]
        m, n = A.shape
        if n == m:
            return np.zeros((0, n))
        G = np.vstack([A, np.ones((1, n))])
        rhs = np.zeros(m + 1)
        rhs[-1] = 1.0
        rays = []
        for cols in itertools.combinations(range(n), m + 1):
            cols = list(cols)
            Gs = G[:, cols]
            sv = np.linalg.svd(Gs, compute_uv=False)
            if sv[-1] <= 1e-10 * max(scale, 1.0):
                continue
            d = np.linalg.solve(Gs, rhs)
            if d.min() >= -ENUM_TOL:
                full = np.zeros(n)
                full[cols] = np.maximum(d, 0.0)
                rays.append(full)
        return np.array(rays).reshape(-1, n)

    def vertices(self, b: np.ndarray, tol: float = ENUM_TOL):
        xb = self.Binv @ b  # (K, m)
        slack = tol * (1.0 + np.abs(xb).max(axis=1))
        feas = (xb >= -slack[:, None]).all(axis=1)
        return self.bases[feas], np.maximum(xb[feas], 0.0)

    def optimal(self, b: np.ndarray, c: np.ndarray, tol: float = ENUM_TOL):
        """``(f*, optimal rows, bases, xb, objectives, cheapest ray cost)``."""
        bases, xb = self.vertices(b, tol)
        if bases.shape[0] == 0:
            return None
        obj = np.einsum("km,km->k", c[bases], xb)
        f = obj.min()
        opt = np.flatnonzero(obj <= f + tol * (1.0 + abs(f)))
        ray_min = float((self.rays @ c).min()) if self.rays.size else math.inf
        return f, opt, bases, xb, obj, ray_min

    def unique_basis(self, b, c, target: tuple, tol: float = 1e-13) -> bool:
        """True when ``target`` is the only optimal basis, nondegenerate, and no ray is free or improving.

        Near-ties within ``tol`` count as broken.
        """
        res = self.optimal(b, c, tol)
        if res is None:
            return False
        f, opt, bases, xb, obj, ray_min = res
        if ray_min <= tol * (1.0 + float(np.abs(c).max())):
            return False
        if opt.size != 1 or tuple(bases[opt[0]]) != target:
            return False
        return bool(xb[opt[0]].min() > tol * (1.0 + xb[opt[0]].max()))


def _enumerator(inst: LpInstance) -> _Enumerator:
    cache = inst.__dict__.setdefault("_oracle_cache", {})
    if "enum" not in cache:
        cache["enum"] = _Enumerator(np.asarray(inst.A))
    return cache["enum"]


def enumerate_optimal_basis(inst: LpInstance) -> EnumerationResult:
    """All optimal bases by exhaustive enumeration.

    The result carries a certificate exactly when there is a single optimal
    basis whose dual slack is nonnegative and strictly positive off the basis.
    """
    en = _enumerator(inst)
    res = en.optimal(inst.b, inst.c)
    if res is None:
        raise Infeasible("no basis yields a nonnegative basic solution")
    f, opt, bases, xb, obj, ray_min = res
    scale_c = 1.0 + float(np.abs(inst.c).max())
    if ray_min < -ENUM_TOL * scale_c:
        raise Unbounded("a feasible ray has negative cost")

    vertices = np.zeros((bases.shape[0], inst.n))
    for row, (cols, xv) in enumerate(zip(bases, xb)):
        vertices[row, cols] = xv

    optimal_bases, solutions = [], []
    dual_ok = []
    for idx in opt:
        cols = bases[idx]
        y = linalg.solve(inst.A[:, cols].T, inst.c[cols])
        s = inst.c - inst.A.T @ y
        s[cols] = 0.0
        optimal_bases.append(tuple(int(i) for i in cols))
        solutions.append((vertices[idx].copy(), y, s))
        dual_ok.append(bool(s.min() >= -ENUM_TOL * scale_c))
    if not any(dual_ok):
        raise Unbounded("no optimal-objective basis is dual feasible")

    result = EnumerationResult(
        objective=float(f),
        optimal_bases=optimal_bases,
        solutions=solutions,
        unique=False,
        nondegenerate=False,
        vertices=vertices,
        vertex_bases=[tuple(int(i) for i in row) for row in bases],
    )
    if len(optimal_bases) == 1 and dual_ok[0]:
        x, y, s = solutions[0]
        cols = list(optimal_bases[0])
        nonbasis = [j for j in range(inst.n) if j not in set(cols)]
        xtol = ENUM_TOL * (1.0 + np.abs(x).max())
        stol = ENUM_TOL * scale_c
        nondeg = bool(np.all(x[cols] > xtol) and np.all(s[nonbasis] > stol))
        result.nondegenerate = nondeg
        result.unique = nondeg and ray_min > stol
        if result.unique:
            result.certificate = OptimalCertificate(optimal_bases[0], x, y, s, True)
    return result


def certify(inst: LpInstance) -> OptimalCertificate:
    """Unique nondegenerate optimal certificate, or :class:`MultipleOptima`."""
    res = enumerate_optimal_basis(inst)
    if res.certificate is None:
        raise MultipleOptima(
            f"{len(res.optimal_bases)} optimal basis/bases; optimum not unique or degenerate", result=res
        )
    return res.certificate


def best_suboptimal_gap(inst: LpInstance, cert: OptimalCertificate | None = None) -> float:
    """Smallest positive objective error over feasible vertices (inf if there is none)."""
    res = enumerate_optimal_basis(inst)
    obj = res.vertices @ inst.c
    err = obj - res.objective
    tol = ENUM_TOL * (1.0 + abs(res.objective))
    pos = err[err > tol]
    return float(pos.min()) if pos.size else math.inf


# ---------------------------------------------------------------------------
# normalized duality gap
# ---------------------------------------------------------------------------


def _gram(A, steps: StepSizes, norm: str) -> np.ndarray:
    m, n = A.shape
    if norm == "M":
        return m_matrix(A, steps)
    return np.diag(np.concatenate([np.full(n, 1.0 / steps.tau), np.full(m, 1.0 / steps.sigma)]))


def rho_face_oracle(inst: LpInstance, x, y, r: float, steps: StepSizes, norm: str = "mtilde") -> float:
    """Exact normalized gap by enumerating which ``x + Delta_x >= 0`` bounds are active.

    For an active set ``S`` the coordinates ``Delta_S = -x_S`` are fixed and
    the remaining ones maximize a linear form over an ellipsoid, which has a
    closed-form solution.  The largest feasible candidate is the optimum.
    """
    n = inst.n
    if n > 16:
        raise TooLarge("face enumeration is limited to n <= 16")
    x = np.asarray(x, float)
    G = _gram(inst.A, steps, norm)
    d = np.concatenate([inst.A.T @ y - inst.c, inst.b - inst.A @ x])
    dim = d.size
    best = 0.0
    for size in range(n + 1):
        for S in itertools.combinations(range(n), size):
            S = list(S)
            F = [i for i in range(dim) if i not in set(S)]
            xs = x[S]
            if F:
                GFF = G[np.ix_(F, F)]
                GFS = G[np.ix_(F, S)]
                c0 = linalg.solve(GFF, GFS @ xs) if S else np.zeros(len(F))
                schur = G[np.ix_(S, S)] - GFS.T @ linalg.solve(GFF, GFS) if S else np.zeros((0, 0))
                R2 = r * r - (xs @ schur @ xs if S else 0.0)
                if R2 < 0:
                    continue
                dF = d[F]
                w = linalg.solve(GFF, dF)
                dn = math.sqrt(max(dF @ w, 0.0))
                delta_F = c0 + (math.sqrt(R2) * w / dn if dn > 0 else 0.0)
            else:
                if xs @ G @ xs > r * r:
                    continue
                delta_F = np.zeros(0)
            delta = np.zeros(dim)
            delta[S] = -xs
            delta[F] = delta_F
            if np.any(x + delta[:n] < -1e-12 * (1.0 + np.abs(x).max())):
                continue
            best = max(best, float(d @ delta))
    return best / r


def rho_grid_oracle(
    inst: LpInstance,
    x,
    y,
    r: float,
    steps: StepSizes,
    n_samples: int = 1_000_000,
    seed: int = 0,
    norm: str = "mtilde",
) -> float:
    """Normalized gap from ``n_samples`` feasible points of the ball plus the exact face candidates."""
    n, m = inst.n, inst.m
    if n + m > 8:
        raise TooLarge("sampling oracle is limited to n + m <= 8")
    x = np.asarray(x, float)
    G = _gram(inst.A, steps, norm)
    L = linalg.cholesky(G, lower=True)  # G = L L'
    d = np.concatenate([inst.A.T @ y - inst.c, inst.b - inst.A @ x])
    rng = np.random.default_rng(seed)
    best = 0.0
    chunk = 100_000
    done = 0
    while done < n_samples:
        k = min(chunk, n_samples - done)
        u = rng.standard_normal((k, n + m))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        # half on the sphere, half inside the ball
        radii = np.where(np.arange(k) % 2 == 0, 1.0, rng.random(k) ** (1.0 / (n + m)))
        # |Delta|_G = r  <=>  L' Delta = r u
        delta = linalg.solve_triangular(L.T, (r * radii[:, None] * u).T, lower=False).T
        # clipping toward the orthant bound can only shrink M-tilde norms; for
        # the M norm recheck membership after clipping
        delta[:, :n] = np.maximum(delta[:, :n], -x)
        if norm == "M":
            sizes = np.einsum("ki,ij,kj->k", delta, G, delta)
            delta = delta[sizes <= r * r * (1 + 1e-12)]
        if delta.size:
            best = max(best, float((delta @ d).max()))
        done += k
    exact = rho_face_oracle(inst, x, y, r, steps, norm)
    return max(best / r, exact)


# ---------------------------------------------------------------------------
# stability radii by perturbation search
# ---------------------------------------------------------------------------


@dataclass
class PerturbationSearch:
    value: float
    direction: np.ndarray
    edge_value: float
    random_value: float


def _edge_directions_for(inst: LpInstance, cert: OptimalCertificate, mode: str) -> list:
    bd = basis_data(inst, cert)
    dirs = []
    if mode == "cost":
        for j in range(bd.nonbasis.size):
            u = np.zeros(inst.n)
            u[bd.basis] = -bd.H[:, j]
            u[bd.nonbasis[j]] = 1.0
            dirs.append(-u / np.linalg.norm(u))
    else:
        for i in range(bd.basis.size):
            e = np.zeros(inst.m)
            e[i] = 1.0
            v = inst.A.T @ linalg.solve(bd.B.T, e)  # in Im(A')
            dirs.append(-v / np.linalg.norm(v))
    return dirs


def _random_directions(inst: LpInstance, mode: str, count: int, rng) -> list:
    if mode == "cost":
        u = rng.standard_normal((count, inst.n))
        return list(u / np.linalg.norm(u, axis=1, keepdims=True))
    w = rng.standard_normal((count, inst.m))
    q = w @ inst.A  # rows in Im(A')
    return list(q / np.linalg.norm(q, axis=1, keepdims=True))


def _break_magnitude(broken, t_start: float, tol: float = 1e-9, max_doublings: int = 80) -> float:
    """Smallest ``t`` with ``broken(t)`` along a ray, to ``tol`` absolute; inf if never."""
    if broken(0.0):
        return 0.0
    lo, hi = 0.0, t_start
    for _ in range(max_doublings):
        if broken(hi):
            break
        lo, hi = hi, hi * 2.0
    else:
        return math.inf
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if broken(mid):
            hi = mid
        else:
            lo = mid
    return hi


def zeta_perturbation_search(
    inst: LpInstance,
    cert: OptimalCertificate,
    n_dirs: int = 500,
    mode: str = "cost",
    seed: int = 0,
    include_edges: bool = True,
) -> PerturbationSearch:
    """Empirical (upper-bound) stability radius of the optimal basis.

    ``cost`` perturbs ``c`` in the Euclidean norm; ``rhs`` perturbs ``b`` by
    ``A dq`` with ``|dq|`` equal to the ``(AA')^{-1}`` norm of the change.
    Every probe re-runs the full enumeration.
    """
    if mode not in ("cost", "rhs"):
        raise ValueError("mode must be 'cost' or 'rhs'")
    en = _enumerator(inst)
    target = tuple(sorted(int(i) for i in cert.basis))
    rng = np.random.default_rng(seed)
    b, c = np.asarray(inst.b), np.asarray(inst.c)

    def search(direction):
        if mode == "cost":
            return _break_magnitude(lambda t: not en.unique_basis(b, c + t * direction, target), 1e-3)
        db = inst.A @ direction
        return _break_magnitude(lambda t: not en.unique_basis(b + t * db, c, target), 1e-3)

    edge_best, edge_dir = math.inf, None
    if include_edges:
        for direction in _edge_directions_for(inst, cert, mode):
            val = search(direction)
            if val < edge_best:
                edge_best, edge_dir = val, direction
    rand_best, rand_dir = math.inf, None
    for direction in _random_directions(inst, mode, n_dirs, rng):
        val = search(direction)
        if val < rand_best:
            rand_best, rand_dir = val, direction
    if edge_best <= rand_best:
        return PerturbationSearch(edge_best, edge_dir, edge_best, rand_best)
    return PerturbationSearch(rand_best, rand_dir, edge_best, rand_best)
