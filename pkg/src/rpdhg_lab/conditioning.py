"""Closed-form condition numbers of an LP at a unique nondegenerate optimum.

Everything is computed from the optimal basis: with ``B`` the basic columns
and ``N`` the rest, the columns of ``H = B^{-1} N`` give the edge directions
of the primal sublevel sets and its rows those of the dual sublevel sets.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import linalg

from .errors import DegenerateCertificate, NonPositiveWeights, SingularBasis, ZeroObjectiveProjection
from .lp_core import LpInstance, OptimalCertificate, basis_matrix_check
from .spectral import extreme_singular_values, operator_norm

# constants carried over from the convergence proofs; valid for beta = 1/e
GLOBAL_CONST = 380.0
BASIS_LOG_CONST = 4560.0
BASIS_LOOP_CONST = 8.0 * (6.0 * math.sqrt(2.0) + 8.0)
LOCAL_CONST = 32.0


@dataclass(frozen=True)
class BasisData:
    """Basis-first view of an instance at its optimal basis."""

    basis: np.ndarray
    nonbasis: np.ndarray
    B: np.ndarray
    H: np.ndarray  # B^{-1} N, shape (m, n-m)
    x_basic: np.ndarray
    s_nonbasic: np.ndarray

    @property
    def col_norms(self) -> np.ndarray:
        """``sqrt(|H[:, j]|^2 + 1)``, the lengths of the primal edge directions."""
        return np.sqrt((self.H**2).sum(axis=0) + 1.0)

    @property
    def row_norms(self) -> np.ndarray:
        """``sqrt(|H[i, :]|^2 + 1)``, the lengths of the dual edge directions."""
        return np.sqrt((self.H**2).sum(axis=1) + 1.0)


def basis_data(inst: LpInstance, cert: OptimalCertificate, require_nondegenerate: bool = True) -> BasisData:
    basis = np.asarray(cert.basis, dtype=int)
    nonbasis = np.asarray(cert.nonbasis, dtype=int)
    B = basis_matrix_check(inst, basis)
    try:
        lu = linalg.lu_factor(B)
    except (linalg.LinAlgError, ValueError) as exc:
        raise SingularBasis(str(exc)) from exc
    H = linalg.lu_solve(lu, inst.A[:, nonbasis]) if nonbasis.size else np.zeros((inst.m, 0))
    xb = cert.x[basis]
    sn = cert.s[nonbasis]
    if require_nondegenerate and (np.any(xb <= 0) or np.any(sn <= 0)):
        raise DegenerateCertificate("certificate has a zero basic x* or zero nonbasic s*")
    return BasisData(basis, nonbasis, B, H, xb, sn)


def xi(cert: OptimalCertificate) -> float:
    """Smallest entry of ``x* + s*`` (positive exactly when nondegenerate)."""
    val = float((cert.x + cert.s).min())
    if not val > 0.0 or not cert.nondegenerate:
        raise DegenerateCertificate("x* + s* has a zero entry")
    return val


def _l1_total(cert: OptimalCertificate) -> float:
    return float(np.abs(cert.x).sum() + np.abs(cert.s).sum())


def _phi_factor(bd: BasisData) -> float:
    primal = (bd.col_norms / bd.s_nonbasic).max(initial=0.0)
    dual = (bd.row_norms / bd.x_basic).max(initial=0.0)
    return float(max(primal, dual))


def phi(inst: LpInstance, cert: OptimalCertificate) -> float:
    """``(|x*|_1 + |s*|_1)`` times the largest edge length over the matching optimal entry."""
    return _l1_total(cert) * _phi_factor(basis_data(inst, cert))


def phi_upper_bound(inst: LpInstance, cert: OptimalCertificate) -> float:
    """``(|x* + s*|_1 / xi) |B^{-1} A|_2``, an upper bound on ``phi``."""
    bd = basis_data(inst, cert)
    binv_a = linalg.solve(bd.B, inst.A)
    return float(np.abs(cert.x + cert.s).sum() / xi(cert) * operator_norm(binv_a))


@dataclass(frozen=True)
class StabilityMeasures:
    zeta_p: float
    zeta_d: float
    mu_p: float | None
    mu_d: float | None
    eta_p: float
    eta_d: float


def stability_measures(inst: LpInstance, cert: OptimalCertificate, strict: bool = False) -> StabilityMeasures:
    """Distances to ill-posedness of the optimal basis and the LP sharpness.

    ``zeta_p`` is the smallest cost perturbation and ``zeta_d`` the smallest
    right-hand-side perturbation (in the ``(AA')^{-1}`` norm) that destroy the
    unique optimal basis.  Sharpness normalizes them by ``|c_bar|`` and ``|q|``.
    With ``strict`` a zero ``c_bar`` or ``q`` raises instead of giving ``None``.
    """
    bd = basis_data(inst, cert)
    zeta_p = float((bd.s_nonbasic / bd.col_norms).min(initial=np.inf))
    zeta_d = float((bd.x_basic / bd.row_norms).min(initial=np.inf))
    sym = inst.symmetric
    mu_p = mu_d = None
    if sym.norm_c_bar > 0:
        mu_p = zeta_p / sym.norm_c_bar
    elif strict:
        raise ZeroObjectiveProjection("c has no component in Null(A); primal sharpness undefined")
    if sym.norm_q > 0:
        mu_d = zeta_d / sym.norm_q
    elif strict:
        raise ZeroObjectiveProjection("b = 0; dual sharpness undefined")
    return StabilityMeasures(zeta_p, zeta_d, mu_p, mu_d, zeta_p, zeta_d)


def edge_directions(inst: LpInstance, cert: OptimalCertificate, order: str = "basis") -> np.ndarray:
    """Edge directions of the feasible set at ``x*``, one per row.

    ``u^j`` has ``-B^{-1}N[:, j]`` on the basis and a one at the entering
    column.  ``order="basis"`` lays coordinates out basis first (as in the
    permuted instance); ``order="original"`` uses the instance's own indexing.
    """
    bd = basis_data(inst, cert, require_nondegenerate=False)
    m, k = bd.H.shape
    U = np.zeros((k, m + k))
    U[:, :m] = -bd.H.T
    U[:, m:] = np.eye(k)
    if order == "basis":
        return U
    perm = np.concatenate([bd.basis, bd.nonbasis])
    out = np.zeros_like(U)
    out[:, perm] = U
    return out


def dual_edge_directions(inst: LpInstance, cert: OptimalCertificate) -> np.ndarray:
    """Edge directions of the dual slack set at ``s*``, original indexing, one per row.

    ``v^i = A' B^{-T} e_i``: one at basic column ``i``, ``H[i, :]`` on the
    nonbasis and zero elsewhere, so it stays in ``Im(A')``.
    """
    bd = basis_data(inst, cert, require_nondegenerate=False)
    V = np.zeros((bd.basis.size, inst.n))
    for i, col in enumerate(bd.basis):
        V[i, col] = 1.0
        V[i, bd.nonbasis] = bd.H[i, :]
    return V


@dataclass
class SublevelGeometry:
    delta: float
    D_hat: float
    r: float
    ratio: float
    x_points: np.ndarray
    s_points: np.ndarray
    r_primal: float
    D_primal_bracket: tuple[float, float]


def sublevel_geometry(inst: LpInstance, cert: OptimalCertificate, delta: float) -> SublevelGeometry:
    """Closed-form size of the duality-gap sublevel set for small ``delta``.

    ``x_points`` are ``x* + (delta / s*_j) u^j``: the primal extreme points of
    the sublevel set, each with objective error exactly ``delta``.
    ``s_points`` are the dual counterparts.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    bd = basis_data(inst, cert)
    U = edge_directions(inst, cert, order="original")
    x_points = cert.x[None, :] + (delta / bd.s_nonbasic)[:, None] * U
    V = dual_edge_directions(inst, cert)
    s_points = cert.s[None, :] + (delta / bd.x_basic)[:, None] * V
    D_hat = delta * _phi_factor(bd)
    r = delta / _l1_total(cert)
    primal_far = delta * float((bd.col_norms / bd.s_nonbasic).max(initial=0.0))
    return SublevelGeometry(
        delta=delta,
        D_hat=D_hat,
        r=r,
        ratio=D_hat / r,
        x_points=x_points,
        s_points=s_points,
        r_primal=delta / float(np.abs(cert.s).sum()) if np.any(cert.s) else math.inf,
        D_primal_bracket=(primal_far, 2.0 * primal_far),
    )


def nullspace_basis_check(inst: LpInstance, cert: OptimalCertificate) -> float:
    """Residual of ``Q_N^{-1} Q_B = -(B^{-1}N)'`` for ``Q`` spanning ``Null(A)'``.

    The rows of ``Q`` form an orthonormal basis of ``Null(A)``, so
    ``Null(Q) = Im(A')``.  Any such ``Q`` satisfies the identity.
    """
    bd = basis_data(inst, cert, require_nondegenerate=False)
    if bd.nonbasis.size == 0:
        return 0.0
    Q = linalg.null_space(inst.A).T
    QN = Q[:, bd.nonbasis]
    QB = Q[:, bd.basis]
    try:
        lhs = linalg.solve(QN, QB)
    except linalg.LinAlgError as exc:
        raise SingularBasis("Q restricted to the nonbasis is singular") from exc
    return float(np.abs(lhs + bd.H.T).max())


# ---------------------------------------------------------------------------
# reweighting
# ---------------------------------------------------------------------------


def phi_reweighted(inst: LpInstance, cert: OptimalCertificate, omega1: float, omega2: float) -> float:
    """``phi`` of the LP with cost ``omega1 c`` and right-hand side ``omega2 b``.

    That problem has optimum ``(omega2 x*, omega1 s*)``, so its measures are
    ``omega1 zeta_p`` and ``omega2 zeta_d``.
    """
    if not (omega1 > 0 and omega2 > 0):
        raise NonPositiveWeights(f"weights must be positive, got ({omega1}, {omega2})")
    st = stability_measures(inst, cert)
    xl1 = float(np.abs(cert.x).sum())
    sl1 = float(np.abs(cert.s).sum())
    return (omega2 * xl1 + omega1 * sl1) * max(1.0 / (omega1 * st.zeta_p), 1.0 / (omega2 * st.zeta_d))


@dataclass(frozen=True)
class Reweighting:
    omega_ratio: float  # omega1 / omega2 = |x*|_1 / |s*|_1
    phi_opt: float  # phi of the reweighted LP at that ratio
    phi_min: float  # exact minimum over all ratios
    ratio_min: float  # ratio attaining phi_min (zeta_d / zeta_p)


def optimal_reweight(inst: LpInstance, cert: OptimalCertificate) -> Reweighting:
    """Weight ratio ``|x*|_1 / |s*|_1``; within a factor 2 of the best ratio.

    At that ratio the reweighted value is ``2 max(|s*|_1/zeta_p, |x*|_1/zeta_d)``.
    """
    st = stability_measures(inst, cert)
    xl1 = float(np.abs(cert.x).sum())
    sl1 = float(np.abs(cert.s).sum())
    if sl1 == 0.0:
        # no nonbasic columns: the cost weight does not enter, every ratio is optimal
        val = xl1 / st.zeta_d
        return Reweighting(omega_ratio=1.0, phi_opt=val, phi_min=val, ratio_min=1.0)
    return Reweighting(
        omega_ratio=xl1 / sl1,
        phi_opt=2.0 * max(sl1 / st.zeta_p, xl1 / st.zeta_d),
        phi_min=xl1 / st.zeta_d + sl1 / st.zeta_p,
        ratio_min=st.zeta_d / st.zeta_p,
    )


def reweight_instance(inst: LpInstance, cert: OptimalCertificate, omega1: float, omega2: float):
    """The LP ``min (omega1 c)'x, Ax = omega2 b`` together with its certificate."""
    if not (omega1 > 0 and omega2 > 0):
        raise NonPositiveWeights(f"weights must be positive, got ({omega1}, {omega2})")
    scaled = inst.with_data(b=omega2 * inst.b, c=omega1 * inst.c)
    scaled_cert = OptimalCertificate(cert.basis, omega2 * cert.x, omega1 * cert.y, omega1 * cert.s, cert.unique)
    return scaled, scaled_cert


# ---------------------------------------------------------------------------
# iteration bounds
# ---------------------------------------------------------------------------


def _ln1(val: float) -> float:
    return math.log(max(val, 1.0))


def global_bound(kappa: float, phi_hat: float, w_norm: float, eps: float) -> float:
    L = GLOBAL_CONST * kappa * phi_hat
    return L * (_ln1(L) + _ln1(w_norm / eps))


def basis_bound(kappa: float, phi_hat: float, w_norm: float, xi_val: float, beta: float) -> float:
    L = GLOBAL_CONST * kappa * phi_hat
    return L * _ln1(BASIS_LOG_CONST * kappa**2 * phi_hat * w_norm / xi_val) + math.ceil(
        BASIS_LOOP_CONST * kappa * phi_hat / beta
    )


def local_bound(binv_a: float, xi_val: float, eps: float, beta: float) -> float:
    """Stage-II bound: inner loops of at most ``ceil(32 |B^-1||A| / beta)`` steps, ``ln(xi/eps)`` of them."""
    per_loop = math.ceil(LOCAL_CONST * binv_a / beta)
    return max(1.0, per_loop * max(0.0, math.log(xi_val / eps)))


@dataclass
class BoundReport:
    global_T: dict
    T_basis: dict
    T_local: float
    zeta_form_T: dict
    reweighted_T: dict
    inputs: dict


def iteration_bounds(
    inst: LpInstance,
    cert: OptimalCertificate,
    epsilon: float,
    beta: float = 1.0 / math.e,
    *,
    kappa: float | None = None,
    phi_val: float | None = None,
) -> BoundReport:
    """Explicit iteration bounds with the proof constants.

    Each bound that depends on the (uncomputed) limiting sublevel ratio is
    evaluated at both ends of its bracket ``[phi, 2 phi]``.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if kappa is None:
        kappa = extreme_singular_values(inst.A).kappa
    bd = basis_data(inst, cert)
    if phi_val is None:
        phi_val = _l1_total(cert) * _phi_factor(bd)
    st = stability_measures(inst, cert)
    xi_val = xi(cert)
    w_norm = cert.w_norm
    binv_a = operator_norm(linalg.inv(bd.B)) * operator_norm(inst.A)
    zeta_phi = _l1_total(cert) / min(st.zeta_p, st.zeta_d)
    rw = optimal_reweight(inst, cert)
    omega1, omega2 = rw.omega_ratio, 1.0
    spread = max(omega1, omega2) / min(omega1, omega2)
    brackets = {"phi": phi_val, "2phi": 2.0 * phi_val}
    return BoundReport(
        global_T={k: global_bound(kappa, v, w_norm, epsilon) for k, v in brackets.items()},
        T_basis={k: basis_bound(kappa, v, w_norm, xi_val, beta) for k, v in brackets.items()},
        T_local=local_bound(binv_a, xi_val, epsilon, beta),
        zeta_form_T={
            "phi": global_bound(kappa, zeta_phi, w_norm, epsilon),
            "2phi": global_bound(kappa, 2.0 * zeta_phi, w_norm, epsilon),
        },
        reweighted_T={
            "phi": global_bound(kappa, rw.phi_opt, spread * w_norm, epsilon),
            "2phi": global_bound(kappa, 2.0 * rw.phi_opt, spread * w_norm, epsilon),
        },
        inputs={
            "kappa": kappa,
            "phi": phi_val,
            "w_norm": w_norm,
            "xi": xi_val,
            "epsilon": epsilon,
            "binv_a_norm": binv_a,
            "beta": beta,
        },
    )


# ---------------------------------------------------------------------------
# full report
# ---------------------------------------------------------------------------


@dataclass
class ConditionReport:
    phi: float
    phi_upper: float
    phi_hat_bracket: tuple[float, float]
    kappa: float
    xi: float
    zeta_p: float
    zeta_d: float
    mu_p: float | None
    mu_d: float | None
    eta_p: float
    eta_d: float
    norm_Binv: float
    norm_A: float
    norm_BinvA: float
    w_norm: float
    sublevel: dict
    bounds: BoundReport
    reweight: dict
    notes: list = field(default_factory=list)

    @property
    def kphi_ln(self) -> float:
        kp = self.kappa * self.phi
        return kp * math.log(kp)

    @property
    def binv_a_norm(self) -> float:
        return self.norm_Binv * self.norm_A

    def to_dict(self) -> dict:
        out = asdict(self)
        out["kphi_ln"] = self.kphi_ln
        out["binv_a_norm"] = self.binv_a_norm
        return out


def condition_report(
    inst: LpInstance,
    cert: OptimalCertificate,
    epsilon: float = 1e-6,
    beta: float = 1.0 / math.e,
    delta: float = 1e-3,
) -> ConditionReport:
    spec = extreme_singular_values(inst.A)
    bd = basis_data(inst, cert)
    phi_val = _l1_total(cert) * _phi_factor(bd)
    st = stability_measures(inst, cert)
    geo = sublevel_geometry(inst, cert, delta)
    rw = optimal_reweight(inst, cert)
    norm_binv = operator_norm(linalg.inv(bd.B))
    notes = []
    if st.mu_p is None:
        notes.append("c has no component in Null(A): mu_p undefined")
    if st.mu_d is None:
        notes.append("b = 0: mu_d undefined")
    return ConditionReport(
        phi=phi_val,
        phi_upper=phi_upper_bound(inst, cert),
        phi_hat_bracket=(phi_val, 2.0 * phi_val),
        kappa=spec.kappa,
        xi=xi(cert),
        zeta_p=st.zeta_p,
        zeta_d=st.zeta_d,
        mu_p=st.mu_p,
        mu_d=st.mu_d,
        eta_p=st.eta_p,
        eta_d=st.eta_d,
        norm_Binv=norm_binv,
        norm_A=spec.lambda_max,
        norm_BinvA=operator_norm(linalg.solve(bd.B, inst.A)),
        w_norm=cert.w_norm,
        sublevel={"delta": delta, "D_hat": geo.D_hat, "r": geo.r, "ratio": geo.ratio},
        bounds=iteration_bounds(inst, cert, epsilon, beta, kappa=spec.kappa, phi_val=phi_val),
        reweight={
            "omega_ratio": rw.omega_ratio,
            "phi_opt": rw.phi_opt,
            "phi_min": rw.phi_min,
            "ratio_min": rw.ratio_min,
        },
        notes=notes,
    )
