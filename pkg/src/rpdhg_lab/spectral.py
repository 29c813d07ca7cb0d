"""Extreme singular values, operator norms and the M / M-tilde norms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import ConvergenceFailure, InvalidStepSizes


@dataclass(frozen=True)
class SpectralData:
    lambda_max: float
    lambda_min: float

    @property
    def kappa(self) -> float:
        return self.lambda_max / self.lambda_min


@dataclass(frozen=True)
class StepSizes:
    tau: float
    sigma: float

    def check(self, norm_A: float) -> None:
        if not (self.tau > 0 and self.sigma > 0):
            raise InvalidStepSizes(f"step sizes must be positive, got tau={self.tau}, sigma={self.sigma}")
        # a hair of slack so that the default choice tau*sigma*|A|^2 = 1 is accepted
        if self.tau * self.sigma * norm_A**2 > 1.0 + 1e-12:
            raise InvalidStepSizes(
                f"tau*sigma*|A|^2 = {self.tau * self.sigma * norm_A**2:.6g} exceeds 1"
            )


def extreme_singular_values(A: np.ndarray) -> SpectralData:
    """Largest and smallest nonzero singular value of a full-row-rank ``A``.

    Uses the symmetric eigenproblem of the m-by-m matrix ``A A'``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    try:
        ev = linalg.eigvalsh(A @ A.T)
    except linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"eigensolver failed: {exc}") from exc
    if ev[0] <= 0.0:
        raise ConvergenceFailure("A A' has a nonpositive eigenvalue; A is not full row rank")
    return SpectralData(float(np.sqrt(ev[-1])), float(np.sqrt(ev[0])))


def operator_norm(mat: np.ndarray) -> float:
    """Spectral norm (largest singular value)."""
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    if mat.size == 0:
        return 0.0
    try:
        return float(linalg.svdvals(mat)[0])
    except linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"SVD failed: {exc}") from exc


def mtilde_norm(x, y, steps: StepSizes) -> float:
    return float(np.sqrt(x @ x / steps.tau + y @ y / steps.sigma))


def m_norm(x, y, steps: StepSizes, A: np.ndarray) -> float:
    """``sqrt(z' M z)`` with ``M = [[I/tau, A'], [A, I/sigma]]``.

    The off-diagonal sign matches the update order ``x`` first, then ``y``
    with the extrapolated ``2x' - x``; in this metric the step is nonexpansive.
    """
    val = x @ x / steps.tau + y @ y / steps.sigma + 2.0 * (y @ (A @ x))
    return float(np.sqrt(max(val, 0.0)))


def weighted_norms(x, y, steps: StepSizes, A: np.ndarray) -> tuple[float, float]:
    """Return ``(m_norm, mtilde_norm)`` of ``z = (x, y)``."""
    steps.check(operator_norm(A))
    return m_norm(x, y, steps, A), mtilde_norm(x, y, steps)


def m_matrix(A: np.ndarray, steps: StepSizes) -> np.ndarray:
    """Dense ``M``; only for small problems and tests."""
    m, n = A.shape
    return np.block(
        [
            [np.eye(n) / steps.tau, A.T],
            [A, np.eye(m) / steps.sigma],
        ]
    )
