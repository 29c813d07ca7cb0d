"""Restarted PDHG for standard-form LPs and the condition measures that govern it."""

from .conditioning import ConditionReport, condition_report, optimal_reweight, phi, phi_reweighted
from .generators import ToddSpec, family_certificate, generate_family, generate_todd
from .lp_core import LpInstance, OptimalCertificate, relative_error, validate_instance
from .solver import SolverConfig, run_rpdhg

__all__ = [
    "ConditionReport", "LpInstance", "OptimalCertificate", "SolverConfig", "ToddSpec",
    "condition_report", "family_certificate", "generate_family", "generate_todd",
    "optimal_reweight", "phi", "phi_reweighted", "relative_error", "run_rpdhg", "validate_instance",
]
