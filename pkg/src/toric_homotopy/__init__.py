"""Certified homotopy continuation for systems of exponential sums."""

from .errors import ToricError
from .expsum import ExpSumSystem, SupportTuple
from .newton import ALPHA_STAR, CONSTANTS, Certificate, certify, mu, mu_renormalized, newton_step, refine
from .oracle import McReport, OracleRootSet, mc_exclusion, mc_moment_frobenius, mc_moment_mu, oracle_roots
from .polytope import InvariantReport, invariant_report, mixed_area, mixed_volume
from .solver import CertifiedSolutionSet, SolveConfig, cheater_solve, one_root_solve, sample_gaussian, solve
from .tracker import LinearPath, PathTrace, TrackerConfig, track

__all__ = [
    "ALPHA_STAR", "CONSTANTS", "Certificate", "CertifiedSolutionSet", "ExpSumSystem", "InvariantReport",
    "LinearPath", "McReport", "OracleRootSet", "PathTrace", "SolveConfig", "SupportTuple", "ToricError",
    "TrackerConfig", "certify", "cheater_solve", "invariant_report", "mc_exclusion", "mc_moment_frobenius",
    "mc_moment_mu", "mixed_area", "mixed_volume", "mu", "mu_renormalized", "newton_step", "one_root_solve",
    "oracle_roots", "refine", "sample_gaussian", "solve", "track",
]
