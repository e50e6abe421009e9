"""Isoperimetric profiles of model manifolds and viscosity-supersolution checks."""

from .constants import alpha, alpha_prime, comparison_constants, gamma_n, lambda0, lambda_kappa
from .numerics import QuadratureSpec, RootSpec, fd_derivatives, find_root, integrate, minimize_1d
from .report import VerificationFailure, VerificationReport
from .spaceform import ClosedFormProfile, DomainError, SampledProfile, SpaceForm, asymptotic_constant
from .viscosity import (BBG, FirstOrderPositive, FirstOrderZero, LevyGromov, RatioMonotone, SecondOrder,
                        TwoSided, check_supersolution, comparison_check, subjet_at)
from .warped import (WarpedMetric, ball_comparison_check, ball_profile, candidate_profile, hk_volume_bound,
                     normalized, perturbed_sphere, ricci_lower_bound, round_sphere)

__version__ = "0.1.0"
