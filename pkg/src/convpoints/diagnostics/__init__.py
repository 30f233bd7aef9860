"""Numerical checks of the probabilistic ingredients of the construction."""

from .brownian import brownian_small_ball, small_ball_images, small_ball_mc, small_ball_series
from .common import DiagnosticReport, MCEstimate
from .gci import Box, Ellipsoid, GCIResult, Slab, gci_check_mc
from .lindeberg import Polynomial, SmoothIndicator, lindeberg_discrepancy
from .probability import (event_E1_frequency, event_E2_frequency, one_point_probability_mc,
                          stay_small_probability_mc, stay_small_sweep)
from .sieve import (CorrelationReport, SieveInstance, SieveResult, large_sieve_check,
                    rho_correlation_count)

__all__ = [
    "Box", "CorrelationReport", "DiagnosticReport", "Ellipsoid", "GCIResult", "MCEstimate",
    "Polynomial", "SieveInstance", "SieveResult", "Slab", "SmoothIndicator",
    "brownian_small_ball", "event_E1_frequency", "event_E2_frequency", "gci_check_mc",
    "large_sieve_check", "lindeberg_discrepancy", "one_point_probability_mc",
    "rho_correlation_count", "small_ball_images", "small_ball_mc", "small_ball_series",
    "stay_small_probability_mc", "stay_small_sweep",
]
