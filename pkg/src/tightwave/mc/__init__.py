"""Seeded Monte Carlo simulators used as independent oracles."""
from .beta import MAX_BETA_DEPTH, gamma_poisson_sample, simulate_beta_chain
from .brw import simulate_brw_max
from .compare import binomial_halfwidth, dkw_band, ks_two_sample, ks_vs_cdf, ks_vs_curve
from .core import McConfig, OffspringLaw, SampleSummary, substream
from .walks import (KAryTree, Torus2D, check_sandwich, return_time_moments,
                    simulate_cover_time, simulate_return_epochs, simulate_torus_cover)

__all__ = [
    "MAX_BETA_DEPTH", "gamma_poisson_sample", "simulate_beta_chain", "simulate_brw_max",
    "binomial_halfwidth", "dkw_band", "ks_two_sample", "ks_vs_cdf", "ks_vs_curve",
    "McConfig", "OffspringLaw", "SampleSummary", "substream", "KAryTree", "Torus2D",
    "check_sandwich", "return_time_moments", "simulate_cover_time",
    "simulate_return_epochs", "simulate_torus_cover",
]
