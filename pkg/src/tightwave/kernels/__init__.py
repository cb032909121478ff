"""Displacement kernels: step-law families and the cover-time kernel."""
from .bessel import bessel_i, bessel_i_scaled
from .cover import (cover_density, cover_shift_for, cover_tail, cover_tail_matrix,
                    log_cover_density, normal_half_tail, upper_integrals)
from .families import (FAMILIES, CoverTime, Exponential, Gaussian, Pareto, Table,
                       TranslationInvariant, TwoPoint, Uniform, shift_for_centering, tail)

__all__ = [
    "bessel_i", "bessel_i_scaled", "cover_density", "cover_shift_for", "cover_tail",
    "cover_tail_matrix", "log_cover_density", "normal_half_tail", "upper_integrals",
    "FAMILIES", "CoverTime", "Exponential", "Gaussian", "Pareto", "Table",
    "TranslationInvariant", "TwoPoint", "Uniform", "shift_for_centering", "tail",
]
