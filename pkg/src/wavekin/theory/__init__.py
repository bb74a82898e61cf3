"""Numerical instances of the set constructions and barrier arguments behind
finite-time condensation: subdomain decompositions, spread-time sets, growth
sets, the transport kernel mu and its supersolution."""

from .decomposition import (DecompositionSpec, in_E, inclusion_check, index_level_check, mid3, sort3,
                            subdomain_count)
from .growth import GrowthParams, condensation_bound_report, growth_set_measures
from .supersolution import build_mu, build_supersolution, verify_supersolution
from .timesets import accumulate_time_measures, digamma2_member, digamma_star_member

__all__ = [
    "DecompositionSpec", "GrowthParams", "accumulate_time_measures", "build_mu", "build_supersolution",
    "condensation_bound_report", "digamma2_member", "digamma_star_member", "growth_set_measures",
    "in_E", "inclusion_check", "index_level_check", "mid3", "sort3", "subdomain_count",
    "verify_supersolution",
]
