"""Hilbert transform, maximal operators and Orlicz machinery for step functions."""

from .hilbert import H_CONVENTION, HilbertEvaluator, SampledTransform, hilbert_many, hilbert_step
from .maximal import MaximalEngine, average, maximal, maximal_at, maximal_many
from .orlicz import (SupResult, alpha_of_r, growth_factor, growth_factor_detail, lemma22_exponent,
                     luxemburg_norm, mphi_mr_bound, mphi_mr_bound_constant, orlicz_maximal,
                     orlicz_maximal_at, r_k)
from .superlevel import SuperlevelProfile, sample_transform, superlevel_profile, superlevel_weight
from .young import YoungFunction

__all__ = [
    "H_CONVENTION", "HilbertEvaluator", "MaximalEngine", "SampledTransform", "SupResult",
    "SuperlevelProfile", "YoungFunction", "alpha_of_r", "average", "growth_factor",
    "growth_factor_detail", "hilbert_many", "hilbert_step", "lemma22_exponent", "luxemburg_norm",
    "maximal", "maximal_at", "maximal_many", "mphi_mr_bound", "mphi_mr_bound_constant",
    "orlicz_maximal", "orlicz_maximal_at", "r_k", "sample_transform", "superlevel_profile", "superlevel_weight",
]
