"""Exact workbench for GHZ correlations, NS-box decompositions, Bell
expressions and the two GHZ-based key protocols."""
from .behavior import (
    Behavior,
    Mixture,
    MixtureTerm,
    correlator,
    is_non_signaling,
    make_behavior,
    marginal,
    mix,
    sample,
    tensor,
)
from .bell import BellReport, classify, local_lp, mermin_value, sigma_value
from .bisep import Bipartition, bisep_lp, enumerate_bipartitions, ghz_bisep_mixture, verify_ghz_bisep
from .boxes import BoxFamily, f_indicator, ghz_behavior, h_indicator, ns_box
from .root2 import Root2Scalar

__all__ = [
    "Behavior", "Mixture", "MixtureTerm", "correlator", "is_non_signaling", "make_behavior",
    "marginal", "mix", "sample", "tensor", "BellReport", "classify", "local_lp", "mermin_value",
    "sigma_value", "Bipartition", "bisep_lp", "enumerate_bipartitions", "ghz_bisep_mixture",
    "verify_ghz_bisep", "BoxFamily", "f_indicator", "ghz_behavior", "h_indicator", "ns_box",
    "Root2Scalar",
]
