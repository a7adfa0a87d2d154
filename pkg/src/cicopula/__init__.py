"""Conditionally independent copula models, order statistics and reliability."""

from .copulas import FGM, BivariateCopula, Clayton, Independence, validate
from .marginals import Exponential, Marginal, Power, Uniform01
from .model import (
    CiModel,
    Component,
    conditional_cdf,
    joint_cdf,
    joint_copula,
    joint_copula_with_z,
    rectangle_probability,
    stress_strength,
    verify_ci,
)
from .montecarlo import check_margins, ks_check, sample
from .orderstats import OrderStatQuery, extreme_cdfs, k_joint_cdf, mrl, pair_cdf, single_cdf
from .permanent import permanent

__all__ = [
    "BivariateCopula", "Independence", "FGM", "Clayton", "validate",
    "Marginal", "Uniform01", "Power", "Exponential",
    "CiModel", "Component", "joint_copula", "joint_copula_with_z", "joint_cdf",
    "conditional_cdf", "rectangle_probability", "stress_strength", "verify_ci",
    "OrderStatQuery", "single_cdf", "pair_cdf", "k_joint_cdf", "extreme_cdfs", "mrl",
    "permanent", "sample", "ks_check", "check_margins",
]
