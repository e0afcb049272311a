"""Robust two-sample testing with mutual information from extended Bregman divergences."""

from __future__ import annotations

from .config import DeltaKind, Method, RunConfig
from .divergence import (
    GsbParams,
    HybridDensity,
    PhiGenerator,
    extended_bregman,
    gsb_divergence,
    mi_hybrid,
    phi_gsb,
    phi_itakura_saito,
)
from .errors import (
    BregmiError,
    DegenerateSample,
    DegenerateVariance,
    GridMismatch,
    LimitCase,
    OneGroupEmpty,
    ParseError,
    PolicyDomain,
    SchemaError,
)
from .kde import DensityGrid, kernel_constants
from .testing import (
    NullMoments,
    TestResult,
    TwoSampleData,
    estimate_mi,
    null_moments,
    permutation_p_value,
    run_test,
)

__version__ = "0.1.0"

__all__ = [
    "BregmiError",
    "DegenerateSample",
    "DegenerateVariance",
    "DeltaKind",
    "DensityGrid",
    "GridMismatch",
    "GsbParams",
    "HybridDensity",
    "LimitCase",
    "Method",
    "NullMoments",
    "OneGroupEmpty",
    "ParseError",
    "PhiGenerator",
    "PolicyDomain",
    "RunConfig",
    "SchemaError",
    "TestResult",
    "TwoSampleData",
    "estimate_mi",
    "extended_bregman",
    "gsb_divergence",
    "kernel_constants",
    "mi_hybrid",
    "null_moments",
    "permutation_p_value",
    "phi_gsb",
    "phi_itakura_saito",
    "run_test",
]
