"""Multiple-direction weighted logrank tests for two-sample censored data."""

__version__ = "0.1.0"

from .errors import MdirError, NoEvents  # noqa: E402
from .logrank import StatResult, TestOutcome, chi2_test, compute_sigma, compute_sn, compute_t_vec  # noqa: E402
from .permute import PermConfig, PermResult, exhaustive_permutation_test, permutation_test  # noqa: E402
from .survcore import RiskTable, TwoSampleData, build_risk_table, ingest, nelson_aalen_increments  # noqa: E402
from .weights import (  # noqa: E402
    WeightFn,
    WeightSet,
    check_independence,
    make_crossing,
    make_menu,
    make_rg,
    select_independent_subset,
)

__all__ = [
    "MdirError", "NoEvents", "StatResult", "TestOutcome", "chi2_test", "compute_sigma", "compute_sn",
    "compute_t_vec", "PermConfig", "PermResult", "exhaustive_permutation_test", "permutation_test",
    "RiskTable", "TwoSampleData", "build_risk_table", "ingest", "nelson_aalen_increments", "WeightFn",
    "WeightSet", "check_independence", "make_crossing", "make_menu", "make_rg", "select_independent_subset",
]
