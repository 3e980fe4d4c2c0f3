"""Various constants used throughout the library."""

from __future__ import annotations

import math
from typing import Literal
from typing_extensions import TypeAlias

import joblib
from packaging import version

CsiKind: TypeAlias = Literal["outdated", "perfect"]
CsiKindValues: tuple[CsiKind, ...] = ("outdated", "perfect")

Side: TypeAlias = Literal["bob", "eve"]
SelectionMode: TypeAlias = Literal["ess", "random", "all"]
SopMethod: TypeAlias = Literal["exact", "lower_bound", "series"]
MomentRoute: TypeAlias = Literal["auto", "full_array", "order_statistics"]
OutputFormat: TypeAlias = Literal["csv", "json"]

ExperimentKind: TypeAlias = Literal[
    "sop-point",
    "sweep-k",
    "sweep-n",
    "optimal-k",
    "validate-dist",
]
ExperimentKindValues: tuple[ExperimentKind, ...] = (
    "sop-point",
    "sweep-k",
    "sweep-n",
    "optimal-k",
    "validate-dist",
)

Probability: TypeAlias = float

# Monte-Carlo trials per RNG block. Changing it changes every seeded result.
BLOCK_SIZE = 2048
MAXINT_RANDOM_SEED = int(2**63 - 1)

# Integration window of the SOP integral in units of Eve's mean SNR.
SOP_QUAD_UPPER = 50.0
SOP_QUAD_EPSABS = 1e-10
SOP_QUAD_LIMIT = 200

SERIES_DEFAULT_TOL = 1e-8
SERIES_DEFAULT_P_MAX = 200
SERIES_VALIDITY_TOL = 1e-5

# First zero of J0 divided by 2*pi; beyond it the Jakes coefficient turns negative.
FIRST_J0_ZERO_FD_TD = 2.404825557695773 / (2 * math.pi)

EMPIRICAL_CDF_POINTS = 100
CSV_FLOAT_FORMAT = "%.12g"

# scikit-learn used to pin joblib for us, now we need to check ourselves.
SUPPORTS_RETURN_AS = version.parse(joblib.__version__) >= version.parse(
    "1.3.0",
)
SUPPORTS_GENERATOR_UNORDERED = version.parse(joblib.__version__) >= version.parse(
    "1.4.0",
)
if SUPPORTS_GENERATOR_UNORDERED:
    PARALLEL_MODE_TO_RETURN_AS = {
        "block": "list",
        "in-order": "generator",
        "as-ready": "generator_unordered",
    }
else:
    PARALLEL_MODE_TO_RETURN_AS = {
        "block": "list",
        "in-order": "generator",
        "as-ready": "generator",
    }
