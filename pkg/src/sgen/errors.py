"""Error type shared across the package.

Every failure mode carries a stable machine-readable code so callers (and the
CLI exit-code mapping) can dispatch without parsing messages.
"""

from __future__ import annotations


class SgenError(Exception):
    """Exception with a stable error code, e.g. ``SgenError("EMPTY_CLOUD", ...)``."""

    def __init__(self, code: str, message: str = ""):
        self.code = code
        super().__init__(f"{code}: {message}" if message else code)


# Codes that indicate bad user input (CLI exit code 2).
INPUT_ERROR_CODES = {
    "NON_ONEHOT_ROW",
    "LABEL_ON_ABSENT_PART",
    "ASYMMETRIC_E",
    "SELF_LOOP",
    "EDGE_ON_ABSENT_PART",
    "ROW_COUNT_MISMATCH",
    "DEGENERATE_CLOUD",
    "NO_EXISTING_PART",
    "IO_ERROR",
    "SCHEMA_VERSION_MISMATCH",
    "CORRUPT_RECORD",
    "INVALID_RANGE",
    "EMPTY_CLOUD",
    "SIZE_MISMATCH",
    "EMPTY_SET",
    "DATASET_INVALID",
    "CHECKPOINT_MISMATCH",
    "PREDICTOR_REQUIRED",
    "UNKNOWN_STRUCTURE",
}

# Codes for numeric failures (CLI exit code 3).
NUMERIC_ERROR_CODES = {
    "NONFINITE_STATE",
    "NONFINITE_LOSS",
    "NONDETERMINISTIC_LOSS",
    "GEOMETRY_INFEASIBLE",
    "MISSING_GRADIENT",
}

# Codes for quality gates (CLI exit code 4 under --strict).
GATE_ERROR_CODES = {"UNDERTRAINED_PREDICTOR"}
