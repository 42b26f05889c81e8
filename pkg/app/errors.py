"""Error hierarchy shared by every subsystem.

Each error carries a stable ``code`` so the CLI, the service and the
pipeline report can classify failures without string matching.
"""


class PodSynthError(Exception):
    """Base class for all pipeline errors."""
    code = "podsynth-error"


# secretsharing

class InvalidThresholdError(PodSynthError):
    code = "invalid-threshold"


class InsufficientSharesError(PodSynthError):
    code = "insufficient-shares"


class DuplicatePointError(PodSynthError):
    code = "duplicate-point"


class MixedThresholdError(PodSynthError):
    code = "mixed-threshold"


class ShapeMismatchError(PodSynthError):
    code = "shape-mismatch"


class PointMismatchError(PodSynthError):
    code = "point-mismatch"


class OverflowSuspectedError(PodSynthError):
    code = "overflow-suspected"


# datamodel

class HeaderMismatchError(PodSynthError):
    code = "header-mismatch"


class UnknownCategoryError(PodSynthError):
    code = "unknown-category"


class UnparseableNumericError(PodSynthError):
    code = "unparseable-numeric"


# dpcore

class NonPositiveEpsilonError(PodSynthError):
    code = "nonpositive-epsilon"


class NonPositiveSensitivityError(PodSynthError):
    code = "nonpositive-sensitivity"


class EmptyScoresError(PodSynthError):
    code = "empty-scores"


class BudgetExceededError(PodSynthError):
    code = "budget-exceeded"


# synthgen

class DomainMismatchError(PodSynthError):
    code = "domain-mismatch"


class DomainTooLargeError(PodSynthError):
    code = "domain-too-large"


class EmptyWorkloadError(PodSynthError):
    code = "empty-workload"


# agents

class NoComputationAgentsTrustedError(PodSynthError):
    code = "no-computation-agents-trusted-by-all"


class AccessDeniedError(PodSynthError):
    code = "access-denied"


class MissingContributionError(PodSynthError):
    code = "missing-contribution"


class AttestationFailedError(PodSynthError):
    code = "attestation-failed"


class NoDataError(PodSynthError):
    code = "no-data"


# netsim

class UnknownEndpointError(PodSynthError):
    code = "unknown-endpoint"


class InflightFramesError(PodSynthError):
    code = "snapshot-with-inflight-frames"


class ProtocolError(PodSynthError):
    code = "protocol-error"


# cli

class ConfigInvalidError(PodSynthError):
    code = "config-invalid"


class EmptyInputError(PodSynthError):
    code = "empty-input"


class ConsistencyViolationError(PodSynthError):
    code = "consistency-violation"
