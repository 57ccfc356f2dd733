"""Exception hierarchy shared by all evsikit modules."""


class EvsiKitError(Exception):
    """Base class for every error raised by this package."""


# --- decision ---------------------------------------------------------------


class InvalidRatio(EvsiKitError):
    """A cost-ratio sweep was asked to evaluate a ratio <= 0."""


# --- metrics ----------------------------------------------------------------


class LengthMismatch(EvsiKitError):
    """Label and prediction sequences disagree in length (or are empty)."""


class LabelOutOfRange(EvsiKitError):
    """A class label falls outside [0, num_classes)."""


class EmptyCounts(EvsiKitError):
    """Metric computation requested on an all-zero confusion table."""


class DegenerateCounts(EvsiKitError):
    """Channel derivation with zero smoothing hit an empty count row."""


class EmptySequence(EvsiKitError):
    """An operation that needs at least one element got none."""


# --- classifier -------------------------------------------------------------


class SingleClassData(EvsiKitError):
    """Training data contains fewer than two classes."""


class UnknownFeature(EvsiKitError):
    """A requested feature name is not present in the dataset."""


class MissingFeature(EvsiKitError):
    """A prediction input does not cover the model's feature set."""


class EmptyDataset(EvsiKitError):
    """A dataset split with zero rows was passed where rows are required."""


class TooFewSamples(EvsiKitError):
    """Cross-validation asked for more folds than there are samples."""


# --- selection --------------------------------------------------------------


class DisjointnessViolation(EvsiKitError):
    """Candidate features overlap the base feature set."""


# --- data -------------------------------------------------------------------


class MalformedHeader(EvsiKitError):
    """A dataset CSV header does not match the expected schema."""


class NonNumericValue(EvsiKitError):
    """A dataset CSV cell failed numeric parsing.

    Carries ``row`` (1-based data row) and ``column`` attributes.
    """

    def __init__(self, row: int, column: str, raw: str):
        self.row = row
        self.column = column
        self.raw = raw
        super().__init__(f"non-numeric value {raw!r} at row {row}, column {column!r}")


class DuplicateKey(EvsiKitError):
    """Two rows share the same (simulation_id, fault_class, sample_index)."""


class InsufficientSimulations(EvsiKitError):
    """A split needs more distinct simulation ids than the data provides.

    Carries ``fault_class``, ``needed`` and ``available`` attributes.
    """

    def __init__(self, fault_class: int, needed: int, available: int):
        self.fault_class = fault_class
        self.needed = needed
        self.available = available
        super().__init__(
            f"fault class {fault_class}: need {needed} distinct simulations, "
            f"have {available}"
        )


class InvalidConfig(EvsiKitError):
    """A generator configuration violates its own invariants."""


class SchemaViolation(EvsiKitError):
    """A JSON document does not match its published schema."""


class ProbabilityOutOfRange(EvsiKitError):
    """A probability field lies outside [0, 1]."""


# --- session ----------------------------------------------------------------


class UnknownSensor(EvsiKitError):
    """The named sensor is not a candidate of this session."""


class AlreadyDeployed(EvsiKitError):
    """The named sensor has already been deployed."""


class NotDeployed(EvsiKitError):
    """A signal was reported for a sensor that is not deployed."""


class Busy(EvsiKitError):
    """The session is reranking; mutations are rejected until it commits."""
