"""Exception types shared across the package."""


class DcovdagError(Exception):
    """Base class for all errors raised by this package."""


class InvalidDagError(DcovdagError):
    """A graph that must be a DAG contains a cycle or non-directed edges."""


class CapacityError(DcovdagError):
    """Input exceeds a documented enumeration limit."""


class DimensionError(DcovdagError):
    """Operands have incompatible shapes or vertex counts."""


class SampleSizeError(DcovdagError):
    """Too few samples for the requested estimator or test."""


class DataError(DcovdagError):
    """Input data is malformed (non-finite values, bad columns, ...)."""


class ParseError(DataError):
    """A cell could not be parsed; message carries row/column location."""


class FormatError(DataError):
    """A file is structurally malformed (e.g. ragged CSV rows)."""


class EmptyDataError(DataError):
    """No usable rows remain after ingestion."""


class DegenerateWeightError(DcovdagError):
    """All kernel weights vanished at an evaluation point (bandwidth too small)."""


class RankError(DcovdagError):
    """A covariance (sub)matrix is singular or too ill-conditioned to invert."""


class MaskError(DcovdagError):
    """No vertex is eligible for latent masking."""


class ConfigError(DcovdagError):
    """Invalid configuration (CLI flags or scenario file)."""
