"""Exception taxonomy shared across the package.

The CLI maps these onto process exit codes: ConfigurationError -> 2,
DataError -> 3, NumericsError -> 4. Everything else is a plain bug.
"""


class SpeakerNasError(Exception):
    """Base class for all package errors."""


class DimensionError(SpeakerNasError):
    """Array shapes disagree; message names the offending axis."""


class UnsupportedPrimitiveError(SpeakerNasError):
    """Unknown primitive kind passed to the dispatcher."""


class ContractError(SpeakerNasError):
    """A documented precondition was violated by the caller."""


class ConfigurationError(SpeakerNasError):
    """Invalid run configuration (bad field, unknown key, missing path)."""


class DataError(SpeakerNasError):
    """Dataset-level problem: missing utterance, malformed manifest, ..."""


class NumericsError(SpeakerNasError):
    """Non-finite values encountered where finiteness is required.

    ``param_name`` identifies the offending parameter when known;
    ``checkpoint_path`` points at the last good checkpoint, if any.
    """

    def __init__(self, message, param_name=None, checkpoint_path=None):
        super().__init__(message)
        self.param_name = param_name
        self.checkpoint_path = checkpoint_path


class CheckpointError(SpeakerNasError):
    """Corrupt or incompatible tensor-container file."""


class GenotypeError(SpeakerNasError):
    """Malformed genotype text or an invariant violation."""
