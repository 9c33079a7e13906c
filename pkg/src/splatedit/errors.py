"""Exception types shared across the package.

The CLI maps these onto stable exit codes (see `splatedit.cli`):
config/parameter problems exit 2, transport problems exit 3, and
training divergence exits 4.
"""


class SplateditError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(SplateditError, ValueError):
    """An argument violates an operation's preconditions."""


class ConfigError(ParameterError):
    """A pipeline configuration file is missing, malformed, or inconsistent."""


class PlyFormatError(SplateditError, ValueError):
    """A PLY file does not conform to the Gaussian-scene layout."""


class SceneDataError(SplateditError, ValueError):
    """Scene arrays contain non-finite or otherwise invalid values."""


class EmptyEditingRegionError(SplateditError):
    """The editing box projects to an empty mask in every view."""


class TransportError(SplateditError):
    """The inpainting service could not be reached (retriable)."""


class ProtocolError(SplateditError):
    """The inpainting service answered with a malformed or mismatched payload."""


class TrainingDivergedError(SplateditError):
    """Optimization produced a non-finite loss.

    Carries the failing iteration and, when available, the path of the
    last checkpoint written before the failure.
    """

    def __init__(self, iteration: int, checkpoint: str | None = None):
        self.iteration = iteration
        self.checkpoint = checkpoint
        msg = f"loss became non-finite at iteration {iteration}"
        if checkpoint:
            msg += f" (last checkpoint: {checkpoint})"
        super().__init__(msg)
