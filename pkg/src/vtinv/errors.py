"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Bad configuration value or unparseable configuration file."""


class ClosureError(ValueError):
    """Area function has a (near-)complete constriction; acoustics undefined."""


class PeakDeficitError(RuntimeError):
    """Fewer than three resonances found on the analysis grid."""


class UntestableCubeError(RuntimeError):
    """No linearity test point of the cube has a fully valid stencil."""


class DegenerateCubeError(RuntimeError):
    """Cube Jacobian is missing or rank-deficient; local inversion impossible."""


class CodebookFormatError(ValueError):
    """Codebook file cannot be read.

    ``reason`` is one of ``"magic"``, ``"version"``, ``"truncated"``,
    ``"checksum"``.
    """

    def __init__(self, reason: str, message: str):
        super().__init__(message)
        self.reason = reason


class SamplingError(RuntimeError):
    """Rejection sampling exhausted its attempt budget."""


class UnreachableAcousticsError(RuntimeError):
    """No inverse candidate found for a formant triple.

    ``frame_index`` is set when raised while inverting a track.
    """

    def __init__(self, message: str, frame_index: int | None = None):
        super().__init__(message)
        self.frame_index = frame_index
