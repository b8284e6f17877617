"""Exception hierarchy.

Every error raised for bad input derives from :class:`PlanarMatchError`, which
is itself a ``ValueError``; the CLI maps these to exit code 2.
"""


class PlanarMatchError(ValueError):
    pass


class NotPlanar(PlanarMatchError):
    pass


class LengthExceeded(PlanarMatchError):
    pass


class InvalidCap(PlanarMatchError):
    pass


class InvalidTau(PlanarMatchError):
    pass


class InvalidGamma(PlanarMatchError):
    pass


class TooLarge(PlanarMatchError):
    pass


class InsufficientSegments(PlanarMatchError):
    """Fewer than ``tau`` segments contain a good edge."""

    def __init__(self, good: int, tau: int):
        super().__init__(f"only {good} good segments, need {tau}")
        self.good = good
        self.tau = tau


class InsufficientTrials(PlanarMatchError):
    pass


class NoTrials(PlanarMatchError):
    pass


class TooFewPoints(PlanarMatchError):
    pass


class ConfigError(PlanarMatchError):
    pass


class InstanceFormatError(PlanarMatchError):
    pass
