"""Exception types raised across the package."""


class MobstabError(Exception):
    """Base class for all package errors."""


class DegenerateFrame(MobstabError):
    pass


class PoleSingularity(MobstabError):
    """A point sits on (or numerically at) the pole of a stereographic chart."""


class SingularMatrix(MobstabError):
    pass


class InvalidEps(MobstabError, ValueError):
    pass


class ResourceLimit(MobstabError):
    """A quadrature rule would exceed the configured node cap."""


class NotBandLimited(MobstabError, TypeError):
    """The field has no finite harmonic-polynomial representation."""


class NotOrientationPreserving(MobstabError, ValueError):
    pass


class CenteringFailed(MobstabError):
    pass


class MaxIterations(MobstabError):
    pass


class MalformedSpec(MobstabError, ValueError):
    """A map-spec document could not be interpreted.

    ``where`` carries the offending field path or ``line N`` for JSON
    syntax errors.
    """

    def __init__(self, message, where=None):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)


class UnknownSuite(MobstabError, ValueError):
    pass
