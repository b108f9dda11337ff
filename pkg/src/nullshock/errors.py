"""Exception types raised by the toolkit."""


class NullShockError(Exception):
    """Base class for every error raised by nullshock."""


class DegenerateMetric(NullShockError):
    pass


class OutOfDomain(NullShockError):
    """A metric or solution was evaluated outside its coordinate domain."""


class ChartExit(OutOfDomain):
    """A curve left the domain of the chart it was integrated in."""


class PatchTooLarge(NullShockError):
    """The geodesic fan of an MGS chart became (nearly) singular."""


class UnnormalizedVelocity(NullShockError):
    pass


class BadJacobian(NullShockError):
    pass


class ZeroGradient(NullShockError):
    pass


class NoTransverse(NullShockError):
    pass


class ShockAtOrigin(NullShockError):
    """The shock radius reached zero (or went negative) on the requested time."""


class BranchError(NullShockError):
    pass


class BadSigma(NullShockError, ValueError):
    pass


class CharacteristicSurface(NullShockError):
    pass


class AreaDerivativeZero(NullShockError):
    pass


class NoRoot(NullShockError):
    pass
