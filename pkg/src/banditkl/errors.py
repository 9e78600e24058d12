"""Exception types shared across the package."""


class BanditError(Exception):
    """Base class for all package-specific errors."""


class EmptySupportError(BanditError, ValueError):
    """Distribution construction received no atoms (or no positive weight)."""


class ValueOutOfRangeError(BanditError, ValueError):
    """A reward, support point, weight or probability left its valid range."""


class WeightsNotNormalizableError(BanditError, ValueError):
    """Weight vector sum deviates from 1 by more than the build tolerance."""


class EmptyEmpiricalError(BanditError, ValueError):
    """Tried to freeze an empirical distribution with no observations."""


class MuOutOfRangeError(BanditError, ValueError):
    """Target mean outside [0, 1) where the K_inf machinery is defined."""


class SupportTooLargeError(BanditError, ValueError):
    """Brute-force oracle called on a support beyond its desk-scale limit."""


class NonPositiveTError(BanditError, ValueError):
    """Exploration schedule evaluated at a round index < 1."""


class NoArmsError(BanditError, ValueError):
    """Policy state needs at least two arms."""


class HorizonTooSmallError(BanditError, ValueError):
    """Simulation horizon shorter than the initialization phase."""


class NotBernoulliError(BanditError, ValueError):
    """Bound evaluator requires every arm supported on {0, 1}."""


class MuStarDegenerateError(BanditError, ValueError):
    """Best mean sits at 0 or 1 where the evaluator is not defined."""


class EpsilonOutOfRangeError(BanditError, ValueError):
    """Slack parameter violates the admissible open interval."""


class MuADegenerateError(BanditError, ValueError):
    """Arm mean 0 is outside the finite-support bound evaluator's scope."""


class ZeroGapError(BanditError, ValueError):
    """Baseline bound requested for an arm with zero gap."""


class DegenerateInstanceError(BanditError, ValueError):
    """Instance where the lower-bound slope is undefined (best mean = 1)."""


class ConfigParseError(BanditError, ValueError):
    """Configuration file is not valid JSON."""


class ConfigValidationError(BanditError, ValueError):
    """Configuration parsed but violates a declared invariant."""
