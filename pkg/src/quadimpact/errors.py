"""Exception types raised across the package."""


class QuadImpactError(Exception):
    """Base class for all package errors."""


class GimbalLock(QuadImpactError):
    """Euler-angle pitch too close to +-pi/2 for the rate map or its inverse."""


class InvalidArmLength(QuadImpactError):
    """An arm length lies outside (0, L]."""


class SingularMixer(QuadImpactError):
    """The thrust/torque mixer cannot be inverted for the given levers."""


class SingularMass(QuadImpactError):
    """The generalized mass matrix is too badly conditioned to solve."""


class NumericalBlowup(QuadImpactError):
    """A state component exceeded the sanity bound during integration."""


class DegenerateThrust(QuadImpactError):
    """The commanded force is too small to define a thrust direction."""


class RecoveryTimeout(QuadImpactError):
    """Settling after a collision was not reached in the allotted time."""


class NoContact(QuadImpactError):
    """A log contains no contact episode."""


class MultipleEpisodes(QuadImpactError):
    """A log contains more than one contact episode."""


class NoStepDetected(QuadImpactError):
    """A tracking log contains no setpoint step to measure."""


class Unachievable(QuadImpactError):
    """A calibration target lies outside the attainable range."""


class OutOfRange(QuadImpactError):
    """A requested sample time lies outside the log span."""


class ConfigError(QuadImpactError):
    """A scenario config file is missing or malformed."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
