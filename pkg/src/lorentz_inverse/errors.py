"""Exception hierarchy shared by all modules."""


class LorentzError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(LorentzError, ValueError):
    """Malformed metric or experiment configuration (bad expression, bad keys)."""


class EvaluationError(LorentzError):
    """A coefficient expression is undefined or non-finite at the query point."""


class DomainError(LorentzError):
    """A query point lies outside the field's evaluation box."""


class EscapedDomain(DomainError):
    """A trajectory left the field's evaluation box."""


class SignatureViolation(LorentzError):
    """The inverse metric does not have the expected eigenvalue signature."""


class SingularMetric(LorentzError):
    """Inversion of [g^{jk}] failed or is too ill-conditioned."""


class StepFailure(LorentzError):
    """The adaptive integrator could not make progress."""


class NotTimelike(LorentzError):
    """Length data requested for a null or spacelike covector."""


class MissingSample(LorentzError, KeyError):
    """A table oracle has no row for the requested query."""

    def __str__(self):
        return Exception.__str__(self)


class NoTimelikeDirection(NotTimelike):
    """No timelike seed covector could be found at a point."""


class PolarizationFailure(NotTimelike):
    """Polarization queries could not be made admissible."""


class UnsupportedOrder(LorentzError, ValueError):
    """Requested boundary-jet order is not implemented."""


class SingularJacobian(LorentzError):
    """Endpoint Jacobian is (numerically) singular, e.g. at a conjugate point."""


class NoConvergence(LorentzError):
    """Newton shooting did not converge."""


class DegenerateDirection(LorentzError):
    """The first-variation term R1 is non-positive for every boundary pair."""
