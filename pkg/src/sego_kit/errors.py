"""Exception taxonomy.

The CLI maps ConfigurationError to exit code 2 and every other failure to
exit code 1, so configuration mistakes stay distinguishable from runtime
faults.
"""


class SegoKitError(Exception):
    """Base class for all package errors."""


class InputDomainError(SegoKitError, ValueError):
    """An argument is outside the operation's declared domain."""


class ConfigurationError(SegoKitError, ValueError):
    """A construction / config parameter set is invalid."""


class ContractViolationError(SegoKitError, RuntimeError):
    """A caller-supplied object broke one of its stated invariants."""


class InternalStateError(SegoKitError, RuntimeError):
    """An internal invariant no longer holds (non-finite tables etc.)."""


class DegenerateTargetError(SegoKitError, RuntimeError):
    """The unnormalized waypoint target is identically zero."""


class KernelSupportError(SegoKitError, RuntimeError):
    """The proposal kernel lacks two-way positive density for a move."""


class CapacityError(SegoKitError, RuntimeError):
    """A requested dense materialization exceeds the supported size."""


class ModeError(SegoKitError, RuntimeError):
    """An operation received chains sampled under the wrong transition mode."""
