"""Exception hierarchy shared by all modules."""


class StarAlgebraError(Exception):
    """Base class for every error raised by this package."""


class InputError(StarAlgebraError, ValueError):
    """An argument violates an operation's precondition."""


class AlgebraValidationError(InputError):
    """Structure constants, involution or unit fail the axiom checks."""


class NotInvertible(StarAlgebraError):
    """Raised by ``try_invert`` when no two-sided inverse exists."""


class CapabilityError(StarAlgebraError):
    """The requested operation is not supported for this cone or algebra,
    or a hard resource cap (e.g. the ray enumeration limit) was exceeded."""


class InternalConsistencyError(StarAlgebraError):
    """Independent criteria that must agree returned different answers."""

    def __init__(self, message, dump=None):
        super().__init__(message)
        self.dump = dump or {}


class SchemaError(InputError):
    """An instance file could not be parsed; ``errors`` lists every problem."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"{loc}: {msg}" for loc, msg in self.errors))
