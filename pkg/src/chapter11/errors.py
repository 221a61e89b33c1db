"""Exception hierarchy shared by all modules."""


class Chapter11Error(Exception):
    """Base class for library errors."""


class ModelValidationError(Chapter11Error, ValueError):
    """A model descriptor violates a structural invariant.

    ``field`` carries a dotted path to the offending entry when known,
    e.g. ``"solvent.jumps.components[1].weight"``.
    """

    def __init__(self, message, field=None):
        self.message = message
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)

    def prefixed(self, prefix):
        """Same error with ``prefix`` prepended to the field path."""
        field = f"{prefix}.{self.field}" if self.field else prefix
        return ModelValidationError(self.message, field)


class DomainError(Chapter11Error, ValueError):
    """An argument lies outside the domain of an operation."""


class UnsupportedModelError(Chapter11Error, ValueError):
    """The operation is only defined for a narrower model family."""


class NumericalError(Chapter11Error, ArithmeticError):
    """A numerical procedure failed (no bracket, lost accuracy, ...)."""


class DegeneracyError(NumericalError):
    """Near-multiple root of psi(theta) = q; perturb the parameters."""


class BracketError(NumericalError):
    """A root or minimum bracket could not be established."""


class KnotProximityError(DomainError):
    """Evaluation point too close to a kink of the candidate function."""
