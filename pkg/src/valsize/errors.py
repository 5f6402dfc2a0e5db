"""Exception hierarchy. Everything raised on bad numeric input derives from
:class:`PreconditionError`, so the CLI can map it to a single exit status."""


class ValsizeError(ValueError):
    """Base class for all valsize errors."""


class PreconditionError(ValsizeError):
    """A numeric precondition of a formula does not hold.

    ``criterion`` names the sample-size criterion being evaluated, when known.
    """

    def __init__(self, message, criterion=None):
        super().__init__(message)
        self.criterion = criterion


class UndefinedMeasureError(PreconditionError):
    """A measure's denominator is zero, e.g. sensitivity with no events."""

    def __init__(self, kind, empty_cells):
        self.kind = kind
        self.empty_cells = tuple(empty_cells)
        cells = "+".join(self.empty_cells)
        super().__init__(f"{kind} is undefined: {cells} == 0", criterion=str(kind))


class DegenerateInputError(PreconditionError):
    """An anticipated rate of exactly 0 or 1: infinite or zero information."""


class InconsistentTargetsError(PreconditionError):
    """Precision/recall targets already imply a wider F1 interval than requested."""


class SimulationDegeneracyError(ValsizeError):
    """Every repetition of a simulation was degenerate."""


class ConfigError(ValsizeError):
    """Scenario configuration failed validation. ``path`` locates the bad field."""

    def __init__(self, message, path=""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
