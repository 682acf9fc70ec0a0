"""Exception types raised by rigkit."""


class RigkitError(Exception):
    """Base class for all library errors."""


class DomainError(RigkitError, ValueError):
    """An argument lies outside the support or the parameter space."""


class SpreadUnidentifiableError(RigkitError, ValueError):
    """All observations coincide, so the spread parameter has no finite MLE."""


class DegenerateComponentError(RigkitError):
    """A mixture component collapsed below the minimum effective count."""

    def __init__(self, component, effective_count, iteration=None):
        self.component = component
        self.effective_count = effective_count
        self.iteration = iteration
        where = "" if iteration is None else f" at iteration {iteration}"
        super().__init__(
            f"component {component} is degenerate{where}: "
            f"effective count {effective_count:.3g} < 3"
        )


class NonFiniteError(RigkitError, FloatingPointError):
    """A likelihood or objective evaluated to a non-finite value."""

    def __init__(self, message, iteration=None, abscissa=None):
        self.iteration = iteration
        self.abscissa = abscissa
        super().__init__(message)


class InputError(RigkitError, ValueError):
    """Malformed or unusable input data."""


class FitError(RigkitError):
    """No usable fit: a nested model fits worse, or every candidate failed."""
