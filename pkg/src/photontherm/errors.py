"""Exception types shared across the package."""


class DomainError(ValueError):
    """An input lies outside the domain where a formula applies."""


class DegenerateGeometryError(DomainError):
    """The laser and mode wave vectors coincide, so |k_L - q| = 0."""


class ConfigError(ValueError):
    """A run configuration failed validation.

    ``field`` is a JSON-path-like location (``$.drive.rabi``) when known.
    """

    def __init__(self, message, field=None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class QuadratureError(RuntimeError):
    """A numerical integral did not converge.

    ``diagnostics`` holds the successive estimates and node counts.
    """

    def __init__(self, message, diagnostics=None):
        self.diagnostics = dict(diagnostics or {})
        super().__init__(f"{message} (diagnostics: {self.diagnostics})")


class RootFindingError(RuntimeError):
    """A bracketed root or minimum search failed to converge."""
