"""Exception types shared across the package."""


class UsageError(ValueError):
    """Bad arguments: wrong shapes, non-finite entries, out-of-range parameters."""


class DomainError(ValueError):
    """A point lies outside the domain where an oracle is defined."""


class CapabilityError(NotImplementedError):
    """The requested quantity is not available for this function kind."""


class CertificateError(RuntimeError):
    """A certificate could not be computed (degenerate geometry, etc.)."""


class SchemaError(ValueError):
    """Malformed problem-spec JSON."""
