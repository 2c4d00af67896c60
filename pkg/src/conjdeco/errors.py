"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A grid, spec, or experiment configuration violates a stated constraint."""


class SupportOverflowError(ConfigurationError):
    """The time-scaled support of the state no longer fits on the grid.

    Raised instead of silently wrapping around the periodic boundary; the
    message states the required half-width.
    """


class OracleSizeError(ConfigurationError):
    """A brute-force oracle axis exceeds the hard size cap (guards O(n^3) blowups)."""


class InvariantViolation(RuntimeError):
    """A computed object failed one of its numerical invariants."""
