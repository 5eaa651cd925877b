"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A scenario parameter is missing, unknown, or out of range.

    The message always names the offending key. CLI maps this to exit 1.
    """


class InvariantError(AssertionError):
    """An internal engine invariant was violated (programming error).

    CLI maps this to exit 2.
    """
