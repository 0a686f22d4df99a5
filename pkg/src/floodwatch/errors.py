"""Exception types shared across the package."""


class InputError(Exception):
    """Bad or inconsistent input data. The CLI maps this to exit code 2."""


class NumericError(Exception):
    """Non-finite values appeared during computation. CLI exit code 3."""
