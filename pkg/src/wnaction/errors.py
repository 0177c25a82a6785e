"""Exception hierarchy shared by all modules."""


class WnActionError(Exception):
    """Base class for errors raised by this package."""


class InvalidConfigError(WnActionError, ValueError):
    """A configuration or argument violates its documented invariants."""


class OutOfWindowError(WnActionError, IndexError):
    """A height lies outside the sampled y-window of a noise field.

    The caller should regenerate the field with a larger ``y_cap``.
    """


class InstanceTooLargeError(WnActionError, ValueError):
    """An exhaustive enumeration would exceed its size budget."""


class SchemaError(WnActionError, ValueError):
    """An input file does not match the expected schema."""

    def __init__(self, message, row=None, column=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.row = row
        self.column = column


class SampleError(WnActionError, ValueError):
    """A statistical estimator received too few (or no) samples."""
