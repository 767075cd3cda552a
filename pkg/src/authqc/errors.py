"""Exception hierarchy shared by every stage of the pipeline.

Each class carries the process exit code the command-line front end uses
for its category.
"""


class AqcError(Exception):
    exit_code = 1


class ParseError(AqcError, ValueError):
    exit_code = 2

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class WidthError(AqcError, ValueError):
    exit_code = 3


class AuthenticityError(AqcError):
    exit_code = 4


class BudgetError(AqcError):
    exit_code = 5


class ShuffleError(BudgetError):
    """The shuffler could not honour its length cap."""
