"""Exception types shared across the package.

Each maps to a CLI exit code: usage problems exit 1, data problems exit 2,
numeric failures exit 3.
"""


class UsageError(Exception):
    """Bad command-line arguments or an unusable configuration."""


class DataFormatError(Exception):
    """A dataset directory or one of its files is malformed.

    Carries optional file/line context so loader errors point at the
    offending line.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix = f"{path}"
            if line is not None:
                prefix += f":{line}"
            prefix += ": "
        super().__init__(prefix + message)


class CheckpointError(Exception):
    """A checkpoint file is unreadable or has the wrong format tag."""


class NumericError(Exception):
    """Training diverged or a numeric check failed."""
