"""Exception types shared across the toolkit."""


class VulntagError(Exception):
    """Base class for all toolkit errors."""


class InvalidParameterError(VulntagError):
    """A caller-supplied parameter violates an operation precondition."""


class InvalidInputError(VulntagError):
    """Input data (not a parameter) is unusable, e.g. an empty training corpus."""


class LineFormatError(VulntagError):
    """A line-oriented input file is malformed at a specific line."""

    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no
        self.reason = message


class CorpusFormatError(LineFormatError):
    """Malformed corpus file (bad columns, bad tag, invalid IOB transition)."""


class RecordFormatError(LineFormatError):
    """Malformed structured-record file."""


class ModelFormatError(VulntagError):
    """Model file is corrupt or structurally invalid."""


class ModelVersionError(ModelFormatError):
    """Model file was written with an unsupported format version."""
