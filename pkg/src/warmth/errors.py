"""Exception hierarchy shared by all modules.

Everything deriving from :class:`ValidationError` describes bad input
(malformed files, out-of-range labels, inconsistent configs). The command
line maps these to exit code 1; any other exception is a runtime failure.
"""


class ValidationError(ValueError):
    pass


class SchemaError(ValidationError):
    """A tag string or vocabulary does not follow the tagging schema."""


class IngestionError(ValidationError):
    """A transcript or label file could not be ingested."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


class FormatError(ValidationError):
    """An audio, CSV, embedding or model file has an unsupported layout."""


class ManifestError(ValidationError):
    """An experiment manifest is invalid or references missing files."""
