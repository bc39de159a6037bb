"""Exception hierarchy.

Three families map onto the CLI exit codes: validation problems (2),
domain errors (3) and backend / I/O failures (4).
"""


class PlpError(Exception):
    """Base class for every error raised by plpbench."""


class ValidationError(PlpError, ValueError):
    pass


class DomainError(PlpError):
    pass


class BackendError(PlpError):
    """A model backend failed. ``record_id`` is filled in by pipelines."""

    record_id = None


class IoError(PlpError, OSError):
    pass


# -- tokenizer -------------------------------------------------------------

class EmptySource(ValidationError):
    pass


class UnsupportedLanguage(DomainError):
    pass


class ParseError(DomainError):
    def __init__(self, position, message="source does not parse"):
        self.position = position
        super().__init__(f"{message} at byte {position}")


# -- datasets --------------------------------------------------------------

class SchemaError(ValidationError):
    def __init__(self, line_no, field):
        self.line_no = line_no
        self.field = field
        super().__init__(f"line {line_no}: missing or invalid field {field!r}")


class InvalidPartition(ValidationError):
    pass


class MissingField(ValidationError):
    def __init__(self, key):
        self.key = key
        super().__init__(f"field {key!r} missing from at least one record")


class InsufficientData(DomainError):
    pass


class OutOfRangeScore(ValidationError):
    pass


# -- models ----------------------------------------------------------------

class UnknownModel(DomainError):
    pass


class Unsupported(DomainError):
    pass


class HttpError(BackendError):
    def __init__(self, status, body=""):
        self.status = status
        self.body = body
        super().__init__(f"HTTP {status}: {body[:200]}")


class Timeout(BackendError):
    pass


class MalformedResponse(BackendError):
    pass


# -- pipelines / retrieval / metrics ---------------------------------------

class SchemaMismatch(ValidationError):
    pass


class InvalidChunkParams(ValidationError):
    pass


class DimensionMismatch(DomainError):
    pass


class DuplicateChunk(DomainError):
    pass


class EmptyStore(DomainError):
    pass


class LengthMismatch(ValidationError):
    pass


class EmptyInput(ValidationError):
    pass


class LanguageMismatch(DomainError):
    pass
