"""Exception hierarchy shared across the package."""


class TcsrError(Exception):
    """Base class for all package-specific errors."""


class DatabaseError(TcsrError):
    """Database file unreadable or structurally unusable."""


class EmptyDatabaseError(DatabaseError):
    """The database contains no user tables."""


class UnknownTableError(DatabaseError):
    """A named table does not exist in the schema."""


class TemplateError(TcsrError):
    """Prompt template lookup or slot binding failed."""


class UnboundSlotError(TemplateError):
    """A template slot has no binding."""

    def __init__(self, slot: str):
        super().__init__(f"unbound slot: {slot}")
        self.slot = slot


class TransportError(TcsrError):
    """LLM/embedding endpoint unreachable after retries."""


class MockScriptMissError(TcsrError):
    """The scripted mock has no response for a request."""


class ExtractionError(TcsrError):
    """Keyword extraction response could not be parsed."""

    def __init__(self, message: str, raw_response: str = ""):
        super().__init__(message)
        self.raw_response = raw_response


class GenerationError(TcsrError):
    """No SQL statement could be recovered from an LLM reply."""


class ClauseParseError(TcsrError):
    """SQL text could not be decomposed into clause sets."""


class ConfigError(TcsrError):
    """Run configuration invalid or unreadable."""


class MappingSpecError(TcsrError):
    """Relationship-matching import spec names missing tables/columns."""
