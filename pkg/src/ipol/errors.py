"""Exception types shared across the toolchain."""

from __future__ import annotations


class IpolError(Exception):
    """Base class for all toolchain errors."""


class DocumentError(IpolError):
    """Error tied to a position inside an input document."""

    def __init__(self, message: str, *, line: int | None = None, path: str | None = None):
        self.message = message
        self.line = line
        self.path = path
        where = []
        if path:
            where.append(path)
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class XmlSyntaxError(DocumentError):
    """The document is not well-formed XML."""


class SchemaError(DocumentError):
    """Well-formed XML that violates the document schema."""


class FieldValueError(DocumentError, ValueError):
    """A field holds a non-numeric or out-of-range value."""


class CycleError(IpolError):
    """The connection set forms a cycle."""


class DanglingRefError(IpolError):
    """A connection references a node id that does not exist."""


class UnderspecifiedError(IpolError):
    """The chain lacks information the analysis needs (e.g. global output dims)."""


class OpaqueCalcError(IpolError):
    """The operation needs a concrete base_calc but the operator's is opaque."""


class CapabilityError(IpolError):
    """An operator is assigned to a unit that cannot host it."""


class DimensionError(IpolError):
    """Frame dimensions are inconsistent with what the operator requires."""


class ConfigError(IpolError):
    """Invalid simulation configuration."""
