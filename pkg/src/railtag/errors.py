"""Exceptions shared across the simulator."""


class RailtagError(Exception):
    """Base class for all simulator errors."""


class GeometryError(RailtagError):
    """A segment's geometry is out of the allowed range."""


class OverlapError(RailtagError):
    """Track segments are not contiguous."""


class OutOfTrack(RailtagError):
    """A position lies beyond the track extent."""


class DomainError(RailtagError):
    """An argument is outside a formula's domain."""


class DanglingTag(RailtagError):
    """A tag installation references no track feature."""


class UnknownTag(RailtagError):
    """A scanned tag code matches neither a fixed record nor a class prefix."""


class ConfigError(RailtagError):
    """Invalid scenario or experiment configuration."""
