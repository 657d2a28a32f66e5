"""Exception types shared across the toolkit."""


class VoltipError(Exception):
    """Base class for all voltip errors."""


class ValidationError(VoltipError):
    """An argument, parameter, or precondition was violated."""


class VolumeFormatError(VoltipError):
    """A volume file is malformed or inconsistent with its header."""
