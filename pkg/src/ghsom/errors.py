"""Exception hierarchy shared by all ghsom modules."""


class GhsomError(Exception):
    """Base class for every error raised by this package."""


class InputError(GhsomError):
    """Bad user input: malformed files, dimension mismatches, empty datasets."""


class DegenerateMapError(GhsomError):
    """A map has no winner units, so error statistics are undefined."""


class GrowthRefused(GhsomError):
    """A structural edit was refused (size cap, last unit, no insertion site)."""


class ModelFormatError(InputError):
    """A model file is unreadable, tampered with, or version-incompatible."""


class UnknownTargetError(GhsomError):
    """A command referenced a map id or unit coordinate that does not exist."""
