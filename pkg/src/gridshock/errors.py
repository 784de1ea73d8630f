"""Exception types raised across the package."""


class GridshockError(Exception):
    """Base class for all package errors."""


class DuplicateId(GridshockError):
    pass


class UnknownNode(GridshockError):
    pass


class UnknownEdge(GridshockError):
    pass


class InvalidGeometry(GridshockError):
    pass


class BrokenPath(GridshockError):
    pass


class OutOfDomain(GridshockError):
    """An asset falls outside the weather grid it is projected onto."""

    def __init__(self, asset_id, message=None):
        self.asset_id = asset_id
        super().__init__(message or f"asset {asset_id!r} lies outside the weather grid")


class InvalidGrid(GridshockError):
    pass


class TooManyRemovals(GridshockError):
    pass


class DegenerateDemand(GridshockError):
    pass


class HorizonExceeded(GridshockError):
    pass


class InvalidK(GridshockError):
    pass


class BinMismatch(GridshockError):
    pass


class EmptySample(GridshockError):
    pass


class InvalidFilter(GridshockError):
    pass


class ConfigError(GridshockError):
    """Invalid run configuration; ``field`` names the offending setting."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
