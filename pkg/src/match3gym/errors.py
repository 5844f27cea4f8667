"""Exception hierarchy shared by every module."""


class Match3Error(Exception):
    """Base class for all errors raised by match3gym."""


class DimensionError(Match3Error, ValueError):
    pass


class MoveError(Match3Error, ValueError):
    pass


class UnplayableBoardError(Match3Error):
    pass


class LevelParseError(Match3Error, ValueError):
    pass


class LevelValidationError(Match3Error, ValueError):
    pass


class LifecycleError(Match3Error, RuntimeError):
    pass


class ShapeError(Match3Error, ValueError):
    pass


class ModeError(Match3Error, ValueError):
    pass


class CheckpointError(Match3Error):
    pass


class NoMoveError(Match3Error):
    pass


class ParameterError(Match3Error, ValueError):
    pass


class BatchError(Match3Error, ValueError):
    pass
