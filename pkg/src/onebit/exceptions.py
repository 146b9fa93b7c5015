class OneBitError(Exception):
    """Base class for errors raised by this package."""


class NotLogConcaveError(OneBitError, ValueError):
    pass


class GridExhaustedError(OneBitError, RuntimeError):
    """The posterior concentrated below the resolution of its grid."""


class DegenerateSplitError(OneBitError, ValueError):
    """One side of a threshold carries (numerically) no probability mass."""


class BracketError(OneBitError, RuntimeError):
    """A monotone root bracket did not show a sign change."""


class UndefinedFisherInformationError(OneBitError, ValueError):
    """The prior's location Fisher information is undefined.

    The lower bound needs a prior density that vanishes at the endpoints of
    its support; a uniform prior does not.
    """
