"""Exception hierarchy.

Everything raised for bad input derives from :class:`GitSegError` (itself a
``ValueError``) so callers, and the CLI, can separate domain errors from I/O.
"""


class GitSegError(ValueError):
    def with_context(self, prefix: str) -> "GitSegError":
        """Same error (type and attributes) with ``prefix: `` prepended."""
        # copy.copy would re-run __init__ with args, which subclasses redefine
        new = type(self).__new__(type(self))
        new.__dict__.update(self.__dict__)
        new.args = (f"{prefix}: {self}",)
        return new


class InvalidShapeError(GitSegError):
    pass


class ShapeMismatchError(GitSegError):
    pass


class EmptyVolumeError(GitSegError):
    pass


class EmptyForegroundError(GitSegError):
    """A distance was requested for a volume with no foreground voxels."""


class MalformedRLEError(GitSegError):
    """Invalid run-length text.

    ``kind`` is one of ``odd-count``, ``not-integer``, ``non-positive``,
    ``out-of-bounds``, ``overlap``; ``token`` is the 0-based index of the
    offending token.
    """

    def __init__(self, kind, token, message):
        super().__init__(f"{message} (token {token})")
        self.kind = kind
        self.token = token


class ParseError(GitSegError):
    pass


class UnknownClassError(GitSegError):
    pass


class DuplicateSliceError(GitSegError):
    pass


class PredictorError(GitSegError):
    pass


class OutOfRangeError(GitSegError):
    pass
