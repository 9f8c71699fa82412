"""Exception types shared across the package."""


class PeelLabError(Exception):
    """Base class for library errors."""


class DegenerateInput(PeelLabError):
    """Points do not affinely span the ambient space."""

    def __init__(self, msg, affine_dim=None):
        super().__init__(msg)
        self.affine_dim = affine_dim


class Unbounded(PeelLabError):
    pass


class NotSimple(PeelLabError):
    pass


class OutOfRegime(PeelLabError):
    """A coordinate lies outside the cube-corner box (0, 1/2]^d."""


class RegimeViolation(PeelLabError):
    """A point maps outside every corner box of the container."""


class BoundaryPoint(PeelLabError):
    pass


class NonIntegerLevel(PeelLabError):
    pass


class LayerMissing(PeelLabError):
    pass


class InsufficientReplications(PeelLabError):
    pass


class NonPositiveCoordinate(PeelLabError):
    pass


class SchemaError(PeelLabError):
    """Config validation failure; ``key`` is the dotted path of the bad entry."""

    def __init__(self, key, msg=""):
        super().__init__(f"{key}: {msg}" if msg else key)
        self.key = key
