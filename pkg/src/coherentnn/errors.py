"""Exception types shared across the package."""


class CoherentError(Exception):
    """Base class for all coherentnn errors."""


class DimensionMismatch(CoherentError):
    """Operands have incompatible shapes."""


class PoleProximity(CoherentError):
    """A pre-activation landed within the guard radius of an activation pole."""


class NonFiniteLoss(CoherentError):
    """Training loss became NaN or Inf (usually a divergent learning rate)."""


class RankDeficient(CoherentError):
    """Matrix is numerically singular, so no unitary polar factor exists."""


class NotUnitary(CoherentError):
    """Matrix fails the unitarity precondition."""


class NearZeroDivisor(CoherentError):
    """Elementwise division hit entries with vanishing modulus.

    ``indices`` holds the offending positions.
    """

    def __init__(self, message, indices=()):
        super().__init__(message)
        self.indices = tuple(int(i) for i in indices)


class BadMagic(CoherentError):
    """IDX file starts with an unexpected magic number."""


class TruncatedFile(CoherentError):
    """IDX file ended before the declared payload."""


class CountMismatch(CoherentError):
    """Image and label files disagree on the number of records."""
