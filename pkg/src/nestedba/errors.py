"""Exception hierarchy shared by all modules."""


class NestedBAError(Exception):
    """Base class for every error raised by the package."""


class UnsupportedType(NestedBAError):
    pass


class RankTooSmall(NestedBAError):
    pass


class NotEndNode(NestedBAError):
    pass


class AlgebraMismatch(NestedBAError):
    pass


class NestingMismatch(NestedBAError):
    pass


class NonIntegralSpectrum(NestedBAError):
    pass


class SingularMatrix(NestedBAError):
    pass


class SingularPoint(NestedBAError):
    """A spectral parameter hit a pole or a non-invertible evaluation."""

    def __init__(self, message, point=None, site=None):
        super().__init__(message)
        self.point = point
        self.site = site


class SingularDBlock(SingularPoint):
    """A pivot block of the block Gauss decomposition is not invertible."""

    def __init__(self, block, u):
        super().__init__(f"D block {block} is singular at u={u}", point=u)
        self.block = block


class ConventionSearchFailed(NestedBAError):
    pass


class NotFusionPoint(NestedBAError):
    pass


class NotEigenvector(NestedBAError):
    pass


class ReconstructionFailed(NestedBAError):
    pass


class ConjectureFailed(NestedBAError):
    pass


class NestingNotRankOneReducible(NestedBAError):
    pass


class PoleCollision(NestedBAError):
    pass


class NoConvergence(NestedBAError):
    pass


class DimensionTooLarge(NestedBAError):
    pass


class ConfigError(NestedBAError):
    """Bad user input to the command line or a config file."""


class Mismatch(NestedBAError):
    """A reproduced report differs from the original."""
