"""Exception hierarchy.

Every error carries a module-qualified ``code`` (``"curve_core.DuplicateBranchPoint"``)
and the CLI exit status it maps to.
"""


class SBError(Exception):
    module = "sblattice"
    exit_code = 2

    def __init__(self, message="", **details):
        super().__init__(message)
        self.details = details

    @property
    def code(self):
        return f"{self.module}.{type(self).__name__}"


# curve_core
class CurveError(SBError):
    module = "curve_core"


class DuplicateBranchPoint(CurveError):
    pass


class ZeroBranchPoint(CurveError):
    pass


class OddCount(CurveError):
    pass


class AtBranchPoint(CurveError):
    pass


# contour_engine
class ContourError(SBError):
    module = "contour_engine"
    exit_code = 3


class IntersectingCuts(ContourError):
    exit_code = 2


class TooCloseToBranchPoint(ContourError):
    pass


class PoleOnPath(ContourError):
    pass


class ToleranceNotReached(ContourError):
    pass


class NoPathFound(ContourError):
    pass


# period_theta
class PeriodError(SBError):
    module = "period_theta"
    exit_code = 3


class SingularC(PeriodError):
    pass


class NonconvergentTau(PeriodError):
    pass


# abelian_calculus
class AbelianError(SBError):
    module = "abelian_calculus"
    exit_code = 3


class SingularNormalizationSystem(AbelianError):
    pass


class ExtrapolationDivergence(AbelianError):
    pass


class GenusTooSmall(AbelianError):
    exit_code = 2


# sb_hierarchy
class HierarchyError(SBError):
    module = "sb_hierarchy"


class WindowTooSmall(HierarchyError):
    pass


class DegenerateLeadingCoefficient(HierarchyError):
    pass


class RootAtBranchPointCollision(HierarchyError):
    pass


# solution_engine
class SolutionError(SBError):
    module = "solution_engine"


class SpecialDivisor(SolutionError):
    pass


class SelfCheckFailed(SolutionError):
    exit_code = 3


class ZeroAlpha0(SolutionError):
    pass


class ThetaNearZero(SolutionError):
    exit_code = 3


class PoleOfPhi(SolutionError):
    pass


class EqualBranchPoints(SolutionError):
    pass


class InvalidInitialData(SolutionError):
    pass


# verification
class VerificationError(SBError):
    module = "verification"
    exit_code = 3


class IllConditionedInterpolation(VerificationError):
    pass


# cli_io
class ConfigError(SBError):
    module = "cli_io"
