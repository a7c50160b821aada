"""Exception hierarchy shared by all modules."""


class LifecycleError(Exception):
    """Base class for every error raised by the package."""


class BadDimension(LifecycleError, ValueError):
    pass


class NonPositiveDefinite(LifecycleError, ValueError):
    pass


class DriftBelowRiskFree(LifecycleError, ValueError):
    pass


class InvalidCurve(LifecycleError, ValueError):
    pass


class FloorViolated(LifecycleError, ValueError):
    pass


class InfeasibleBudget(LifecycleError, ValueError):
    pass


class InfeasibleEndowment(InfeasibleBudget):
    """The endowment does not cover the present value of all floors."""

    def __init__(self, v0: float, bound: float):
        self.v0 = v0
        self.bound = bound
        super().__init__(f"infeasible endowment: v0={v0:.6f} must exceed F(0)={bound:.6f}")


class NonFinite(LifecycleError, ArithmeticError):
    pass


class NoBracket(LifecycleError, ArithmeticError):
    pass


class MaxIterations(LifecycleError, ArithmeticError):
    pass


class Degenerate(LifecycleError, ValueError):
    pass


class NotConstantB(LifecycleError, ValueError):
    pass


class MultiAssetUnsupported(LifecycleError, ValueError):
    pass


class NonPositivePrice(LifecycleError, ValueError):
    pass


class ZeroWealth(LifecycleError, ArithmeticError):
    pass


class ZeroExpectedWealth(LifecycleError, ArithmeticError):
    pass


class InfeasibleParams(LifecycleError, ValueError):
    pass


class InternalConsistency(LifecycleError, RuntimeError):
    pass


class ConfigError(LifecycleError, ValueError):
    """Configuration problem; the message starts with the offending field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class ScenarioError(LifecycleError, ValueError):
    pass
