class PslabError(Exception):
    """Base class for every failure raised by the lab."""

    exit_code = 1

    def to_dict(self):
        return {"error": type(self).__name__, "message": str(self)}


class InvalidInput(PslabError, ValueError):
    exit_code = 2


class UnsupportedModel(PslabError):
    exit_code = 2


class BranchError(PslabError, ValueError):
    """Square root requested on the cut of the principal branch."""

    exit_code = 2


class ConditioningError(PslabError):
    def __init__(self, message, cond_estimate):
        super().__init__(message)
        self.cond_estimate = cond_estimate

    def to_dict(self):
        d = super().to_dict()
        d["cond_estimate"] = self.cond_estimate
        return d


class SaturationError(PslabError):
    """Series coefficients passed the magnitude guard."""


class ConstructionError(PslabError):
    def __init__(self, message, stage, margins=None):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.margins = margins or {}

    def to_dict(self):
        d = super().to_dict()
        d["stage"] = self.stage
        d["margins"] = self.margins
        return d


class InfeasibleEpsilon(ConstructionError):
    def __init__(self, eps1, achieved):
        super().__init__(
            f"eps1={eps1:g} is not below dist(dG_0, dOmega_1)={achieved:g}",
            stage="plan_domains",
            margins={"achieved_distance": achieved},
        )
        self.achieved = achieved


class NestingError(InvalidInput):
    """Domains are not strictly nested."""
