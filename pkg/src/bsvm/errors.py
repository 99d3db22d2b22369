"""Exception hierarchy shared by the library and the CLI."""


class BsvmError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(BsvmError, ValueError):
    """Input data or parameters violate a precondition."""


class InfeasibleNuError(InvalidInputError):
    """nu exceeds the feasibility bound ``2 * min(n_pos, n_neg) / n``."""

    def __init__(self, nu, bound):
        self.nu = nu
        self.bound = bound
        super().__init__(
            f"nu={nu:g} is infeasible for these class proportions: "
            f"nu must not exceed 2*min(n_pos, n_neg)/n = {bound:g}"
        )


class DataError(InvalidInputError):
    """A data file could not be turned into a usable dataset."""


class SolverError(BsvmError):
    """The optimizer failed in a way the caller cannot recover from."""
