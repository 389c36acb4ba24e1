"""Exception types shared across the package."""


class NanofracError(Exception):
    """Base class for package-specific failures."""


class QuadratureNonConvergence(NanofracError):
    """A quadrature result changed too much when the order was doubled."""


class SingularPhase(NanofracError):
    """A matrix inversion failed for a named constituent phase."""

    def __init__(self, phase: str, detail: str = ""):
        self.phase = phase
        msg = f"singular matrix while processing phase '{phase}'"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class InfeasibleTarget(NanofracError):
    """A distribution fit was asked for moments the family cannot produce."""


class SolverNonConvergence(NanofracError):
    """The quasi-Newton solve exhausted its iteration budget.

    Carries the load step id and the final residual norm so drivers can
    report exactly where a run halted.
    """

    def __init__(self, step: int, residual_norm: float, iterations: int):
        self.step = step
        self.residual_norm = residual_norm
        self.iterations = iterations
        super().__init__(
            f"load step {step} did not converge after {iterations} iterations "
            f"(residual norm {residual_norm:.3e})"
        )


class MeshError(NanofracError):
    """Invalid mesh topology or geometry (e.g. non-positive Jacobian)."""


class ConfigError(NanofracError):
    """Configuration file could not be parsed or violates an invariant."""
