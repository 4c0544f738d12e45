"""Exception types shared across the library."""


class MeshIntegrityError(RuntimeError):
    """A mesh violates a structural invariant (degenerate cell, bad adjacency)."""


class UnsupportedDegreeError(ValueError):
    """Requested a (dimension, degree) combination the element tables do not cover."""


class NumericalDegeneracyError(RuntimeError):
    """A local element system that should be invertible turned out singular."""


class SolverError(RuntimeError):
    """Sparse factorization failed or a solve violated the residual contract."""


class DivergenceError(RuntimeError):
    """Time stepping produced non-finite coefficients."""

    def __init__(self, step_index, message=None):
        self.step_index = step_index
        super().__init__(message or f"non-finite solution at time step {step_index}")
