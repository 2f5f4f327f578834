"""Exception types shared across modules."""


class SpecError(ValueError):
    """Malformed or invalid problem specification."""


class HypothesisError(ValueError):
    """Input violates a hypothesis the existence machinery depends on."""


class SolverError(RuntimeError):
    """Unrecoverable numerical failure (non-finite iterate, collapsed iteration)."""
