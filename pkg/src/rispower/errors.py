"""Exception types shared across the package."""


class ScenarioError(ValueError):
    """Scenario document failed to parse or violated an invariant."""


class InfeasibleError(RuntimeError):
    """The requested targets cannot be met for the given channels."""


class NumericalFailureError(RuntimeError):
    """A linear system was singular or a solver lost numerical validity."""
