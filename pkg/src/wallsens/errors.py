"""Exception hierarchy; each class maps to a distinct CLI exit code."""


class WallsensError(Exception):
    exit_code = 1


class InputError(WallsensError, ValueError):
    """Rejected input: bad parameters, malformed files, out-of-domain points."""

    exit_code = 2


class DivergenceError(WallsensError, ArithmeticError):
    """A march produced a non-finite value."""

    exit_code = 3

    def __init__(self, node: int, level: int, what: str = "u"):
        super().__init__(f"non-finite {what} at node j={node}, level n={level}")
        self.node = node
        self.level = level


class OracleError(WallsensError):
    """Reference solver failed its self-convergence check."""

    exit_code = 4


class AcceptanceError(WallsensError):
    exit_code = 5
