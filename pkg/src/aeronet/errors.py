"""Exception hierarchy shared across the package."""


class AeronetError(Exception):
    """Base class for all package errors."""

    code = "error"

    def to_dict(self) -> dict:
        return {"error": self.code, "message": str(self)}


class InvalidInputError(AeronetError, ValueError):
    code = "invalid-input"


class InvalidScenarioError(InvalidInputError):
    code = "invalid-scenario"


class InfeasibleDemandError(AeronetError):
    code = "infeasible-demand"


class InfeasibleDeploymentError(AeronetError):
    code = "infeasible-deployment"


class InvalidPathError(AeronetError, ValueError):
    code = "invalid-path"


class ParseError(AeronetError, ValueError):
    """Malformed input file; ``lineno`` is 1-based."""

    code = "parse-error"

    def __init__(self, message: str, lineno: int | None = None, path=None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if lineno is not None:
            where += f":{lineno}" if where else f"line {lineno}"
        super().__init__(f"{where}: {message}" if where else message)

    def to_dict(self) -> dict:
        d = super().to_dict()
        d["line"] = self.lineno
        return d


class SchemaError(ParseError):
    code = "schema-error"


class StageError(AeronetError):
    """Pipeline failure tagged with the stage that raised it."""

    code = "stage-failed"

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")

    def to_dict(self) -> dict:
        d = super().to_dict()
        d["stage"] = self.stage
        if isinstance(self.cause, AeronetError):
            d["cause"] = self.cause.to_dict()
        return d
