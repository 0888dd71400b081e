"""Exception types. Each carries a short machine-readable ``code``."""


class CbdError(ValueError):
    code = "error"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)

    def __str__(self) -> str:
        msg = super().__str__()
        return msg if msg.startswith(self.code) else f"{self.code}: {msg}"


class InvalidRankError(CbdError):
    code = "invalid-rank"


class InvalidCorrelationError(CbdError):
    code = "invalid-correlation"


class InvalidMarginalError(CbdError):
    code = "invalid-marginal"


class ShapeError(CbdError):
    code = "shape-error"


class InvalidSpecError(CbdError):
    code = "invalid-spec"


class TableInvalidError(CbdError):
    code = "table-invalid"

    def __init__(self, violations=()):
        self.violations = list(violations)
        detail = "; ".join(f"{v.code} ({v.detail})" for v in self.violations)
        super().__init__(detail)


class InsufficientDataError(CbdError):
    code = "insufficient-data"


class ConfigError(CbdError):
    code = "config-error"


class ResourceError(CbdError):
    code = "resource-error"


class ProtocolMismatchError(CbdError):
    code = "protocol-mismatch"


class EmptyContextError(CbdError):
    code = "empty-context"


class EmptyScanError(CbdError):
    code = "empty-scan"


class ParseError(CbdError):
    code = "parse-error"

    def __init__(self, message: str, path=None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
