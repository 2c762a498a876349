class MempixError(Exception):
    pass


class ContractViolation(MempixError, AssertionError):
    """A caller broke an operation's precondition (programming error)."""


class InternalCorruption(MempixError, RuntimeError):
    """State invariants were found broken."""


class DatumError(MempixError, ValueError):
    pass


class DuplicateDatum(MempixError, ValueError):
    """A color-table insert reused an existing datum (colorizer bug)."""


class RootImmutable(MempixError):
    pass


class ConfigError(MempixError, ValueError):
    """An engine parameter is outside its allowed bound.

    ``field`` names the parameter; the message states the bound.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class ScenarioError(MempixError, ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)
        self.line = line
        self.column = column


class SnapshotFormatError(MempixError, ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset
