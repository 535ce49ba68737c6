from typing import Optional


class DetectorError(Exception):
    """Base error; exit_code is what the CLI returns when it escapes a command."""

    exit_code = 1

    def __init__(self, detail: str, exit_code: Optional[int] = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code


class ConfigError(DetectorError):
    exit_code = 1


class DataError(DetectorError):
    exit_code = 2


class NumericalError(DetectorError):
    exit_code = 3


class ShapeMismatchError(DataError, ValueError):
    pass


class EmptyInputError(DataError, ValueError):
    pass


class InvalidArgumentError(ConfigError, ValueError):
    pass


class NonFiniteInputError(NumericalError, ValueError):
    def __init__(self, detail: str = "non-finite input"):
        super().__init__(detail)


class DivergenceError(NumericalError):
    pass


class DegenerateProtocolError(DataError, ValueError):
    def __init__(self, detail: str = "degenerate protocol"):
        super().__init__(detail)


class InvalidCostModelError(ConfigError, ValueError):
    pass


class MalformedLineError(DataError):
    def __init__(self, path: str, line_number: int, line: str):
        super().__init__(f"{path}:{line_number}: malformed line {line.strip()!r}")
        self.path = path
        self.line_number = line_number


class DuplicateIdError(DataError):
    def __init__(self, path: str, utt_id: str):
        super().__init__(f"{path}: duplicate utt_id {utt_id!r}")
        self.utt_id = utt_id


class CorruptCheckpointError(DataError):
    pass


class CheckpointVersionError(DataError):
    pass
