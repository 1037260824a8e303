"""
Exception hierarchy shared by every gridie module.
"""

from pathlib import Path
from typing import Optional, Union


class GridIEError(Exception):
    """Base exception for gridie failures."""
    pass


class InputValidationError(GridIEError, ValueError):
    """Input violates a documented precondition."""
    pass


class CorpusFormatError(InputValidationError):
    """Malformed line in a corpus, gold or config file."""

    def __init__(self, message: str, path: Union[str, Path, None] = None, line: Optional[int] = None):
        self.path = str(path) if path is not None else None
        self.line = line
        location = ""
        if self.path is not None:
            location = f"{self.path}:{line}: " if line is not None else f"{self.path}: "
        super().__init__(f"{location}{message}")


class ModelMismatchError(GridIEError):
    """Checkpoint, vocabulary or label alphabet does not fit the request."""
    pass


class TrainingDivergedError(GridIEError):
    """Loss became NaN or infinite during training."""
    pass


class UnsupportedMetricError(InputValidationError):
    """Requested scorer/feature combination is not defined."""
    pass


class SentenceTooLongError(InputValidationError):
    """Sentence has more tokens than the model has positions."""

    def __init__(self, tokens: int, max_len: int):
        self.tokens = tokens
        self.max_len = max_len
        super().__init__(f"Sentence of {tokens} tokens exceeds max_len={max_len}")
