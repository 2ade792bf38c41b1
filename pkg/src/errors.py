"""Exceptions raised across the stein_pairs package.

Every class keeps the offending value in ``value`` so callers (and the CLI)
can report it without parsing the message.
"""
from typing import Any, Optional


class SteinPairsError(Exception):
    def __init__(self, value: Any):
        self.value = value
        super().__init__(value)

    def __str__(self):
        return str(self.value)


class DimensionError(SteinPairsError):
    pass


class RankError(SteinPairsError):
    pass


class LinearDependenceError(SteinPairsError):
    def __init__(self, value: Any, index: int):
        super().__init__(value)
        self.index = index


class ConvergenceError(SteinPairsError):
    def __init__(self, value: Any, iterations: int):
        super().__init__(value)
        self.iterations = iterations


class ParameterError(SteinPairsError):
    pass


class NormalizationError(SteinPairsError):
    pass


class InvalidGramError(SteinPairsError):
    pass


class InconsistentMomentsError(SteinPairsError):
    pass


class NotImplementedDegreeError(SteinPairsError):
    pass


class QueryParseError(SteinPairsError):
    pass


class SizeError(SteinPairsError):
    pass


class ConfigError(SteinPairsError):
    def __init__(self, value: Any, key: Optional[str] = None, line: Optional[int] = None):
        super().__init__(value)
        self.key = key
        self.line = line

    def __str__(self):
        where = f" (line {self.line})" if self.line is not None else ""
        return f"{self.value}{where}"


class ExperimentError(SteinPairsError):
    """Wraps a module error with the experiment that raised it."""

    def __init__(self, experiment: str, cause: Exception):
        super().__init__(f"{experiment}: {cause}")
        self.experiment = experiment
        self.cause = cause
