"""Exception hierarchy.

``DataError`` covers everything caused by the input data or files; the CLI maps
it to exit code 2. Programming errors (bad arguments) stay ``ValueError``.
"""


class NilmGapError(Exception):
    pass


class DataError(NilmGapError):
    pass


class EmptySeries(DataError):
    pass


class UnorderedInput(DataError):
    pass


class NoOverlap(DataError):
    pass


class SplitTooSmall(DataError):
    pass


class DescriptorError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DuplicateName(DescriptorError):
    pass


class MissingKey(DescriptorError):
    def __init__(self, key):
        self.key = key
        super().__init__(f"missing mandatory key {key!r}")


class CsvParseError(DataError):
    def __init__(self, path, row, message):
        self.path = path
        self.row = row
        super().__init__(f"{path}: row {row}: {message}")


class InfeasibleNoise(DataError):
    pass


class IncompatiblePowerTypes(DataError):
    pass


class DegenerateAggregate(DataError):
    pass


class GridMismatch(DataError):
    pass


class DegenerateTruth(DataError):
    pass


class SearchSpaceTooLarge(DataError):
    pass


class ShapeError(NilmGapError, ValueError):
    pass


class NonFiniteError(NilmGapError, FloatingPointError):
    pass


class TrainingDiverged(NilmGapError):
    pass


class WindowTooLong(DataError):
    pass


class UnknownAppliance(DataError, KeyError):
    pass


class UnpairedScenario(DataError):
    pass
