"""Exception types raised across the package."""


class TrainCarbonError(Exception):
    """Base class for all package errors."""


class UnparseableQuantity(TrainCarbonError, ValueError):
    """A free-text numeric field did not match any quantity grammar rule."""


class UnknownFamily(TrainCarbonError, KeyError):
    pass


class MissingDisclosure(TrainCarbonError, ValueError):
    pass


class InvalidMoEGeometry(TrainCarbonError, ValueError):
    pass


class PatchMismatch(TrainCarbonError, ValueError):
    pass


class EmptyCategory(TrainCarbonError, LookupError):
    pass


class InsufficientMetadata(TrainCarbonError, ValueError):
    """Neither runtime nor FLOPs can be resolved for a Tier-1 record."""


class DivisionByZeroFlops(TrainCarbonError, ZeroDivisionError):
    pass


class SingularDesign(TrainCarbonError, ValueError):
    pass


class InsufficientRows(TrainCarbonError, ValueError):
    pass


class NonpositiveInput(TrainCarbonError, ValueError):
    pass


class SharesNotNormalized(TrainCarbonError, ValueError):
    pass


class YearOutOfRange(TrainCarbonError, ValueError):
    pass


class EmptyAfterTrim(TrainCarbonError, ValueError):
    pass


class InsufficientTier1(TrainCarbonError, ValueError):
    pass


class SchemaError(TrainCarbonError, ValueError):
    """Input file does not match the snapshot schema.

    ``problems`` holds ``(row, column, message)`` triples; ``row`` is 1-based
    over data rows.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        lines = [f"row {r} column {c!r}: {m}" for r, c, m in self.problems]
        super().__init__("; ".join(lines) or "schema error")
