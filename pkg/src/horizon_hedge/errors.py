"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class HedgeError(Exception):
    """Base class for every error raised by horizon_hedge."""


# -- ingest -----------------------------------------------------------------


class MissingFile(HedgeError, FileNotFoundError):
    pass


class ParseError(HedgeError, ValueError):
    def __init__(self, row: int, detail: str):
        self.row = row
        super().__init__(f"row {row}: {detail}")


class NonPositivePrice(HedgeError, ValueError):
    def __init__(self, row: int, price: float):
        self.row = row
        self.price = price
        super().__init__(f"row {row}: non-positive price {price!r}")


class DuplicateDate(HedgeError, ValueError):
    def __init__(self, date):
        self.date = date
        super().__init__(f"duplicate date {date}")


class TooShort(HedgeError, ValueError):
    pass


class EmptyIntersection(HedgeError, ValueError):
    pass


class SplitOutOfRange(HedgeError, ValueError):
    pass


class FrequencyMismatch(HedgeError, ValueError):
    pass


# -- diagnostics / hedging ----------------------------------------------------


class DegenerateVariance(HedgeError, ValueError):
    pass


class SingularRegression(HedgeError, ValueError):
    pass


class DateMismatch(HedgeError, ValueError):
    pass


class NoPrecedingBaseDate(HedgeError, ValueError):
    pass


# -- GARCH --------------------------------------------------------------------


class InvalidParams(HedgeError, ValueError):
    pass


class NonPDMatrix(HedgeError, ValueError):
    pass


class DegenerateData(HedgeError, ValueError):
    pass


class NonConvergence(HedgeError, RuntimeError):
    """Raised only on request; estimation normally flags and returns."""


# -- scaling ------------------------------------------------------------------


class NoRealRoot(HedgeError, ValueError):
    def __init__(self, r: float, a: float, b: float, h: int):
        self.r, self.a, self.b, self.h = r, a, b, h
        super().__init__(
            f"aggregation quadratic has no real root at h={h}: "
            f"|r|={abs(r):.6g} > 1/2 (a={a:.6g}, b={b:.6g})"
        )


class InvalidKappa(HedgeError, ValueError):
    pass


# -- effectiveness ------------------------------------------------------------


class TooShortForTail(HedgeError, ValueError):
    pass


class ZeroBaselineRisk(HedgeError, ValueError):
    pass


class TooFewBlocks(HedgeError, ValueError):
    pass


# -- pipeline -----------------------------------------------------------------


class ConfigError(HedgeError, ValueError):
    pass


class PipelineError(HedgeError):
    """Wraps a module error with the pipeline coordinates where it happened."""

    def __init__(self, stage: str, cause: BaseException, asset: str | None = None,
                 horizon: int | None = None):
        self.stage = stage
        self.asset = asset
        self.horizon = horizon
        self.cause = cause
        where = [f"stage={stage}"]
        if asset is not None:
            where.append(f"asset={asset}")
        if horizon is not None:
            where.append(f"h={horizon}")
        super().__init__(f"[{' '.join(where)}] {type(cause).__name__}: {cause}")
