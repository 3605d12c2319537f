"""Exception types raised across the package."""


class FimcharError(Exception):
    """Base class for all package errors."""


class ParseError(FimcharError, ValueError):
    def __init__(self, message: str, lineno: int):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class EmptyDatabaseError(FimcharError, ValueError):
    pass


class CapacityError(FimcharError, RuntimeError):
    """The frequent-itemset collection outgrew the configured cap.

    ``level`` is the support percentage being mined when the run was aborted,
    if the caller knows it.
    """

    def __init__(self, minsup_count: int, cap: int, level: float | None = None):
        self.minsup_count = minsup_count
        self.cap = cap
        self.level = level
        where = f"support level {level:g}% " if level is not None else ""
        super().__init__(
            f"more than {cap} frequent itemsets at {where}(minsup_count={minsup_count})"
        )

    def at_level(self, level: float) -> "CapacityError":
        return CapacityError(self.minsup_count, self.cap, level)


class UndefinedMetricError(FimcharError, ValueError):
    pass
