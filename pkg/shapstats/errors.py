class StatsError(ValueError):
    pass


class DegenerateSample(StatsError):
    """Input on which a statistic is undefined (too small, zero variance)."""


class InvalidParameter(StatsError):
    pass


class CurveFitError(StatsError):
    pass
