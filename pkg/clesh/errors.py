class CleshError(Exception):
    pass


class DatasetError(CleshError, ValueError):
    """Invalid or misaligned feature/SHAP input."""


class ConfigError(CleshError, ValueError):
    pass


class InteractionSkipped(CleshError):
    """An interaction that cannot be analyzed; reported as a caveat."""


class OutputError(CleshError):
    pass
