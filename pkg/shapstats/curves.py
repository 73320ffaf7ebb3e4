from __future__ import annotations

import dataclasses
import enum
import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import special

from . import distributions, levmar
from .errors import CurveFitError, StatsError

"""
Linear, quadratic and sigmoid fits of SHAP value against feature value.

    linear     f(x) = a x + b
    quadratic  f(x) = a x^2 + b x + c
    sigmoid    f(x) = L / (1 + exp(-a (x - x0))) + b

Each family's significance is the two-sided t p-value of its coefficient a.
Among the significant families the one with the lowest Schwarz criterion
n ln(SSE/n) + k ln n wins, which is the lowest RMSE charged for its k
coefficients.
"""

logger = logging.getLogger(__name__)

RMSE_TIE = 1e-12
# relative SSE below which a fit counts as exact
_EXACT_FIT = 1e-20
# |a| below this fraction of its natural scale is a zero effect on exact fits
_ZERO_EFFECT = 1e-8
# a sigmoid taller than this multiple of the response range is a disguised line
SIGMOID_SPAN = 2.0


class FitFamily(enum.Enum):
    LINEAR = "linear"
    QUADRATIC = "quadratic"
    SIGMOID = "sigmoid"

    @property
    def order(self) -> int:
        return list(FitFamily).index(self)


_COEFFICIENTS = {
    FitFamily.LINEAR: ("a", "b"),
    FitFamily.QUADRATIC: ("a", "b", "c"),
    FitFamily.SIGMOID: ("L", "a", "x0", "b"),
}


@dataclasses.dataclass(frozen=True)
class FitResult:
    family: FitFamily
    coefficients: Dict[str, float]
    p_value_a: Optional[float]
    rmse: float
    converged: bool
    n_points: int
    se_a: Optional[float] = None
    degenerate: bool = False
    reason: str = ""

    def __post_init__(self) -> None:
        assert self.rmse >= 0 or math.isnan(self.rmse), self
        assert not self.converged or self.p_value_a is not None, self

    def significant(self, alpha: float) -> bool:
        return (
            self.converged and self.p_value_a is not None and self.p_value_a < alpha
        )

    @property
    def a(self) -> float:
        return self.coefficients["a"]


@dataclasses.dataclass(frozen=True)
class FitSelection:
    significant_fits: List[FitResult]
    best: Optional[FitResult]
    none_significant: bool
    fits: List[FitResult]


def _arrays(
    x: Sequence[float], y: Sequence[float], min_n: int, family: FitFamily
) -> Tuple[np.ndarray, np.ndarray]:
    xa = np.asarray(x, dtype=float).ravel()
    ya = np.asarray(y, dtype=float).ravel()
    if len(xa) != len(ya):
        raise CurveFitError(f"x has {len(xa)} points, y has {len(ya)}")
    if len(xa) < min_n:
        raise CurveFitError(
            f"{family.value} fit needs at least {min_n} points, got {len(xa)}"
        )
    if np.ptp(xa) == 0:
        raise CurveFitError(f"{family.value} fit on constant x")
    return xa, ya


def _rmse(residuals: np.ndarray) -> float:
    return math.sqrt(float(residuals @ residuals) / len(residuals))


def coefficient_p_value(
    a: float, se_a: float, df: float, sse: float, sst: float, a_scale: float
) -> Tuple[float, bool]:
    """Two-sided p of H0: a = 0, with the zero-residual rule.

    Returns (p, degenerate). An exact fit gives p=0 for a nonzero a and p=1
    for a numerically zero a; a flat response is always p=1.
    """
    if sst == 0.0:
        return 1.0, True
    if sse <= _EXACT_FIT * sst or not (se_a > 0 and math.isfinite(se_a)):
        if abs(a) <= _ZERO_EFFECT * a_scale:
            return 1.0, True
        return 0.0, True
    return distributions.t_two_sided_p(a / se_a, df), False


def _ols(
    design: np.ndarray, y: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    beta, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < design.shape[1]:
        raise CurveFitError("rank-deficient design")
    residuals = y - design @ beta
    cov_unscaled = np.linalg.inv(design.T @ design)
    return beta, residuals, cov_unscaled


def fit_linear(x: Sequence[float], y: Sequence[float]) -> FitResult:
    xa, ya = _arrays(x, y, 3, FitFamily.LINEAR)
    n = len(xa)
    centre, spread = float(xa.mean()), float(xa.std())
    u = (xa - centre) / spread
    design = np.column_stack([u, np.ones(n)])
    (beta_u, intercept_u), residuals, cov = _ols(design, ya)

    a = float(beta_u) / spread
    b = float(intercept_u) - a * centre
    sse = float(residuals @ residuals)
    sst = float(np.sum((ya - ya.mean()) ** 2))
    df = float(n - 2)
    se_a = math.sqrt(sse / df * cov[0, 0]) / spread
    a_scale = math.sqrt(sst / float(np.sum((xa - centre) ** 2)))
    if sst == 0.0:
        a, b = 0.0, float(ya.mean())
    p, degenerate = coefficient_p_value(a, se_a, df, sse, sst, a_scale)
    return FitResult(
        family=FitFamily.LINEAR,
        coefficients={"a": a, "b": b},
        p_value_a=p,
        rmse=_rmse(residuals),
        converged=True,
        n_points=n,
        se_a=se_a,
        degenerate=degenerate,
    )


def fit_quadratic(x: Sequence[float], y: Sequence[float]) -> FitResult:
    xa, ya = _arrays(x, y, 4, FitFamily.QUADRATIC)
    if len(np.unique(xa)) < 3:
        raise CurveFitError("quadratic fit needs at least 3 distinct x values")
    n = len(xa)
    m, s = float(xa.mean()), float(xa.std())
    u = (xa - m) / s
    design = np.column_stack([u * u, u, np.ones(n)])
    (alpha, beta, gamma), residuals, cov = _ols(design, ya)

    # back to the raw x scale: a x^2 + b x + c with x = m + s u
    a = float(alpha) / s**2
    b = float(beta) / s - 2.0 * float(alpha) * m / s**2
    c = float(alpha) * m**2 / s**2 - float(beta) * m / s + float(gamma)
    sse = float(residuals @ residuals)
    sst = float(np.sum((ya - ya.mean()) ** 2))
    df = float(n - 3)
    se_a = math.sqrt(sse / df * cov[0, 0]) / s**2
    u2 = u * u
    a_scale = math.sqrt(sst / float(np.sum((u2 - u2.mean()) ** 2))) / s**2
    if sst == 0.0:
        a, b, c = 0.0, 0.0, float(ya.mean())
    p, degenerate = coefficient_p_value(a, se_a, df, sse, sst, a_scale)
    return FitResult(
        family=FitFamily.QUADRATIC,
        coefficients={"a": a, "b": b, "c": c},
        p_value_a=p,
        rmse=_rmse(residuals),
        converged=True,
        n_points=n,
        se_a=se_a,
        degenerate=degenerate,
    )


def sigmoid(params: Sequence[float], x: np.ndarray) -> np.ndarray:
    big_l, a, x0, b = params
    return big_l * special.expit(a * (x - x0)) + b


def sigmoid_jacobian(params: Sequence[float], x: np.ndarray) -> np.ndarray:
    """Columns d f / d(L, a, x0, b)."""
    big_l, a, x0, _ = params
    s = special.expit(a * (x - x0))
    ds = s * (1.0 - s)
    return np.column_stack(
        [s, big_l * ds * (x - x0), -big_l * ds * a, np.ones_like(x)]
    )


def _canonical(params: np.ndarray) -> np.ndarray:
    """(L, a, x0, b) and (-L, -a, x0, b + L) are the same curve; keep a >= 0."""
    big_l, a, x0, b = params
    if a < 0:
        return np.array([-big_l, -a, x0, b + big_l])
    return params


def _unidentified(params: np.ndarray, x: np.ndarray, y: np.ndarray) -> str:
    """Why the fitted curve cannot be told apart from a simpler one, or "".

    A midpoint outside the data leaves only one bend visible, and a height
    well beyond the response range means the data see the straight middle.
    """
    big_l, _, x0, _ = params
    if not float(x.min()) <= x0 <= float(x.max()):
        return f"sigmoid midpoint {x0:g} lies outside the observed x range"
    if abs(big_l) > SIGMOID_SPAN * float(np.ptp(y)):
        return (
            f"sigmoid height {big_l:g} exceeds {SIGMOID_SPAN:g}x the response "
            "range, so its curvature is not identifiable"
        )
    return ""


def fit_sigmoid(x: Sequence[float], y: Sequence[float]) -> FitResult:
    xa, ya = _arrays(x, y, 5, FitFamily.SIGMOID)
    n = len(xa)
    sst = float(np.sum((ya - ya.mean()) ** 2))
    names = _COEFFICIENTS[FitFamily.SIGMOID]
    if sst == 0.0:
        coefficients = dict(zip(names, (0.0, 0.0, float(np.median(xa)), float(ya[0]))))
        return FitResult(
            family=FitFamily.SIGMOID,
            coefficients=coefficients,
            p_value_a=None,
            rmse=0.0,
            converged=False,
            n_points=n,
            degenerate=True,
            reason="flat response, a is unidentifiable",
        )

    a0 = 4.0 / float(np.ptp(xa))
    base = np.array([float(np.ptp(ya)), a0, float(np.median(xa)), float(ya.min())])
    best: Optional[levmar.LevmarResult] = None
    for start_a in (a0, -a0):
        start = base.copy()
        start[1] = start_a
        result = levmar.levenberg_marquardt(
            lambda p: ya - sigmoid(p, xa),
            lambda p: sigmoid_jacobian(p, xa),
            start,
        )
        if best is None or (
            result.converged and (not best.converged or result.sse < best.sse)
        ):
            best = result
    assert best is not None

    params = _canonical(best.params)
    residuals = ya - sigmoid(params, xa)
    coefficients = dict(zip(names, (float(v) for v in params)))
    if not best.converged:
        logger.debug("sigmoid fit did not converge: %s", best.reason)
        return FitResult(
            family=FitFamily.SIGMOID,
            coefficients=coefficients,
            p_value_a=None,
            rmse=_rmse(residuals),
            converged=False,
            n_points=n,
            reason=best.reason,
        )

    unidentified = _unidentified(params, xa, ya)
    if unidentified:
        logger.debug("sigmoid fit rejected: %s", unidentified)
        return FitResult(
            family=FitFamily.SIGMOID,
            coefficients=coefficients,
            p_value_a=None,
            rmse=_rmse(residuals),
            converged=False,
            n_points=n,
            reason=unidentified,
        )

    jac = sigmoid_jacobian(params, xa)
    sse = float(residuals @ residuals)
    df = float(n - 4)
    try:
        cov = np.linalg.inv(jac.T @ jac)
    except np.linalg.LinAlgError:
        return FitResult(
            family=FitFamily.SIGMOID,
            coefficients=coefficients,
            p_value_a=None,
            rmse=_rmse(residuals),
            converged=False,
            n_points=n,
            reason="singular jacobian",
        )
    se_a = math.sqrt(max(sse / df * cov[1, 1], 0.0))
    p, degenerate = coefficient_p_value(
        coefficients["a"], se_a, df, sse, sst, a_scale=a0
    )
    return FitResult(
        family=FitFamily.SIGMOID,
        coefficients=coefficients,
        p_value_a=p,
        rmse=_rmse(residuals),
        converged=True,
        n_points=n,
        se_a=se_a,
        degenerate=degenerate,
    )


_FITTERS = {
    FitFamily.LINEAR: fit_linear,
    FitFamily.QUADRATIC: fit_quadratic,
    FitFamily.SIGMOID: fit_sigmoid,
}


def fit_family(family: FitFamily, x: Sequence[float], y: Sequence[float]) -> FitResult:
    return _FITTERS[family](x, y)


def _failed(family: FitFamily, n: int, reason: str) -> FitResult:
    return FitResult(
        family=family,
        coefficients={name: math.nan for name in _COEFFICIENTS[family]},
        p_value_a=None,
        rmse=math.nan,
        converged=False,
        n_points=n,
        reason=reason,
    )


def try_fit_family(
    family: FitFamily, x: Sequence[float], y: Sequence[float]
) -> FitResult:
    """fit_family with precondition failures turned into non-converged fits."""
    try:
        return fit_family(family, x, y)
    except StatsError as e:
        return _failed(family, len(x), str(e))


def schwarz_criterion(fit: FitResult) -> float:
    """n ln(SSE/n) + k ln n, with RMSE floored at RMSE_TIE so exact fits tie."""
    n = fit.n_points
    rmse = max(fit.rmse, RMSE_TIE)
    return n * math.log(rmse * rmse) + len(fit.coefficients) * math.log(n)


def select_best_fit(
    x: Sequence[float], y: Sequence[float], alpha: float
) -> FitSelection:
    fits = [try_fit_family(family, x, y) for family in FitFamily]
    significant = [fit for fit in fits if fit.significant(alpha)]
    best: Optional[FitResult] = None
    for fit in significant:
        # families are visited simplest first, so ties keep the simpler one
        if best is None or schwarz_criterion(fit) < schwarz_criterion(best):
            best = fit
    return FitSelection(
        significant_fits=significant,
        best=best,
        none_significant=best is None,
        fits=fits,
    )


def evaluate_fit(fit: FitResult, x: Sequence[float]) -> np.ndarray:
    xa = np.asarray(x, dtype=float)
    c = fit.coefficients
    match fit.family:
        case FitFamily.LINEAR:
            return c["a"] * xa + c["b"]
        case FitFamily.QUADRATIC:
            return c["a"] * xa * xa + c["b"] * xa + c["c"]
        case FitFamily.SIGMOID:
            return sigmoid((c["L"], c["a"], c["x0"], c["b"]), xa)
    raise LookupError(fit.family)
