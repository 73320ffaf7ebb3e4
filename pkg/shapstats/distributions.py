import enum
import functools
import math
from typing import Sequence, Tuple

import numpy as np
from scipy import optimize, special

from .errors import InvalidParameter

"""
CDFs and survival functions for every distribution the tests need.

normal/t/F/chi-square delegate to the incomplete beta/gamma kernels in
scipy.special. The studentized range has no such kernel, so its CDF is the
double integral

    P(Q <= q) = int_0^inf f_S(s) * W(q s) ds
    W(w)      = k * int phi(z) * (Phi(z) - Phi(z - w))^(k - 1) dz

with S = sqrt(chi2_df / df), evaluated by composite Gauss-Legendre quadrature.
"""


class Distribution(enum.Enum):
    NORMAL = "normal"
    T = "t"
    F = "f"
    CHI_SQUARE = "chi_square"
    STUDENTIZED_RANGE = "studentized_range"


GAUSS_NODES = 64
_Z_LIMIT = 8.5
_Z_PANELS = 8
_S_PANELS = 16
_S_TAIL = 1e-14


def _positive(name: str, value: float) -> float:
    if not (value > 0 and math.isfinite(value)):
        raise InvalidParameter(f"{name} must be positive and finite, got {value}")
    return float(value)


def normal_cdf(x: float, mu: float = 0.0, sigma: float = 1.0) -> float:
    _positive("sigma", sigma)
    return float(special.ndtr((x - mu) / sigma))


def normal_sf(x: float) -> float:
    return float(special.ndtr(-x))


def t_cdf(x: float, df: float) -> float:
    return float(special.stdtr(_positive("df", df), x))


def t_two_sided_p(t: float, df: float) -> float:
    if math.isnan(t):
        return 1.0
    return min(1.0, 2.0 * float(special.stdtr(_positive("df", df), -abs(t))))


def f_cdf(x: float, dfn: float, dfd: float) -> float:
    if x <= 0:
        return 0.0
    return float(special.fdtr(_positive("dfn", dfn), _positive("dfd", dfd), x))


def f_sf(x: float, dfn: float, dfd: float) -> float:
    if x <= 0:
        return 1.0
    return float(special.fdtrc(_positive("dfn", dfn), _positive("dfd", dfd), x))


def chi2_cdf(x: float, df: float) -> float:
    if x <= 0:
        return 0.0
    return float(special.chdtr(_positive("df", df), x))


def chi2_sf(x: float, df: float) -> float:
    if x <= 0:
        return 1.0
    return float(special.chdtrc(_positive("df", df), x))


@functools.lru_cache(maxsize=None)
def _legendre(nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(nodes)


def _panels(
    lo: float, hi: float, panels: int, nodes: int
) -> Tuple[np.ndarray, np.ndarray]:
    base_x, base_w = _legendre(nodes)
    edges = np.linspace(lo, hi, panels + 1)
    half = np.diff(edges) / 2.0
    mid = (edges[:-1] + edges[1:]) / 2.0
    xs = (mid[:, None] + half[:, None] * base_x[None, :]).ravel()
    ws = (half[:, None] * base_w[None, :]).ravel()
    return xs, ws


def _range_cdf(w: np.ndarray, k: int, nodes: int) -> np.ndarray:
    """P(range of k iid standard normals <= w), vectorized over w."""
    z, zw = _panels(-_Z_LIMIT, _Z_LIMIT, _Z_PANELS, nodes)
    inner = special.ndtr(z[None, :]) - special.ndtr(z[None, :] - w[:, None])
    dens = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    vals = k * (dens[None, :] * np.power(np.clip(inner, 0.0, 1.0), k - 1)) @ zw
    return np.clip(np.where(w > 0, vals, 0.0), 0.0, 1.0)


def studentized_range_cdf(
    q: float, k: int, df: float, nodes: int = GAUSS_NODES
) -> float:
    if k < 2 or int(k) != k:
        raise InvalidParameter(f"k must be an integer >= 2, got {k}")
    _positive("df", df)
    if q <= 0:
        return 0.0
    s_lo = math.sqrt(float(special.chdtri(df, 1.0 - _S_TAIL)) / df)
    s_hi = math.sqrt(float(special.chdtri(df, _S_TAIL)) / df)
    s, sw = _panels(s_lo, s_hi, _S_PANELS, nodes)
    log_dens = (
        (df / 2.0) * math.log(df)
        - special.gammaln(df / 2.0)
        - (df / 2.0 - 1.0) * math.log(2.0)
        + (df - 1.0) * np.log(s)
        - df * s * s / 2.0
    )
    total = float(np.exp(log_dens) @ (sw * _range_cdf(q * s, int(k), nodes)))
    return min(1.0, max(0.0, total))


def studentized_range_sf(q: float, k: int, df: float) -> float:
    return min(1.0, max(0.0, 1.0 - studentized_range_cdf(q, k, df)))


def studentized_range_ppf(p: float, k: int, df: float) -> float:
    if not 0.0 < p < 1.0:
        raise InvalidParameter(f"p must be in (0, 1), got {p}")
    hi = 10.0
    while studentized_range_cdf(hi, k, df) < p:
        hi *= 2.0
        if hi > 1e4:
            raise InvalidParameter(f"no quantile for p={p}, k={k}, df={df}")
    return float(
        optimize.brentq(
            lambda q: studentized_range_cdf(q, k, df) - p, 0.0, hi, xtol=1e-9
        )
    )


def _arity(dist: Distribution, params: Sequence[float], n: int) -> None:
    if len(params) != n:
        raise InvalidParameter(
            f"{dist.value} takes {n} parameter(s), got {len(params)}"
        )


def dist_cdf(dist: Distribution, params: Sequence[float], x: float) -> float:
    match dist:
        case Distribution.NORMAL:
            _arity(dist, params, 2)
            return normal_cdf(x, params[0], params[1])
        case Distribution.T:
            _arity(dist, params, 1)
            return t_cdf(x, params[0])
        case Distribution.F:
            _arity(dist, params, 2)
            return f_cdf(x, params[0], params[1])
        case Distribution.CHI_SQUARE:
            _arity(dist, params, 1)
            return chi2_cdf(x, params[0])
        case Distribution.STUDENTIZED_RANGE:
            _arity(dist, params, 2)
            if params[0] != int(params[0]):
                raise InvalidParameter(f"k must be an integer, got {params[0]}")
            return studentized_range_cdf(x, int(params[0]), params[1])
    raise InvalidParameter(dist)
