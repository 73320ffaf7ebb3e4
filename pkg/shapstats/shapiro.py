import dataclasses
import math
from typing import Sequence

import numpy as np
from scipy import special

from .errors import DegenerateSample, StatsError

"""
Shapiro-Wilk W test using Royston's polynomial approximations for the
coefficients (valid for 3 <= n <= 5000) and his normalizing transformation
of W for the p-value.
"""

MIN_N = 3
MAX_N = 5000

# coefficient polynomials in u = 1/sqrt(n), lowest order first
_C1 = (0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056)
_C2 = (0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633)
# small-sample (n <= 11) transformation, polynomials in n
_G = (-2.273, 0.459)
_C3 = (0.5440, -0.39978, 0.025054, -6.714e-4)
_C4 = (1.3822, -0.77857, 0.062767, -0.0020322)
# large-sample transformation, polynomials in log(n)
_C5 = (-1.5861, -0.31082, -0.083751, 0.0038915)
_C6 = (-0.4803, -0.082676, 0.0030302)


@dataclasses.dataclass(frozen=True)
class NormalityGate:
    w_statistic: float
    p_value: float
    is_normal: bool
    degenerate: bool = False


def _poly(coef: Sequence[float], x: float) -> float:
    return float(np.polynomial.polynomial.polyval(x, coef))


def shapiro_coefficients(n: int) -> np.ndarray:
    """Antisymmetric weights a_1..a_n applied to the ordered sample."""
    if n < MIN_N:
        raise DegenerateSample(f"Shapiro-Wilk needs at least {MIN_N} values, got {n}")
    if n == 3:
        return np.array([-math.sqrt(0.5), 0.0, math.sqrt(0.5)])

    i = np.arange(1, n + 1)
    m = special.ndtri((i - 0.375) / (n + 0.25))
    summ2 = float(m @ m)
    u = 1.0 / math.sqrt(n)

    an = _poly(_C1, u) + m[-1] / math.sqrt(summ2)
    if n > 5:
        an1 = _poly(_C2, u) + m[-2] / math.sqrt(summ2)
        eps = (summ2 - 2 * m[-1] ** 2 - 2 * m[-2] ** 2) / (
            1 - 2 * an**2 - 2 * an1**2
        )
        a = m / math.sqrt(eps)
        a[-1], a[0] = an, -an
        a[-2], a[1] = an1, -an1
    else:
        eps = (summ2 - 2 * m[-1] ** 2) / (1 - 2 * an**2)
        a = m / math.sqrt(eps)
        a[-1], a[0] = an, -an
    return a


def _p_value(w: float, n: int) -> float:
    if n == 3:
        p = 6.0 / math.pi * (math.asin(math.sqrt(w)) - math.asin(math.sqrt(0.75)))
        return min(1.0, max(0.0, p))

    if w >= 1.0:
        return 1.0
    y = math.log(1.0 - w)
    if n <= 11:
        gamma = _poly(_G, n)
        if y >= gamma:
            return 0.0
        y = -math.log(gamma - y)
        mu = _poly(_C3, n)
        sigma = math.exp(_poly(_C4, n))
    else:
        ln = math.log(n)
        mu = _poly(_C5, ln)
        sigma = math.exp(_poly(_C6, ln))
    return float(special.ndtr(-(y - mu) / sigma))


def shapiro_wilk(sample: Sequence[float], alpha: float = 0.05) -> NormalityGate:
    x = np.sort(np.asarray(sample, dtype=float))
    n = len(x)
    if n < MIN_N or n > MAX_N:
        raise DegenerateSample(
            f"Shapiro-Wilk is defined for {MIN_N} <= n <= {MAX_N}, got n={n}"
        )
    ssq = float(np.sum((x - x.mean()) ** 2))
    if ssq <= 0.0 or x[-1] == x[0]:
        raise DegenerateSample("Shapiro-Wilk on a constant sample")

    a = shapiro_coefficients(n)
    w = min(1.0, float(a @ x) ** 2 / ssq)
    p = _p_value(w, n)
    return NormalityGate(w_statistic=w, p_value=p, is_normal=p > alpha)


def normality_gate(sample: Sequence[float], alpha: float) -> NormalityGate:
    try:
        return shapiro_wilk(sample, alpha)
    except StatsError:
        return NormalityGate(
            w_statistic=math.nan, p_value=0.0, is_normal=False, degenerate=True
        )
