import dataclasses
from typing import Callable

import numpy as np

ResidualFn = Callable[[np.ndarray], np.ndarray]
JacobianFn = Callable[[np.ndarray], np.ndarray]

MAX_ITERATIONS = 200
SSE_RTOL = 1e-10
_LAMBDA0 = 1e-3
_LAMBDA_MAX = 1e16
_COND_MAX = 1e14


@dataclasses.dataclass
class LevmarResult:
    params: np.ndarray
    sse: float
    iterations: int
    converged: bool
    jtj: np.ndarray
    reason: str


def _sse(residual: ResidualFn, params: np.ndarray) -> float:
    r = residual(params)
    if not np.all(np.isfinite(r)):
        return np.inf
    return float(r @ r)


def levenberg_marquardt(
    residual: ResidualFn,
    jacobian: JacobianFn,
    start: np.ndarray,
    max_iterations: int = MAX_ITERATIONS,
    rtol: float = SSE_RTOL,
) -> LevmarResult:
    """Minimize sum(residual(p)**2) from `start`.

    residual(p) = y - f(p) and jacobian(p) = df/dp, so the Gauss-Newton step
    solves (J'J + lambda diag(J'J)) step = J'r. Stops when an accepted step
    reduces the SSE by a relative amount below `rtol`, or when no damping
    makes progress. Not converged after `max_iterations` or when J'J is
    singular at the solution.
    """
    params = np.asarray(start, dtype=float).copy()
    sse = _sse(residual, params)
    if not np.isfinite(sse):
        return LevmarResult(params, sse, 0, False, np.eye(len(params)), "bad start")
    lam = _LAMBDA0
    reason = "max iterations"
    converged = False
    iterations = 0

    for iterations in range(1, max_iterations + 1):
        jac = jacobian(params)
        jtj = jac.T @ jac
        grad = jac.T @ residual(params)
        scale = np.maximum(np.diag(jtj), 1e-300)

        improved = False
        while lam <= _LAMBDA_MAX:
            try:
                step = np.linalg.solve(jtj + lam * np.diag(scale), grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            candidate = params + step
            new_sse = _sse(residual, candidate)
            if new_sse < sse:
                improved = True
                break
            lam *= 10.0

        if not improved:
            converged, reason = True, "no further reduction"
            break

        reduction = (sse - new_sse) / max(sse, 1e-300)
        params, sse = candidate, new_sse
        lam = max(lam / 10.0, 1e-12)
        if reduction < rtol or sse == 0.0:
            converged, reason = True, "sse tolerance"
            break

    jac = jacobian(params)
    jtj = jac.T @ jac
    if converged and (
        not np.all(np.isfinite(jtj)) or np.linalg.cond(jtj) > _COND_MAX
    ):
        converged, reason = False, "singular jacobian"
    return LevmarResult(params, sse, iterations, converged, jtj, reason)
