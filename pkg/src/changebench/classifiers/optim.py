"""Generic unconstrained optimizers used by the neural-network trainers:
BFGS with Armijo backtracking and Levenberg-Marquardt on a residual vector.
Both are usable on arbitrary objectives and are tested standalone."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class OptimResult:
    x: np.ndarray
    fun: float
    iterations: int
    converged: bool
    grad_norm: float = float("nan")
    flag: str | None = None
    accepted_history: list = field(default_factory=list)


def bfgs_minimize(fun, grad, x0, max_iter: int = 200, gtol: float = 1e-8,
                  ftol: float = 0.0, c1: float = 1e-4, shrink: float = 0.5,
                  max_backtracks: int = 40) -> OptimResult:
    """BFGS with inverse-Hessian updates and Armijo backtracking line search.

    Stops on gradient norm below ``gtol``, accepted improvement below ``ftol``
    (if positive), a failed line search, or the iteration cap.
    """
    x = np.asarray(x0, dtype=float).copy()
    n = x.size
    h_inv = np.eye(n)
    g = np.asarray(grad(x), dtype=float)
    f = float(fun(x))
    history = [f]
    converged = False
    flag = None
    it = 0
    for it in range(1, max_iter + 1):
        gnorm = float(np.linalg.norm(g))
        if gnorm < gtol:
            converged = True
            break
        p = -h_inv @ g
        slope = float(g @ p)
        if slope >= 0.0:  # numerical breakdown: reset to steepest descent
            h_inv = np.eye(n)
            p = -g
            slope = -float(g @ g)
        step = 1.0
        f_new = None
        for _ in range(max_backtracks):
            x_new = x + step * p
            f_try = float(fun(x_new))
            if np.isfinite(f_try) and f_try <= f + c1 * step * slope:
                f_new = f_try
                break
            step *= shrink
        if f_new is None:
            flag = "line search failed"
            break
        g_new = np.asarray(grad(x_new), dtype=float)
        s = x_new - x
        yv = g_new - g
        sy = float(s @ yv)
        if sy > 1e-12:
            rho = 1.0 / sy
            outer = np.outer(s, yv)
            h_inv = (np.eye(n) - rho * outer) @ h_inv @ (np.eye(n) - rho * outer.T) \
                + rho * np.outer(s, s)
        improvement = f - f_new
        x, g, f = x_new, g_new, f_new
        history.append(f)
        if ftol > 0.0 and improvement < ftol:
            break
    return OptimResult(x, f, it, converged, float(np.linalg.norm(g)), flag, history)


def levenberg_marquardt(residual, jacobian, x0, lambda0: float = 1e-3,
                        lambda_up: float = 10.0, lambda_down: float = 10.0,
                        max_iter: int = 200, tol: float = 1e-6,
                        max_rejects: int = 20) -> OptimResult:
    """Damped Gauss-Newton on sum-of-squares of ``residual``.

    A step is accepted only if it strictly decreases the SSE (so the accepted
    loss history is monotonically non-increasing); rejection multiplies the
    damping by ``lambda_up``, acceptance divides it by ``lambda_down``. Twenty
    consecutive rejections abort with the best iterate, flagged.
    """
    x = np.asarray(x0, dtype=float).copy()
    r = np.asarray(residual(x), dtype=float)
    sse = float(r @ r)
    lam = lambda0
    history = [sse]
    rejects = 0
    flag = None
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        jac = np.asarray(jacobian(x), dtype=float)
        g = jac.T @ r
        a = jac.T @ jac
        try:
            step = np.linalg.solve(a + lam * np.eye(x.size), -g)
        except np.linalg.LinAlgError:
            lam = min(lam * lambda_up, 1e12)
            rejects += 1
            if rejects >= max_rejects:
                flag = f"{max_rejects} consecutive rejected steps"
                break
            continue
        x_new = x + step
        r_new = np.asarray(residual(x_new), dtype=float)
        sse_new = float(r_new @ r_new)
        if np.isfinite(sse_new) and sse_new < sse:
            improvement = sse - sse_new
            x, r, sse = x_new, r_new, sse_new
            lam = max(lam / lambda_down, 1e-14)
            rejects = 0
            history.append(sse)
            if improvement < tol:
                converged = True
                break
        else:
            lam = min(lam * lambda_up, 1e12)
            rejects += 1
            if rejects >= max_rejects:
                flag = f"{max_rejects} consecutive rejected steps"
                break
    return OptimResult(x, sse, it, converged, float(np.linalg.norm(jacobian(x).T @ r)),
                       flag, history)
