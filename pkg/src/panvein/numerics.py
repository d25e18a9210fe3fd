"""Small dense linear algebra and ODE/quadrature kernels.

Everything in this module is deliberately boring: 2x2 / 4x4 matrices,
fixed-step RK4, composite trapezoid, safeguarded scalar root finding and a
damped Newton with finite-difference Jacobians.  All functions are pure and
operate on plain floats / small NumPy arrays, so they are safe to call from
any thread.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    BracketError,
    IntegrationFailureError,
    InvalidArgumentError,
    NonConvergenceError,
)

__all__ = [
    "Grid",
    "mat_exp",
    "rk4_step",
    "quad_trapz",
    "find_root_bracketed",
    "newton_nd",
    "spectral_norm",
    "exp_convolve",
]

# All tolerances are explicit parameters with stated defaults.
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 200


@dataclass(frozen=True)
class Grid:
    """Uniform spatial grid 0 = x_0 < ... < x_N = L (cm)."""

    nodes: np.ndarray  # shape (N+1,)
    h: float           # spacing, = L / N exactly

    @classmethod
    def uniform(cls, length: float, n_nodes: int) -> "Grid":
        if not np.isfinite(length) or length <= 0.0:
            raise InvalidArgumentError(f"grid length must be positive, got {length}")
        if n_nodes < 3:
            raise InvalidArgumentError(f"need at least 3 nodes (N >= 2), got {n_nodes}")
        nodes = np.linspace(0.0, length, n_nodes)
        return cls(nodes=nodes, h=length / (n_nodes - 1))

    @property
    def n_cells(self) -> int:
        return len(self.nodes) - 1

    @property
    def length(self) -> float:
        return float(self.nodes[-1])

    def refined(self, factor: int = 2) -> "Grid":
        return Grid.uniform(self.length, self.n_cells * factor + 1)


def mat_exp(a: np.ndarray, t: float = 1.0) -> np.ndarray:
    """exp(a*t) by scaling-and-squaring with a 13-term truncated series.

    Only meant for the small (2x2, 4x4) well-scaled matrices of this model;
    eigendecomposition is avoided because the Jacobians can come arbitrarily
    close to defective near parameter-regime boundaries.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidArgumentError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)) or not np.isfinite(t):
        raise InvalidArgumentError("mat_exp requires finite matrix entries and time")
    m = a * t
    norm = np.linalg.norm(m, np.inf)
    if norm == 0.0:
        return np.eye(a.shape[0])
    # scale so the series argument has norm <= 0.5: 13 terms then leave a
    # remainder below 1e-16 relative
    n_squarings = max(0, int(np.ceil(np.log2(norm / 0.5))))
    ms = m / (2.0 ** n_squarings)
    result = np.eye(a.shape[0])
    term = np.eye(a.shape[0])
    for k in range(1, 14):
        term = term @ ms / k
        result = result + term
    for _ in range(n_squarings):
        result = result @ result
    return result


def rk4_step(f: Callable[[float, np.ndarray], np.ndarray], x: float,
             u: np.ndarray, h: float) -> np.ndarray:
    """One classical 4th-order Runge-Kutta step of size h; local error O(h^5)."""
    if h <= 0.0:
        raise InvalidArgumentError(f"step size must be positive, got {h}")
    u = np.asarray(u, dtype=float)
    k1 = np.asarray(f(x, u), dtype=float)
    k2 = np.asarray(f(x + 0.5 * h, u + 0.5 * h * k1), dtype=float)
    k3 = np.asarray(f(x + 0.5 * h, u + 0.5 * h * k2), dtype=float)
    k4 = np.asarray(f(x + h, u + h * k3), dtype=float)
    out = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise IntegrationFailureError(
            f"non-finite state produced by RK4 step at x = {x!r}", location=x)
    return out


def quad_trapz(values: Sequence[float] | np.ndarray, h: float) -> float:
    """Composite trapezoid on uniformly spaced samples; 2nd-order accurate."""
    values = np.asarray(values, dtype=float)
    if values.shape[0] < 2:
        raise InvalidArgumentError("quad_trapz needs at least 2 samples")
    return float(h * (0.5 * values[0] + values[1:-1].sum() + 0.5 * values[-1]))


def find_root_bracketed(g: Callable[[float], float], lo: float, hi: float,
                        tol: float = DEFAULT_TOL,
                        max_iter: int = DEFAULT_MAX_ITER) -> float:
    """Root of g on [lo, hi] with a guaranteed sign change.

    Secant acceleration inside a shrinking bracket; falls back to plain
    bisection whenever the secant step leaves the bracket, so convergence is
    guaranteed.  Stops when |g| <= tol or the bracket width is <= tol.
    """
    g_lo, g_hi = g(lo), g(hi)
    if g_lo == 0.0:
        return lo
    if g_hi == 0.0:
        return hi
    if g_lo * g_hi > 0.0:
        raise BracketError(f"no sign change on [{lo}, {hi}]: g = ({g_lo}, {g_hi})")
    for _ in range(max(max_iter, 200)):
        width_before = hi - lo
        if width_before <= tol:
            break
        # secant candidate, clipped into the open bracket
        denom = g_hi - g_lo
        if denom != 0.0:
            mid = hi - g_hi * (hi - lo) / denom
        else:
            mid = 0.5 * (lo + hi)
        if not (lo < mid < hi):
            mid = 0.5 * (lo + hi)
        g_mid = g(mid)
        if abs(g_mid) <= tol:
            return mid
        if g_lo * g_mid < 0.0:
            hi, g_hi = mid, g_mid
        else:
            lo, g_lo = mid, g_mid
        # secant can park on one endpoint; force a bisection whenever the
        # bracket failed to shrink meaningfully so convergence is guaranteed
        if (hi - lo) > 0.75 * width_before:
            mid = 0.5 * (lo + hi)
            g_mid = g(mid)
            if abs(g_mid) <= tol:
                return mid
            if g_lo * g_mid < 0.0:
                hi, g_hi = mid, g_mid
            else:
                lo, g_lo = mid, g_mid
    return 0.5 * (lo + hi)


def _fd_jacobian(residual: Callable[[np.ndarray], np.ndarray],
                 x: np.ndarray, r0: np.ndarray) -> np.ndarray:
    n = x.size
    jac = np.empty((r0.size, n))
    for i in range(n):
        step = 1e-6 * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += step
        xm[i] -= step
        jac[:, i] = (np.asarray(residual(xp)) - np.asarray(residual(xm))) / (2.0 * step)
    return jac


def newton_nd(residual: Callable[[np.ndarray], np.ndarray], x0: np.ndarray,
              tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
              callback: Callable[[int, np.ndarray, float], None] | None = None
              ) -> np.ndarray:
    """Damped Newton for R(x) = 0 with central finite-difference Jacobians.

    The line search halves the step up to 20 times until the residual
    infinity-norm decreases; FD steps are 1e-6 * max(1, |x_i|) per component,
    which tolerates user-supplied sigma profiles with kinks.
    """
    x = np.array(x0, dtype=float)
    r = np.asarray(residual(x), dtype=float)
    if not np.all(np.isfinite(r)):
        raise InvalidArgumentError("residual is non-finite at the initial guess")
    norm = np.linalg.norm(r, np.inf)
    for iteration in range(max_iter):
        if callback is not None:
            callback(iteration, x, norm)
        if norm <= tol:
            return x
        jac = _fd_jacobian(residual, x, r)
        try:
            delta = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            delta = -np.linalg.lstsq(jac, r, rcond=None)[0]
        lam = 1.0
        for _ in range(20):
            x_trial = x + lam * delta
            r_trial = np.asarray(residual(x_trial), dtype=float)
            norm_trial = np.linalg.norm(r_trial, np.inf) if np.all(np.isfinite(r_trial)) else np.inf
            if norm_trial < norm:
                break
            lam *= 0.5
        else:
            raise NonConvergenceError(
                f"Newton line search stalled at |R| = {norm:.3e}",
                residual_norm=norm, iterations=iteration)
        x, r, norm = x_trial, r_trial, norm_trial
    if norm <= tol:
        return x
    raise NonConvergenceError(
        f"Newton did not reach |R| <= {tol:.1e} in {max_iter} iterations "
        f"(last |R| = {norm:.3e})", residual_norm=norm, iterations=max_iter)


def spectral_norm(a: np.ndarray) -> float:
    """Matrix 2-norm (largest singular value)."""
    return float(np.linalg.norm(np.asarray(a, dtype=float), 2))


def exp_convolve(b: np.ndarray, h: float, g: np.ndarray,
                 exact_cells: bool = False) -> np.ndarray:
    """Running convolution C(x_i) = int_0^{x_i} exp(b (x_i - y)) g(y) dy.

    ``g`` holds node samples with shape (n_nodes, dim).  The recurrence
    C_{i+1} = E C_i + (cell integral) costs O(n) matrix-vector products with
    E = exp(b h).  By default the cell integral is the composite-trapezoid
    one, h/2 (E g_i + g_{i+1}), which makes the result identical to applying
    the trapezoid rule to each partial integral.  With ``exact_cells`` the
    piecewise-linear interpolant of g is convolved exactly instead (needed
    when b has modes that decay within a single cell).
    """
    g = np.asarray(g, dtype=float)
    n, dim = g.shape
    e_h = mat_exp(b, h)
    if exact_cells:
        bh = b * h
        if np.linalg.norm(bh, np.inf) < 1e-4:
            # series to avoid inverting a near-singular small-h product
            q1 = h * (np.eye(dim) + bh / 2.0 + bh @ bh / 6.0 + bh @ bh @ bh / 24.0)
            q2 = h * h * (np.eye(dim) / 2.0 + bh / 3.0 + bh @ bh / 8.0 + bh @ bh @ bh / 30.0)
        else:
            b_inv = np.linalg.inv(b)
            q1 = b_inv @ (e_h - np.eye(dim))
            q2 = b_inv @ b_inv @ (e_h @ (bh - np.eye(dim)) + np.eye(dim))
        w_old = q2 / h               # weight on g_i
        w_new = q1 - q2 / h          # weight on g_{i+1}
    else:
        w_new = 0.5 * h * np.eye(dim)
        w_old = 0.5 * h * e_h
    out = np.zeros_like(g)
    c = np.zeros(dim)
    for i in range(n - 1):
        c = e_h @ c + w_old @ g[i] + w_new @ g[i + 1]
        out[i + 1] = c
    return out
