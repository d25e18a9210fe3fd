"""Steady profiles of the transport model without diffusion (eps = 0).

The boundary value problem on [0, L]

    c G' = G_in - a G I
    c I' = sigma(x) G^2/(b^2+G^2) - d_i I
    G(L) = alpha1 G(0),   I(L) = alpha2 I(0)

is solved two independent ways: by shooting on the initial values (general
sigma), and, for constant sigma, by fixed-point iteration of the
variation-of-constants operator around the homogeneous equilibrium.  The
blood speed enters as an effective length L/c: the equations are integrated
on the physical grid with the right-hand side divided by c.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    DivergenceError,
    IntegrationFailureError,
    NonConvergenceError,
    SingularMatrixError,
)
from .model import (
    EquilibriumReport,
    ModelParams,
    SigmaProfile,
    find_equilibrium,
    nonlinearity_gain,
    sigma_eval,
)
from .numerics import Grid, exp_convolve, newton_nd, quad_trapz, spectral_norm

__all__ = [
    "SteadyProfile",
    "ContractionCertificate",
    "integrate_ivp",
    "solve_shooting",
    "solve_picard",
    "picard_linear_part",
    "compatibility_residuals",
    "contraction_certificate",
    "uniqueness_bound",
]

DEFAULT_NODES = 1501


@dataclass(frozen=True)
class SteadyProfile:
    """Steady spatial profile with boundary residuals and solver diagnostics."""

    grid: Grid
    G: np.ndarray
    I: np.ndarray
    residual_G: float   # |G(L) - alpha1 G(0)|
    residual_I: float   # |I(L) - alpha2 I(0)|
    iterations: int
    method: str

    def values(self) -> np.ndarray:
        """Stacked (n_nodes, 2) array of (G, I) samples."""
        return np.column_stack([self.G, self.I])

    def sup_distance(self, other: "SteadyProfile | np.ndarray") -> float:
        """sup over x of the Euclidean norm of the pointwise difference."""
        o = other.values() if isinstance(other, SteadyProfile) else np.asarray(other)
        d = self.values() - o
        return float(np.max(np.hypot(d[:, 0], d[:, 1])))


@dataclass(frozen=True)
class ContractionCertificate:
    """Hypothesis check for the contraction-mapping existence argument.

    factor = 4 ||xi0||_inf Lbar k (||(D - e^{B Lbar})^{-1}||_2 + 1); the
    certificate is valid iff factor <= 1, and then r = (1 - sqrt(1-factor))/2
    in the conventional printed form.  ``r_corrected`` carries the small root
    of the underlying self-map quadratic, r'=(1-sqrt(1-factor))/(2 Lbar k
    (inv+1)), which is the radius the contraction argument actually yields;
    the printed r drops that denominator.
    """

    xi0_norm: float
    k: float
    inv_norm: float
    factor: float
    valid: bool
    r: float
    r_corrected: float


def _sigma_table(sigma: SigmaProfile | float, xs: np.ndarray) -> np.ndarray:
    if isinstance(sigma, (int, float)):
        return np.full(xs.shape, float(sigma))
    return np.array([sigma_eval(sigma, float(x)) for x in xs])


def integrate_ivp(G0: float, I0: float, params: ModelParams,
                  sigma: SigmaProfile | float, grid: Grid | None = None,
                  freeze: str | None = None) -> SteadyProfile:
    """RK4 march of the steady ODEs from (G0, I0); boundaries left unchecked.

    ``freeze`` is a test hook: "I" holds insulin at I0 (glucose equation
    alone), "G" holds glucose at G0 (insulin equation alone).
    """
    if grid is None:
        grid = Grid.uniform(params.L, DEFAULT_NODES)
    h = grid.h
    n = grid.n_cells
    # sigma sampled once on the half-step lattice used by RK4 stages
    sig = _sigma_table(sigma, np.linspace(0.0, params.L, 2 * n + 1))
    c = params.c
    a, b2, d_i, G_in = params.a, params.b * params.b, params.d_i, params.G_in
    freeze_G = freeze == "G"
    freeze_I = freeze == "I"

    G = np.empty(n + 1)
    I = np.empty(n + 1)
    G[0], I[0] = G0, I0

    def f(Gv: float, Iv: float, s: float) -> tuple[float, float]:
        dG = 0.0 if freeze_G else (G_in - a * Gv * Iv) / c
        dI = 0.0 if freeze_I else (s * Gv * Gv / (b2 + Gv * Gv) - d_i * Iv) / c
        return dG, dI

    for i in range(n):
        s0, sm, s1 = sig[2 * i], sig[2 * i + 1], sig[2 * i + 2]
        Gi, Ii = G[i], I[i]
        k1g, k1i = f(Gi, Ii, s0)
        k2g, k2i = f(Gi + 0.5 * h * k1g, Ii + 0.5 * h * k1i, sm)
        k3g, k3i = f(Gi + 0.5 * h * k2g, Ii + 0.5 * h * k2i, sm)
        k4g, k4i = f(Gi + h * k3g, Ii + h * k3i, s1)
        Gn = Gi + (h / 6.0) * (k1g + 2.0 * k2g + 2.0 * k3g + k4g)
        In = Ii + (h / 6.0) * (k1i + 2.0 * k2i + 2.0 * k3i + k4i)
        if not (math.isfinite(Gn) and math.isfinite(In)):
            raise IntegrationFailureError(
                f"steady IVP blew up near x = {grid.nodes[i + 1]:.6g} cm",
                location=float(grid.nodes[i + 1]))
        G[i + 1], I[i + 1] = Gn, In

    return SteadyProfile(
        grid=grid, G=G, I=I,
        residual_G=abs(G[-1] - params.alpha1 * G[0]),
        residual_I=abs(I[-1] - params.alpha2 * I[0]),
        iterations=0, method="ivp")


def _default_guess(params: ModelParams, sigma: SigmaProfile | float) -> np.ndarray:
    """Shooting initializer: constant-sigma-bar equilibrium, insulin scaled."""
    sigma_bar = sigma if isinstance(sigma, (int, float)) else sigma.bounds()[1]
    eq = find_equilibrium(params, sigma_bar)
    return np.array([eq.G_star, eq.I_star * (1.0 + params.alpha2) / 2.0])


def _balance_guess(params: ModelParams, sigma: SigmaProfile | float) -> np.ndarray:
    """Quasi-analytic initializer from the frozen-glucose insulin balance.

    Treating G as constant, the insulin equation is linear with closed-form
    boundary-consistent I(0); the glucose boundary condition then pins G via
    a scalar fixed point.  Very close to the true solution whenever G varies
    mildly along the vein, which is the physiological regime.
    """
    L, c = params.L, params.c
    lbar = params.length_eff
    d_i, a, G_in = params.d_i, params.a, params.G_in
    a1, a2 = params.alpha1, params.alpha2
    if isinstance(sigma, (int, float)):
        s_mean = float(sigma)
    else:
        s_mean = float(np.mean(_sigma_table(sigma, np.linspace(0.0, L, 201))))
    decay = math.exp(-d_i * lbar)

    G0 = max(params.b, G_in / (a * max(d_i, 1e-12)))
    for _ in range(60):
        s_eff = s_mean * G0 * G0 / (params.b ** 2 + G0 * G0)
        I_inf = s_eff / d_i
        I0 = I_inf * (1.0 - decay) / max(a2 - decay, 1e-12)
        # mean of I(x) = I_inf + (I0 - I_inf) e^{-d_i x/c} over [0, L]
        I_mean = I_inf + (I0 - I_inf) * (1.0 - decay) / (d_i * lbar)
        G_new = G_in * L / max(c * (a1 - 1.0) + a * I_mean * L, 1e-300)
        if abs(G_new - G0) <= 1e-12 * max(1.0, G0):
            G0 = G_new
            break
        G0 = 0.5 * G0 + 0.5 * G_new
    s_eff = s_mean * G0 * G0 / (params.b ** 2 + G0 * G0)
    I0 = (s_eff / d_i) * (1.0 - decay) / max(a2 - decay, 1e-12)
    return np.array([max(G0, 1e-9), max(I0, 1e-9)])


def solve_shooting(params: ModelParams, sigma: SigmaProfile | float,
                   guess: tuple[float, float] | None = None,
                   tol: float = 1e-10, grid: Grid | None = None,
                   max_iter: int = 60) -> SteadyProfile:
    """Steady profile by shooting: Newton on the boundary mismatch.

    Residual R(G0, I0) = (G(L) - alpha1 G0, I(L) - alpha2 I0) with the IVP
    integrated by RK4 on the grid.
    """
    if grid is None:
        grid = Grid.uniform(params.L, DEFAULT_NODES)

    iterations = [0]

    def residual(x: np.ndarray) -> np.ndarray:
        prof = integrate_ivp(float(x[0]), float(x[1]), params, sigma, grid)
        return np.array([prof.G[-1] - params.alpha1 * x[0],
                         prof.I[-1] - params.alpha2 * x[1]])

    def count(iteration, _x, _norm):
        iterations[0] = iteration

    guesses = []
    if guess is not None:
        guesses.append(np.asarray(guess, dtype=float))
    else:
        guesses.append(_default_guess(params, sigma))
        guesses.append(_balance_guess(params, sigma))

    last_error: Exception | None = None
    for start in guesses:
        iterations[0] = 0
        try:
            x = newton_nd(residual, start, tol=tol, max_iter=max_iter,
                          callback=count)
            prof = integrate_ivp(float(x[0]), float(x[1]), params, sigma, grid)
            if np.any(prof.G <= 0.0) or np.any(prof.I <= 0.0):
                last_error = NonConvergenceError(
                    "shooting converged to a non-positive profile")
                continue
            return SteadyProfile(
                grid=grid, G=prof.G, I=prof.I,
                residual_G=prof.residual_G, residual_I=prof.residual_I,
                iterations=iterations[0], method="shooting")
        except (NonConvergenceError, IntegrationFailureError) as exc:
            last_error = exc
    raise NonConvergenceError(
        "shooting did not converge from the available initial guesses; "
        "consider the Picard path (constant sigma) or continuation in L "
        f"(last error: {last_error})",
        residual_norm=getattr(last_error, "residual_norm", None))


def _boundary_matrix(params: ModelParams) -> np.ndarray:
    return np.diag([params.alpha1, params.alpha2])


def _picard_pieces(params: ModelParams, eq: EquilibriumReport, grid: Grid):
    """Propagators and boundary inverse shared by the Picard machinery."""
    lbar = params.length_eff
    xbar = grid.nodes / params.c
    from .model import _propagator_family
    family = _propagator_family(eq.B, xbar)              # e^{B x/c} per node
    e_L = family[-1]
    D = _boundary_matrix(params)
    M = D - e_L
    if abs(np.linalg.det(M)) < 1e-14 * max(1.0, spectral_norm(M) ** 2):
        raise SingularMatrixError(
            "D - e^{B L/c} is numerically singular; the fixed-point form "
            "of the steady problem is not available here")
    M_inv = np.linalg.inv(M)
    return lbar, family, e_L, D, M, M_inv


def picard_linear_part(params: ModelParams, sigma_const: float,
                       grid: Grid | None = None
                       ) -> tuple[np.ndarray, EquilibriumReport, Grid]:
    """Linear-part profile u0(x) = u* + e^{Bx/c}(D - e^{BL/c})^{-1}(I-D)u*.

    This is the exact steady solution with the quadratic remainder F forced
    to zero; it already satisfies u0(L) = D u0(0).
    """
    if grid is None:
        grid = Grid.uniform(params.L, DEFAULT_NODES)
    eq = find_equilibrium(params, sigma_const)
    _, family, _, D, _, M_inv = _picard_pieces(params, eq, grid)
    w0 = M_inv @ ((np.eye(2) - D) @ eq.u_star)
    u0 = eq.u_star[None, :] + np.einsum("nij,j->ni", family, w0)
    return u0, eq, grid


def _remainder_table(u: np.ndarray, eq: EquilibriumReport) -> np.ndarray:
    """Vectorized quadratic remainder F(u) at every node."""
    a, b = eq.params.a, eq.params.b
    dG = u[:, 0] - eq.G_star
    dI = u[:, 1] - eq.I_star
    f1 = -a * dI * dG
    denom = (b * b + eq.G_star ** 2) ** 2
    bracket = 1.0 - (u[:, 0] + eq.G_star) ** 2 / (b * b + u[:, 0] ** 2)
    f2 = eq.sigma_const * b * b * dG * dG / denom * bracket
    return np.column_stack([f1, f2])


def solve_picard(params: ModelParams, sigma_const: float, tol: float = 1e-10,
                 max_iter: int = 200, grid: Grid | None = None) -> SteadyProfile:
    """Steady profile by fixed-point iteration of the integral operator.

    u <- u0 + int_0^x e^{B(x-y)} F(u) dy
            + e^{Bx} (D - e^{BL})^{-1} int_0^L e^{B(L-y)} F(u) dy

    (all lengths velocity-rescaled, quadrature by trapezoid on the grid).
    Divergence over five successive growing updates raises a DivergenceError
    carrying the contraction certificate of the scenario.
    """
    u0, eq, grid = picard_linear_part(params, sigma_const, grid)
    lbar, family, _, _, _, M_inv = _picard_pieces(params, eq, grid)
    hbar = grid.h / params.c

    # cheap inline certificate: warn (but still try) when the contraction
    # hypothesis fails -- the iteration often converges well outside it
    xi0 = u0 - eq.u_star[None, :]
    xi0_norm = float(np.max(np.hypot(xi0[:, 0], xi0[:, 1])))
    factor = 4.0 * xi0_norm * lbar * nonlinearity_gain(eq) * (spectral_norm(M_inv) + 1.0)
    if factor > 1.0:
        warnings.warn(
            f"contraction certificate invalid (factor = {factor:.3g} > 1); "
            "attempting the fixed-point iteration anyway", RuntimeWarning,
            stacklevel=2)

    u = u0.copy()
    prev_diff = math.inf
    growths = 0
    for iteration in range(1, max_iter + 1):
        f_table = _remainder_table(u, eq)
        conv = exp_convolve(eq.B, hbar, f_table)
        w1 = M_inv @ conv[-1]
        u_new = u0 + conv + np.einsum("nij,j->ni", family, w1)
        diff = float(np.max(np.abs(u_new - u)))
        u = u_new
        if diff <= tol:
            return SteadyProfile(
                grid=grid, G=u[:, 0], I=u[:, 1],
                residual_G=abs(u[-1, 0] - params.alpha1 * u[0, 0]),
                residual_I=abs(u[-1, 1] - params.alpha2 * u[0, 1]),
                iterations=iteration, method="picard")
        if not math.isfinite(diff) or diff > prev_diff:
            growths += 1
            if growths >= 5 or not math.isfinite(diff):
                raise DivergenceError(
                    "Picard iteration is diverging; the contraction "
                    "hypothesis fails for this scenario",
                    certificate=contraction_certificate(params, sigma_const, grid))
        else:
            growths = 0
        prev_diff = diff
    raise NonConvergenceError(
        f"Picard iteration did not reach {tol:.1e} in {max_iter} sweeps "
        f"(last update {prev_diff:.3e})", residual_norm=prev_diff,
        iterations=max_iter)


def compatibility_residuals(profile: SteadyProfile, params: ModelParams,
                            sigma: SigmaProfile | float,
                            return_variants: bool = False):
    """Residuals of the boundary-compatibility identities.

    Derived directly from the quadrature forms of the steady equations (sign
    convention corrected so that converged profiles make both sides match):

      G0 (alpha1 - e^{-(a/c) int_0^L I})      = (G_in/c) int_0^L e^{-(a/c) int_tau^L I} dtau
      I0 (alpha2 - e^{-(d_i/c) L})            = (1/c) int_0^L e^{-(d_i/c)(L-s)} sigma G^2/(b^2+G^2) ds

    With ``return_variants`` the printed textbook variant of the insulin
    identity (alpha1 in the denominator, exponential of -int I) is evaluated
    as well so the two can be compared.
    """
    xs = profile.grid.nodes
    h = profile.grid.h
    c, a, d_i = params.c, params.a, params.d_i
    sig = _sigma_table(sigma, xs)

    cum_I = np.concatenate([[0.0], np.cumsum(0.5 * h * (profile.I[1:] + profile.I[:-1]))])
    total_I = cum_I[-1]

    # glucose identity
    weight_G = np.exp(-(a / c) * (total_I - cum_I))
    rhs_G = (params.G_in / c) * quad_trapz(weight_G, h)
    res_G0 = abs(profile.G[0] * (params.alpha1 - math.exp(-(a / c) * total_I)) - rhs_G)

    # insulin identity
    secretion = sig * profile.G ** 2 / (params.b ** 2 + profile.G ** 2)
    weight_I = np.exp(-(d_i / c) * (params.L - xs))
    rhs_I = quad_trapz(weight_I * secretion, h) / c
    res_I0 = abs(profile.I[0] * (params.alpha2 - math.exp(-d_i * params.L / c)) - rhs_I)

    if not return_variants:
        return res_G0, res_I0
    res_I0_printed = abs(
        profile.I[0] * (params.alpha1 - math.exp(-(a / c) * total_I)) - rhs_I)
    return {
        "res_G0": res_G0,
        "res_I0": res_I0,
        "res_I0_printed_alpha1_variant": res_I0_printed,
    }


def contraction_certificate(params: ModelParams, sigma_const: float,
                            grid: Grid | None = None) -> ContractionCertificate:
    """Evaluate the fixed-point existence hypothesis for this scenario."""
    if grid is None:
        grid = Grid.uniform(params.L, DEFAULT_NODES)
    eq = find_equilibrium(params, sigma_const)
    lbar, family, _, D, _, M_inv = _picard_pieces(params, eq, grid)
    w0 = M_inv @ ((np.eye(2) - D) @ eq.u_star)
    xi0 = np.einsum("nij,j->ni", family, w0)
    xi0_norm = float(np.max(np.hypot(xi0[:, 0], xi0[:, 1])))
    k = nonlinearity_gain(eq)
    inv_norm = spectral_norm(M_inv)
    factor = 4.0 * xi0_norm * lbar * k * (inv_norm + 1.0)
    valid = factor <= 1.0
    if valid:
        r = (1.0 - math.sqrt(1.0 - factor)) / 2.0
        r_corrected = (1.0 - math.sqrt(1.0 - factor)) / (2.0 * lbar * k * (inv_norm + 1.0))
    else:
        r = math.nan
        r_corrected = math.nan
    return ContractionCertificate(
        xi0_norm=xi0_norm, k=k, inv_norm=inv_norm, factor=factor,
        valid=valid, r=r, r_corrected=r_corrected)


def uniqueness_bound(params: ModelParams, sigma: SigmaProfile | float,
                     discrepancy: float = 1e-3) -> float:
    """Sufficient-smallness length threshold for uniqueness (heuristic).

    Verbatim evaluation of the printed smallness expression

        L <= max( e / (2 sqrt(G0 sigma_bar b^2 L^2)),
                  e / (2 cbrt(G_in sigma_bar b^2)) )

    with e = ``discrepancy``.  The expression contains L on both sides as
    printed and is therefore only a heuristic indicator: smaller values mean
    uniqueness holds only for shorter veins.  It diverges as sigma_bar -> 0
    (vanishing nonlinearity) and decreases monotonically in sigma_bar.
    """
    sigma_bar = sigma if isinstance(sigma, (int, float)) else sigma.bounds()[1]
    eq = find_equilibrium(params, max(sigma_bar, 1e-300))
    b2 = params.b ** 2
    branch1 = discrepancy / (2.0 * math.sqrt(eq.G_star * sigma_bar * b2 * params.L ** 2))
    branch2 = discrepancy / (2.0 * (params.G_in * sigma_bar * b2) ** (1.0 / 3.0))
    return max(branch1, branch2)
