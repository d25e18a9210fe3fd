"""Model parameters, reaction terms and the spatially homogeneous equilibrium.

The two-species reaction couples glucose G (mM) and insulin I (pM) along the
vein:

    dG = G_in - a*G*I                      (peripheral input minus uptake)
    dI = sigma(x)*G^2 / (b^2 + G^2) - d_i*I  (secretion minus degradation)

With constant sigma the system has a unique positive equilibrium
u* = (G*, I*); its Jacobian B drives every linearized computation in the
steady-state and stability modules.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DomainError,
    InvalidArgumentError,
    ModeError,
    ParameterRegimeError,
    ProfileValidityError,
)
from .numerics import find_root_bracketed

__all__ = [
    "ModelParams",
    "SigmaProfile",
    "EquilibriumReport",
    "sigma_eval",
    "reaction_rhs",
    "remainder_F",
    "find_equilibrium",
    "nonlinearity_gain",
]

SIGMA_KINDS = (
    "homogeneous",
    "linear-increasing",
    "linear-decreasing",
    "quadratic",
    "reversed-quadratic",
    "custom-samples",
)


@dataclass(frozen=True)
class ModelParams:
    """All scalar parameters of the transport model.

    Units: c (cm/min), eps (cm^2/min), L (cm), G_in (mM/min), a (1/(pM min)),
    b (mM), d_i (1/min); alpha1/alpha2 are the dimensionless boundary
    proportionality constants, both >= 1.
    """

    c: float = 4.2
    eps: float = 0.0
    L: float = 15.0
    G_in: float = 0.06
    a: float = 1e-5
    b: float = 9.0
    d_i: float = 0.04
    alpha1: float = 1.0
    alpha2: float = 2.0

    def __post_init__(self):
        checks = [
            ("c", self.c > 0.0),
            ("L", self.L > 0.0),
            ("G_in", self.G_in > 0.0),
            ("a", self.a > 0.0),
            ("b", self.b > 0.0),
            ("d_i", self.d_i > 0.0),
            ("eps", self.eps >= 0.0),
            ("alpha1", self.alpha1 >= 1.0),
            ("alpha2", self.alpha2 >= 1.0),
        ]
        for name, ok in checks:
            value = getattr(self, name)
            if not ok or not math.isfinite(value):
                raise InvalidArgumentError(
                    f"parameter {name} = {value!r} violates its invariant")

    @property
    def length_eff(self) -> float:
        """Effective length L/c (min) after rescaling out the blood speed."""
        return self.L / self.c


@dataclass(frozen=True)
class SigmaProfile:
    """Spatial secretion capacity sigma(x) > 0 on [0, L] (pM/(mM min))."""

    kind: str
    length: float
    base: float = 15.0
    end0: float | None = None
    endL: float | None = None
    vertex: float | None = None
    samples: tuple[tuple[float, float], ...] | None = None
    # quadratic coefficients sigma(x) = q0 + q1 x + q2 x^2, filled on build
    _coeffs: tuple[float, float, float] = field(default=(0.0, 0.0, 0.0), repr=False)

    def __post_init__(self):
        if self.kind not in SIGMA_KINDS:
            raise InvalidArgumentError(f"unknown sigma kind {self.kind!r}")
        if self.length <= 0.0:
            raise InvalidArgumentError("sigma profile needs a positive length")
        if self.kind in ("quadratic", "reversed-quadratic"):
            e0, eL, v, L = self.end0, self.endL, self.vertex, self.length
            # parabola through (0, end0), (L/2, vertex), (L, endL)
            q2 = 2.0 * (e0 + eL - 2.0 * v) / (L * L)
            q1 = (4.0 * v - 3.0 * e0 - eL) / L
            object.__setattr__(self, "_coeffs", (e0, q1, q2))
        lo, hi = self.bounds()
        if lo <= 0.0:
            raise ProfileValidityError(
                f"sigma profile must stay positive on [0, L]; inf = {lo}")
        if not math.isfinite(hi):
            raise ProfileValidityError("sigma profile is unbounded")

    # -- constructors -------------------------------------------------------

    @classmethod
    def homogeneous(cls, base: float, length: float) -> "SigmaProfile":
        return cls(kind="homogeneous", length=length, base=base)

    @classmethod
    def linear(cls, end0: float, endL: float, length: float) -> "SigmaProfile":
        kind = "linear-increasing" if endL >= end0 else "linear-decreasing"
        return cls(kind=kind, length=length, base=0.5 * (end0 + endL),
                   end0=end0, endL=endL)

    @classmethod
    def quadratic(cls, end0: float, endL: float, vertex: float,
                  length: float) -> "SigmaProfile":
        kind = "quadratic" if vertex <= 0.5 * (end0 + endL) else "reversed-quadratic"
        return cls(kind=kind, length=length, base=vertex,
                   end0=end0, endL=endL, vertex=vertex)

    @classmethod
    def from_samples(cls, samples: Sequence[tuple[float, float]]) -> "SigmaProfile":
        pts = tuple(sorted((float(x), float(s)) for x, s in samples))
        if len(pts) < 2 or pts[0][0] != 0.0:
            raise InvalidArgumentError("custom sigma needs samples from x = 0")
        return cls(kind="custom-samples", length=pts[-1][0],
                   base=pts[0][1], samples=pts)

    # -- evaluation ---------------------------------------------------------

    @property
    def is_constant(self) -> bool:
        if self.kind == "homogeneous":
            return True
        lo, hi = self.bounds()
        return hi - lo <= 1e-12 * max(1.0, hi)

    def constant_value(self) -> float:
        if not self.is_constant:
            raise ModeError("sigma profile is not spatially constant")
        return self.base if self.kind == "homogeneous" else self.bounds()[0]

    def bounds(self) -> tuple[float, float]:
        """(inf sigma, sup sigma) over [0, L]."""
        if self.kind == "homogeneous":
            return self.base, self.base
        if self.kind in ("linear-increasing", "linear-decreasing"):
            return min(self.end0, self.endL), max(self.end0, self.endL)
        if self.kind in ("quadratic", "reversed-quadratic"):
            q0, q1, q2 = self._coeffs
            values = [self.end0, self.endL]
            if q2 != 0.0:
                x_ext = -q1 / (2.0 * q2)
                if 0.0 < x_ext < self.length:
                    values.append(q0 + q1 * x_ext + q2 * x_ext * x_ext)
            return min(values), max(values)
        sigmas = [s for _, s in self.samples]
        return min(sigmas), max(sigmas)

    def __call__(self, x: float) -> float:
        return sigma_eval(self, x)


def sigma_eval(profile: SigmaProfile, x: float) -> float:
    """sigma(x) with strict domain and positivity checks."""
    if not (0.0 <= x <= profile.length * (1.0 + 1e-12)):
        raise DomainError(f"x = {x} outside the vein [0, {profile.length}]")
    if profile.kind == "homogeneous":
        return profile.base
    if profile.kind in ("linear-increasing", "linear-decreasing"):
        t = x / profile.length
        value = (1.0 - t) * profile.end0 + t * profile.endL
    elif profile.kind in ("quadratic", "reversed-quadratic"):
        q0, q1, q2 = profile._coeffs
        value = q0 + q1 * x + q2 * x * x
    else:
        xs = [p for p, _ in profile.samples]
        ss = [s for _, s in profile.samples]
        value = float(np.interp(x, xs, ss))
    if value <= 0.0:
        raise ProfileValidityError(f"sigma({x}) = {value} is not positive")
    return value


def reaction_rhs(G: float, I: float, x: float, params: ModelParams,
                 sigma: SigmaProfile | float) -> tuple[float, float]:
    """Reaction source terms (dG, dI) at position x (no transport, no 1/c)."""
    s = sigma if isinstance(sigma, (int, float)) else sigma_eval(sigma, x)
    dG = params.G_in - params.a * G * I
    dI = s * G * G / (params.b * params.b + G * G) - params.d_i * I
    return dG, dI


@dataclass(frozen=True)
class EquilibriumReport:
    """Homogeneous equilibrium u* = (G*, I*) with its linearization data.

    lambda1/lambda2 are the Jacobian eigenvalues (1/min, lambda1 has the
    largest real part); (M, rho) certify the decay envelope
    ||exp(Bx)||_2 <= M exp(-rho x).
    """

    G_star: float
    I_star: float
    B: np.ndarray
    lambda1: complex
    lambda2: complex
    M: float
    rho: float
    bounds: tuple[float, float, float]  # (G_lower, G_upper, I_upper)
    params: ModelParams
    sigma_const: float

    @property
    def u_star(self) -> np.ndarray:
        return np.array([self.G_star, self.I_star])


def _propagator_family(B: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """exp(B x) for every x in xs, shape (len(xs), 2, 2)."""
    w, V = np.linalg.eig(B)
    if abs(w[0] - w[1]) > 1e-10 * max(1.0, abs(w[0]), abs(w[1])):
        Vinv = np.linalg.inv(V)
        phases = np.exp(np.outer(xs, w))           # (n, 2)
        stack = np.einsum("ij,nj,jk->nik", V, phases, Vinv)
        return stack.real
    from .numerics import mat_exp
    return np.stack([mat_exp(B, float(x)) for x in xs])


def find_equilibrium(params: ModelParams, sigma_const: float) -> EquilibriumReport:
    """Solve the scalar equilibrium equation and assemble the report.

    Eliminating I via I* = G_in/(a G*) reduces the equilibrium condition to
    sigma*a*G^3 = d_i*G_in*(b^2 + G^2), which is monotone-crossing on (0, inf)
    so a bracketed search cannot miss the root.
    """
    if sigma_const <= 0.0:
        raise InvalidArgumentError("constant sigma must be positive")
    a, b, d_i, G_in = params.a, params.b, params.d_i, params.G_in
    s = sigma_const

    G_lower = G_in * d_i / (a * s)
    G_upper = max(2.0 * G_lower, b)
    I_upper = s / d_i

    def cubic(G: float) -> float:
        return s * a * G ** 3 - d_i * G_in * (b * b + G * G)

    hi = 10.0 * G_upper
    if cubic(hi) <= 0.0:
        raise ParameterRegimeError(
            f"equilibrium root not bracketed on (0, {hi}]; "
            "parameters outside the supported regime")
    G_star = find_root_bracketed(cubic, 1e-300, hi, tol=1e-13 * max(1.0, hi))
    # one Newton polish for full float accuracy
    for _ in range(3):
        f = cubic(G_star)
        fp = 3.0 * s * a * G_star ** 2 - 2.0 * d_i * G_in * G_star
        if fp != 0.0:
            G_star -= f / fp
    I_star = G_in / (a * G_star)

    q = 2.0 * s * b * b * G_star / (b * b + G_star * G_star) ** 2
    B = np.array([[-a * I_star, -a * G_star],
                  [q, -d_i]])

    # closed-form eigenvalues: char. polynomial is
    # (lam + a I*)(lam + d_i) + 2 a d_i^2 b^2 I*^2 / (sigma G*^2) = 0
    coupling = 2.0 * a * d_i ** 2 * b * b * I_star ** 2 / (s * G_star ** 2)
    disc = complex((a * I_star - d_i) ** 2 - 4.0 * coupling)
    root = np.sqrt(disc)
    lambda1 = (-(a * I_star + d_i) + root) / 2.0
    lambda2 = (-(a * I_star + d_i) - root) / 2.0
    if lambda2.real > lambda1.real:
        lambda1, lambda2 = lambda2, lambda1

    # decay envelope: rho slightly inside the spectral abscissa, M fitted on a
    # grid long enough to contain the transient hump of ||exp(Bx)||
    rho = 0.95 * abs(lambda1.real)
    x_max = max(params.L, 8.0 / max(abs(lambda1.real), 1e-300))
    xs = np.linspace(0.0, x_max, 2001)
    norms = np.linalg.svd(_propagator_family(B, xs), compute_uv=False)[:, 0]
    # deep in the tail exp(rho x) overflows while the norm underflows; the
    # true product decays there, so work in log space and ignore that region
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        log_env = np.log(norms) + rho * xs
    M = float(np.exp(np.nanmax(log_env[np.isfinite(log_env)], initial=0.0)))
    M = max(M, 1.0)

    return EquilibriumReport(
        G_star=float(G_star), I_star=float(I_star), B=B,
        lambda1=complex(lambda1), lambda2=complex(lambda2),
        M=M, rho=float(rho),
        bounds=(G_lower, G_upper, I_upper),
        params=params, sigma_const=float(s))


def remainder_F(G: float, I: float, eq: EquilibriumReport,
                sigma: SigmaProfile | float | None = None) -> tuple[float, float]:
    """Quadratic remainder F with reaction_rhs(u) = B (u - u*) + F(u).

    Only defined for spatially constant sigma; everything the steady-state
    fixed-point machinery does rests on this decomposition.
    """
    if sigma is None:
        s = eq.sigma_const
    elif isinstance(sigma, (int, float)):
        s = float(sigma)
    else:
        if not sigma.is_constant:
            raise ModeError("remainder_F requires a spatially constant sigma")
        s = sigma.constant_value()
    if abs(s - eq.sigma_const) > 1e-9 * max(1.0, eq.sigma_const):
        raise ModeError("sigma does not match the equilibrium report")
    b, a = eq.params.b, eq.params.a
    dG = G - eq.G_star
    dI = I - eq.I_star
    f1 = -a * dI * dG
    denom = (b * b + eq.G_star ** 2) ** 2
    bracket = 1.0 - (G + eq.G_star) ** 2 / (b * b + G * G)
    f2 = s * b * b * dG * dG / denom * bracket
    return f1, f2


def nonlinearity_gain(eq: EquilibriumReport, sigma_bar: float | None = None) -> float:
    """Constant k = a + sigma_bar b^2 / (b^2 + G*^2)^2 bounding F near u*."""
    s = eq.sigma_const if sigma_bar is None else sigma_bar
    b = eq.params.b
    return eq.params.a + s * b * b / (b * b + eq.G_star ** 2) ** 2
