"""Closed-form FRW (k = 0, p = sigma*rho) and TOV (p = sigma_bar*rho, rho ~ 1/r^2) solutions.

The FRW side is parametrised through the shock radius

    rbar(t) = sign * sqrt(18 pi G gamma) (1 + sigma) (t - t0) + rbar0,

which is linear in ``t``; the density is ``rho = 3 gamma / rbar^2`` and the
scale factor ``R = R0 (rbar / rbar0)^(2 / (3 (1 + sigma)))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from scipy import integrate

from . import tensor_core as tc
from .errors import BadSigma, BranchError, OutOfDomain, ShockAtOrigin


def eos_denominator(sigma_bar: float) -> float:
    return 1.0 + 6.0 * sigma_bar + sigma_bar * sigma_bar


def gamma_of(sigma_bar: float, G: float = 1.0) -> float:
    """Density coefficient of the singular isothermal TOV star."""
    return sigma_bar / (2.0 * math.pi * G * eos_denominator(sigma_bar))


def eos_H(sigma: float) -> float:
    """TOV equation-of-state constant matched to an FRW constant ``sigma``."""
    if not 0.0 <= sigma <= 1.0:
        raise BadSigma(f"sigma must lie in [0, 1], got {sigma!r}")
    return 0.5 * math.sqrt(9.0 * sigma * sigma - 18.0 * sigma + 25.0) + 1.5 * sigma - 2.5


def sigma_of_sigma_bar(sigma_bar: float) -> float:
    """Inverse of :func:`eos_H`: ``sigma = sigma_bar (sigma_bar + 5) / (3 (sigma_bar + 1))``."""
    if not 0.0 <= sigma_bar <= 1.0:
        raise BadSigma(f"sigma_bar must lie in [0, 1], got {sigma_bar!r}")
    return sigma_bar * (sigma_bar + 5.0) / (3.0 * (sigma_bar + 1.0))


@dataclass(frozen=True)
class FrwParameters:
    sigma: float
    k: float = 0.0
    R0: float = 1.0
    t0: float = 0.0
    rbar0: float = 1.0
    sign: int = 1
    G: float = 1.0
    # density coefficient; None means the value tied to sigma through H
    gamma: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.sigma <= 1.0:
            raise BadSigma(f"sigma must lie in [0, 1], got {self.sigma!r}")
        if self.R0 <= 0 or self.rbar0 <= 0:
            raise ValueError("R0 and rbar0 must be positive")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    @property
    def density_coefficient(self) -> float:
        if self.gamma is not None:
            return self.gamma
        return gamma_of(eos_H(self.sigma), self.G)

    @property
    def shock_speed(self) -> float:
        """d rbar / dt, constant along the solution."""
        return (
            self.sign
            * math.sqrt(18.0 * math.pi * self.G * self.density_coefficient)
            * (1.0 + self.sigma)
        )

    @property
    def scale_exponent(self) -> float:
        return 2.0 / (3.0 * (1.0 + self.sigma))


@dataclass(frozen=True)
class TovParameters:
    sigma_bar: float
    gamma: float
    A: float
    B0: float = 1.0
    rbar0: float = 1.0
    G: float = 1.0

    @property
    def B_exponent(self) -> float:
        return 4.0 * self.sigma_bar / (1.0 + self.sigma_bar)

    @property
    def gamma_residual(self) -> float:
        """Departure of ``gamma`` from the value forced by the TOV equation."""
        return self.gamma - gamma_of(self.sigma_bar, self.G)

    def B(self, rbar: float) -> float:
        return self.B0 * (rbar / self.rbar0) ** self.B_exponent

    def mass(self, rbar: float) -> float:
        return 4.0 * math.pi * self.gamma * rbar

    def density(self, rbar: float) -> float:
        return self.gamma / (rbar * rbar)

    def pressure(self, rbar: float) -> float:
        return self.sigma_bar * self.density(rbar)


# --------------------------------------------------------------------------
# FRW
# --------------------------------------------------------------------------


def shock_radius(p: FrwParameters, t: float) -> float:
    rbar = p.shock_speed * (t - p.t0) + p.rbar0
    if rbar <= 0.0:
        raise ShockAtOrigin(f"rbar(t={t!r}) = {rbar!r} <= 0")
    return rbar


def frw_density(p: FrwParameters, t: float) -> float:
    rbar = shock_radius(p, t)
    return 3.0 * p.density_coefficient / (rbar * rbar)


def frw_scale(p: FrwParameters, t: float) -> float:
    return p.R0 * (shock_radius(p, t) / p.rbar0) ** p.scale_exponent


def frw_scale_derivatives(p: FrwParameters, t: float) -> tuple[float, float, float]:
    """``(R, dR/dt, d2R/dt2)`` of the closed-form scale factor."""
    rbar = shock_radius(p, t)
    a = p.scale_exponent
    v = p.shock_speed
    R = p.R0 * (rbar / p.rbar0) ** a
    return R, a * v * R / rbar, a * (a - 1.0) * v * v * R / (rbar * rbar)


def frw_time_of_density(p: FrwParameters, rho: float) -> float:
    if not rho > 0.0 or not math.isfinite(rho):
        raise BranchError(f"density {rho!r} is not attained on the solution")
    if p.shock_speed == 0.0:
        raise BranchError("static FRW branch (gamma = 0) cannot be inverted")
    rbar = math.sqrt(3.0 * p.density_coefficient / rho)
    return p.t0 + (rbar - p.rbar0) / p.shock_speed


def frw_time_by_quadrature(p: FrwParameters, rho: float,
                           pressure: Callable[[float], float] | None = None) -> float:
    """``t(rho)`` from the general equation-of-state integral (oracle route)."""
    pressure = pressure or (lambda xi: p.sigma * xi)
    rho0 = frw_density(p, p.t0)
    integrand = lambda xi: 1.0 / ((xi + pressure(xi)) * math.sqrt(24.0 * math.pi * p.G * xi))  # noqa: E731
    val, _ = integrate.quad(integrand, rho0, rho, epsabs=1e-13, epsrel=1e-12, limit=200)
    return p.t0 - p.sign * val


def frw_scale_by_quadrature(p: FrwParameters, rho: float,
                            pressure: Callable[[float], float] | None = None) -> float:
    pressure = pressure or (lambda xi: p.sigma * xi)
    rho0 = frw_density(p, p.t0)
    val, _ = integrate.quad(lambda xi: -1.0 / (3.0 * (xi + pressure(xi))), rho0, rho,
                            epsabs=1e-13, epsrel=1e-12, limit=200)
    return p.R0 * math.exp(val)


def frw_metric(p: FrwParameters) -> tc.MetricSpec:
    return tc.frw_family(lambda t: frw_scale_derivatives(p, t), p.k,
                         sigma=p.sigma, G=p.G)


def frw_fluid(p: FrwParameters, x) -> tc.FluidState:
    rho = frw_density(p, float(np.asarray(x)[0]))
    return tc.FluidState(rho, p.sigma * rho, np.array([1.0, 0.0, 0.0, 0.0]))


def frw_ode_residuals(p: FrwParameters, t: float) -> tuple[float, float]:
    """Relative residuals of the two Friedmann equations along the solution."""
    R, dR, _ = frw_scale_derivatives(p, t)
    rho = frw_density(p, t)
    # rho' from rho = 3 gamma / rbar^2 with rbar linear in t
    drho = -2.0 * rho * p.shock_speed / shock_radius(p, t)
    pres = p.sigma * rho
    r1 = (pres - (-rho - R * drho / (3.0 * dR))) / max(abs(pres), rho)
    lhs = dR * dR + p.k
    rhs = 8.0 * math.pi * p.G / 3.0 * rho * R * R
    r2 = (lhs - rhs) / max(abs(lhs), abs(rhs))
    return r1, r2


# --------------------------------------------------------------------------
# TOV
# --------------------------------------------------------------------------


def tov_solve(sigma_bar: float, B0: float = 1.0, rbar0: float = 1.0, G: float = 1.0,
              gamma: float | None = None) -> TovParameters:
    """Closed-form TOV solution for ``p = sigma_bar rho`` and ``rho = gamma / r^2``.

    ``gamma`` overrides the self-consistent coefficient (used to build
    deliberately broken configurations).
    """
    if not 0.0 <= sigma_bar <= 1.0:
        raise BadSigma(f"sigma_bar must lie in [0, 1], got {sigma_bar!r}")
    if gamma is None:
        gamma = gamma_of(sigma_bar, G)
    A = 1.0 - 8.0 * math.pi * G * gamma
    return TovParameters(sigma_bar, gamma, A, B0, rbar0, G)


def tov_metric(p: TovParameters) -> tc.MetricSpec:
    n = p.B_exponent

    def B(r):
        if r <= 0.0:
            raise OutOfDomain(f"TOV radius must be positive, got {r!r}")
        b = p.B0 * (r / p.rbar0) ** n
        return b, n * b / r, n * (n - 1.0) * b / (r * r)

    return tc.tov_family(p.A, B, sigma_bar=p.sigma_bar, gamma=p.gamma, G=p.G)


def tov_fluid(p: TovParameters, x) -> tc.FluidState:
    rbar = float(np.asarray(x)[1])
    rho = p.density(rbar)
    return tc.FluidState(rho, p.sigma_bar * rho, np.array([1.0 / math.sqrt(p.B(rbar)), 0, 0, 0]))


def tov_structure_residuals(p: TovParameters, rbar: float) -> dict[str, float]:
    """Relative residuals of the TOV system along the closed form."""
    G = p.G
    M = p.mass(rbar)
    rho = p.density(rbar)
    pres = p.pressure(rbar)
    dp = -2.0 * pres / rbar
    A_from_mass = 1.0 - 2.0 * G * M / rbar
    if M == 0.0:
        ove = 0.0
    else:
        lhs = -rbar * rbar * dp
        rhs = G * M * rho * (1.0 + pres / rho) * (1.0 + 4.0 * math.pi * rbar**3 * pres / M) / A_from_mass
        ove = (lhs - rhs) / max(abs(lhs), abs(rhs))
    # dM/dr = 4 pi r^2 rho
    dmdr = (4.0 * math.pi * p.gamma - 4.0 * math.pi * rbar**2 * rho) / max(4.0 * math.pi * abs(p.gamma), 1e-300)
    # B'/B = -2 p'/(p + rho)
    dB_over_B = p.B_exponent / rbar
    target = -2.0 * dp / (pres + rho)
    hydro = (dB_over_B - target) / max(abs(dB_over_B), abs(target), 1e-300)
    return {"ove": ove, "mass": dmdr, "hydrostatic": hydro, "A": A_from_mass - p.A}


# --------------------------------------------------------------------------
# field-equation residual
# --------------------------------------------------------------------------


def validate_field_equations(m: tc.MetricSpec, fluid: Callable[[np.ndarray], tc.FluidState],
                             grid: Iterable, G: float = 1.0) -> float:
    """Max over ``grid`` of ``|G^ab - 8 pi G T^ab|`` normalised by ``max(|G|, |T|, 1)``."""
    worst = 0.0
    for x in grid:
        x = np.asarray(x, dtype=float)
        ginv = tc.inverse_metric(m, x).data
        G_up = ginv @ tc.einstein_array(m, x) @ ginv
        T_up = tc.stress_energy(fluid(x), m, x).data
        diff = np.abs(G_up - 8.0 * math.pi * G * T_up).max()
        scale = max(np.abs(G_up).max(), np.abs(T_up).max(), 1.0)
        worst = max(worst, diff / scale)
    return worst


def interior_grid(t_range: tuple[float, float], r_range: tuple[float, float], n: int = 10,
                  theta: float = 1.1, phi: float = 0.3, guard: float = 1e-6) -> list[np.ndarray]:
    """An ``n x n`` grid in ``(t, r)`` that keeps clear of ``r = 0`` and the poles."""
    r_lo = max(r_range[0], guard)
    theta = min(max(theta, guard), math.pi - guard)
    return [
        np.array([t, r, theta, phi])
        for t in np.linspace(*t_range, n)
        for r in np.linspace(r_lo, r_range[1], n)
    ]
