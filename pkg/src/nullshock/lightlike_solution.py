"""Lightlike condition ``s(sigma) = 1``, shock kinematics and characteristic speeds."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import BadSigma, BranchError, NoRoot
from .exact_solutions import eos_H, eos_denominator, frw_density, frw_scale, shock_radius

SMOLLER_TEMPLE_SIGMA = 0.745
REPORTED_SIGMA2 = 0.63442
REPORTED_SQRT_SIGMA2 = 0.79650
REPORTED_LAMBDA_TOV_PLUS = -0.45040


def _check_sigma(sigma: float, open_left: bool = False) -> None:
    lo_ok = sigma > 0.0 if open_left else sigma >= 0.0
    if not (lo_ok and sigma <= 1.0):
        raise BadSigma(f"sigma out of range: {sigma!r}")


@dataclass(frozen=True)
class EosRelation:
    sigma: float
    sigma_bar: float

    @classmethod
    def from_sigma(cls, sigma: float) -> "EosRelation":
        return cls(sigma, eos_H(sigma))

    @property
    def residual(self) -> float:
        return self.sigma_bar - eos_H(self.sigma)


def shock_speed(sigma: float) -> float:
    """Shock speed relative to the FRW fluid in a locally flat frame."""
    _check_sigma(sigma)
    sb = eos_H(sigma)
    return (1.0 + 3.0 * sigma) * math.sqrt(max(sb, 0.0) / eos_denominator(sb))


# --------------------------------------------------------------------------
# root finding
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RootResult:
    root: float
    residual: float
    iterations: int
    bracket: tuple[float, float]


def bisect_secant(f: Callable[[float], float], lo: float, hi: float,
                  width: float = 1e-10, polish: int = 2, max_iter: int = 200) -> RootResult:
    """Bisection down to ``width`` followed by ``polish`` secant steps.

    Secant iterates that leave the final bracket are discarded.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return RootResult(lo, 0.0, 0, (lo, hi))
    if fhi == 0.0:
        return RootResult(hi, 0.0, 0, (lo, hi))
    if np.sign(flo) == np.sign(fhi):
        raise NoRoot(f"no sign change on [{lo}, {hi}]: f = {flo:.3e}, {fhi:.3e}")
    it = 0
    while hi - lo > width and it < max_iter:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        it += 1
        if fm == 0.0:
            return RootResult(mid, 0.0, it, (lo, hi))
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    x0, f0, x1, f1 = lo, flo, hi, fhi
    best, fbest = (lo, flo) if abs(flo) < abs(fhi) else (hi, fhi)
    for _ in range(polish):
        if f1 == f0:
            break
        x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
        if not lo <= x2 <= hi:
            break
        f2 = f(x2)
        it += 1
        if abs(f2) <= abs(fbest):
            best, fbest = x2, f2
        x0, f0, x1, f1 = x1, f1, x2, f2
    return RootResult(best, fbest, it, (lo, hi))


def solve_lightlike(lo: float = 1e-6, hi: float = 1.0 - 1e-6) -> RootResult:
    """The unique ``sigma`` with ``s(sigma) = 1``."""
    return bisect_secant(lambda s: shock_speed(s) - 1.0, lo, hi)


def sigma2() -> float:
    return solve_lightlike().root


# --------------------------------------------------------------------------
# characteristics and the Lax test
# --------------------------------------------------------------------------


def tov_characteristic_printed(sigma_bar: float) -> float:
    """Outgoing TOV sound speed in the FRW-comoving frame, formula as published."""
    q = math.sqrt(eos_denominator(sigma_bar))
    c = math.sqrt(sigma_bar)
    return (c * q - 2.0 * c) / (q - 2.0 * sigma_bar)


def tov_characteristic_minus(sigma_bar: float) -> float:
    """Incoming companion of :func:`tov_characteristic_printed`.

    The printed formula is the relativistic velocity sum of the static sound
    speed ``+sqrt(sigma_bar)`` with the fluid frame velocity ``-2 sqrt(sigma_bar)/q``;
    replacing the sound speed by its negative gives this branch.
    """
    q = math.sqrt(eos_denominator(sigma_bar))
    c = math.sqrt(sigma_bar)
    w = 2.0 * c / q
    return (-c - w) / (1.0 + c * w)


@dataclass(frozen=True)
class ShockKinematics:
    sigma: float
    sigma_bar: float
    s: float
    rbar_dot: float
    lambda_frw_plus: float
    lambda_frw_minus: float
    lambda_tov_plus: float
    lambda_tov_minus: float
    lambda_tov_plus_reported: float = REPORTED_LAMBDA_TOV_PLUS

    @property
    def lambda_tov_discrepancy(self) -> float:
        return self.lambda_tov_plus - self.lambda_tov_plus_reported


def characteristics(sigma: float) -> ShockKinematics:
    _check_sigma(sigma, open_left=True)
    sb = eos_H(sigma)
    root = math.sqrt(sb / eos_denominator(sb))
    lam = math.sqrt(sigma)
    return ShockKinematics(
        sigma=sigma,
        sigma_bar=sb,
        s=shock_speed(sigma),
        rbar_dot=3.0 * (1.0 + sigma) * root,
        lambda_frw_plus=lam,
        lambda_frw_minus=-lam,
        lambda_tov_plus=tov_characteristic_printed(sb),
        lambda_tov_minus=tov_characteristic_minus(sb),
    )


class LaxClass(enum.Enum):
    LAX_SATISFIED = "LaxSatisfied"
    CROSSING_SHOCK = "CrossingShock"
    UNCLASSIFIED = "Unclassified"


@dataclass(frozen=True)
class LaxReport:
    classification: LaxClass
    kinematics: ShockKinematics
    inequalities: dict = field(default_factory=dict)


def lax_classify(sigma: float) -> LaxReport:
    """Compare the shock speed against both families of characteristics.

    ``CROSSING_SHOCK`` means every characteristic on both sides is slower
    than the shock; ``UNCLASSIFIED`` covers configurations that are neither.
    """
    k = characteristics(sigma)
    ineq = {
        "tov_plus_lt_s": k.lambda_tov_plus < k.s,
        "s_lt_frw_plus": k.s < k.lambda_frw_plus,
        "frw_minus_lt_frw_plus": k.lambda_frw_minus < k.lambda_frw_plus,
        "frw_plus_lt_s": k.lambda_frw_plus < k.s,
        "tov_minus_lt_tov_plus": k.lambda_tov_minus < k.lambda_tov_plus,
    }
    if ineq["tov_plus_lt_s"] and ineq["s_lt_frw_plus"]:
        cls = LaxClass.LAX_SATISFIED
    elif ineq["frw_plus_lt_s"] and ineq["tov_plus_lt_s"]:
        cls = LaxClass.CROSSING_SHOCK
    else:
        cls = LaxClass.UNCLASSIFIED
    return LaxReport(cls, k, ineq)


def subluminal_comparison() -> dict:
    here = sigma2()
    return {
        "sigma2_here": here,
        "sigma2_reported": REPORTED_SIGMA2,
        "sigma2_smoller_temple": SMOLLER_TEMPLE_SIGMA,
        "difference": SMOLLER_TEMPLE_SIGMA - here,
        "equal": math.isclose(here, SMOLLER_TEMPLE_SIGMA, abs_tol=1e-4),
    }


# --------------------------------------------------------------------------
# trajectory
# --------------------------------------------------------------------------

TRAJECTORY_COLUMNS = ("t", "rbar", "r", "rho", "R", "rbar_dot", "r_dot")


def trajectory(ms, t_range: tuple[float, float], steps: int = 100) -> np.ndarray:
    """Rows ``(t, rbar, r, rho, R, rbar_dot, r_dot)`` along the shock.

    ``ms`` is a :class:`~nullshock.shock_matching.MatchedSolution`; ``steps``
    is the number of rows (endpoints included).
    """
    p = ms.frw
    if p.sign != 1:
        raise BranchError("only the outgoing branch of the shock position is supported")
    if steps < 1:
        raise ValueError("steps must be positive")
    ts = np.linspace(t_range[0], t_range[1], steps) if steps > 1 else np.array([t_range[0]])
    rows = np.empty((len(ts), len(TRAJECTORY_COLUMNS)))
    v = p.shock_speed
    for i, t in enumerate(ts):
        rbar = shock_radius(p, t)
        R = frw_scale(p, t)
        # r = rbar / R with R' = a v R / rbar gives r' = v (1 - a) / R
        rows[i] = (t, rbar, rbar / R, frw_density(p, t), R, v, v * (1.0 - p.scale_exponent) / R)
    return rows
