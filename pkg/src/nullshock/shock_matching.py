"""FRW behind, TOV ahead: the matched solution and its surface identities.

The shock sits where the FRW mass inside ``rbar`` equals the TOV mass
function.  With ``rho = 3 gamma / rbar^2`` this holds identically along the
linear trajectory ``rbar(t)`` of :mod:`nullshock.exact_solutions`.

On the surface the coordinate map ``(t, r) -> (tbar, rbar)`` has the partials
returned by :func:`prop2_partials`; the integrating factor ``psi`` is only
ever evaluated on the surface, through ``1 / (psi C)^2 = B (1 - k r^2) / A``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import surface_geometry as sg
from . import tensor_core as tc
from .errors import AreaDerivativeZero, BadSigma, CharacteristicSurface
from .exact_solutions import (
    FrwParameters,
    TovParameters,
    frw_density,
    frw_metric,
    frw_scale_derivatives,
    gamma_of,
    shock_radius,
    sigma_of_sigma_bar,
    tov_metric,
    tov_solve,
)

NONCHAR_TOL = 1e-8
AREA_TOL = 1e-10


@dataclass(frozen=True)
class MatchedSolution:
    frw: FrwParameters
    tov: TovParameters
    eta: float = 1.0
    perturb_gamma: float = 0.0
    notes: tuple = field(default=(), compare=False)

    @property
    def sigma(self) -> float:
        return self.frw.sigma

    @property
    def sigma_bar(self) -> float:
        return self.tov.sigma_bar

    @property
    def k(self) -> float:
        return self.frw.k

    # -- trajectory -----------------------------------------------------------

    def rbar(self, t: float) -> float:
        return shock_radius(self.frw, t)

    def scale(self, t: float) -> tuple[float, float, float]:
        return frw_scale_derivatives(self.frw, t)

    def r(self, t: float) -> float:
        return self.rbar(t) / self.scale(t)[0]

    def rbar_dot(self, t: float = 0.0) -> float:
        return self.frw.shock_speed

    def r_dot(self, t: float) -> float:
        return self.frw.shock_speed * (1.0 - self.frw.scale_exponent) / self.scale(t)[0]

    def rho(self, t: float) -> float:
        return frw_density(self.frw, t)

    def pressure(self, t: float) -> float:
        return self.frw.sigma * self.rho(t)

    def rho_bar(self, t: float) -> float:
        return self.tov.density(self.rbar(t))

    def pressure_bar(self, t: float) -> float:
        return self.tov.pressure(self.rbar(t))

    def mass_mismatch(self, t: float) -> float:
        """Relative residual of ``(4 pi / 3) rho rbar^3 = M(rbar)``."""
        rbar = self.rbar(t)
        lhs = 4.0 * math.pi / 3.0 * self.rho(t) * rbar**3
        rhs = self.tov.mass(rbar)
        return (lhs - rhs) / max(abs(rhs), 1e-300)

    # -- surface quantities ---------------------------------------------------

    def cde(self, t: float) -> tuple[float, float, float]:
        R, dR, _ = self.scale(t)
        r = self.r(t)
        C = R * R * (1.0 - 8.0 * math.pi * self.frw.G / 3.0 * self.rho(t) * R * R * r * r)
        return C, R * R, -R * dR * self.rbar(t)

    def psi_c_inverse(self, t: float) -> float:
        """``1 / (psi C)`` on the surface, positive root."""
        r = self.r(t)
        return math.sqrt(self.tov.B(self.rbar(t)) * (1.0 - self.k * r * r) / self.tov.A)

    def tbar_rate(self, t: float) -> float:
        """``d tbar / dt`` along the surface."""
        J = frw_to_tov_jacobian(self, t)
        return float(J[0, 0] + J[0, 1] * self.r_dot(t))

    def tbar(self, t: float) -> float:
        t0 = self.frw.t0
        if t == t0:
            return 0.0
        val, _ = integrate.quad(self.tbar_rate, t0, t, epsabs=1e-13, epsrel=1e-12)
        return val

    def left_point(self, t: float, theta: float = math.pi / 2, phi: float = 0.0) -> np.ndarray:
        return np.array([t, self.r(t), theta, phi])

    def right_point(self, t: float, theta: float = math.pi / 2, phi: float = 0.0) -> np.ndarray:
        return np.array([self.tbar(t), self.rbar(t), theta, phi])

    def left_metric(self) -> tc.MetricSpec:
        return frw_metric(self.frw)

    def right_metric(self) -> tc.MetricSpec:
        return tov_metric(self.tov)

    def noncharacteristic_margin(self, t: float) -> float:
        """``|rbar' - C/E|`` with ``C/E`` the reciprocal of ``E/C = -R' r / A``."""
        R, dR, _ = self.scale(t)
        e_over_c = -dR * self.r(t) / self.tov.A
        if e_over_c == 0.0:
            return math.inf
        return abs(self.rbar_dot(t) - 1.0 / e_over_c)


def match(sigma_bar: float, eta: float = 1.0, t0: float = 0.0, rbar0: float = 1.0,
          R0: float = 1.0, B0: float = 1.0, G: float = 1.0, perturb_gamma: float = 0.0,
          sigma: float | None = None) -> MatchedSolution:
    """Join FRW and TOV across the mass-matching surface.

    ``perturb_gamma`` scales the shared density coefficient by ``1 + eps``
    on both sides.  FRW still solves its field equations and the masses still
    match, but the TOV relation between ``gamma`` and ``sigma_bar`` no longer
    holds, so the TOV side picks up an O(eps) field-equation residual (see
    ``TovParameters.gamma_residual``).  ``sigma``
    overrides the FRW equation of state for the same purpose.
    """
    if not 0.0 < sigma_bar <= 1.0:
        raise BadSigma(f"sigma_bar must lie in (0, 1], got {sigma_bar!r}")
    if eta == 0.0:
        raise ValueError("eta must be non-zero")
    s = sigma_of_sigma_bar(sigma_bar) if sigma is None else sigma
    gamma = gamma_of(sigma_bar, G) * (1.0 + perturb_gamma)
    tov = tov_solve(sigma_bar, B0, rbar0, G, gamma=gamma)
    if tov.A == 0.0:
        raise CharacteristicSurface("A = 0: the TOV metric degenerates")
    frw = FrwParameters(s, 0.0, R0, t0, rbar0, 1, G, gamma=gamma)
    notes = ("non-characteristic margin uses C/E = 1/(E/C) with E/C = -R' r / A",)
    ms = MatchedSolution(frw, tov, eta, perturb_gamma, notes)
    if 1.0 - ms.k * ms.r(t0) ** 2 <= 0.0:
        raise CharacteristicSurface("1 - k r^2 <= 0 on the surface")
    if ms.noncharacteristic_margin(t0) < NONCHAR_TOL:
        raise CharacteristicSurface("shock surface is characteristic for the psi equation")
    return ms


# --------------------------------------------------------------------------
# identities on the surface
# --------------------------------------------------------------------------


def prop1_identities(ms: MatchedSolution, t: float) -> dict[str, float]:
    """Relative residuals of the five surface identities relating ``C, D, E``."""
    C, D, E = ms.cde(t)
    R, dR, _ = ms.scale(t)
    r = ms.r(t)
    A = ms.tov.A
    B = ms.tov.B(ms.rbar(t))
    kfac = 1.0 - ms.k * r * r
    psiC_inv2 = ms.psi_c_inverse(t) ** 2

    def rel(a, b):
        return abs(a - b) / max(abs(a), abs(b), 1e-300)

    return {
        "psi": rel(psiC_inv2, B * kfac / A),
        "C": rel(C, R * R * A),
        "E_over_C": rel(E / C, -dR * r / A),
        "E_over_C_squared": rel(E * E / (C * C), (1.0 - A) / (A * A)),
        "Rdot_r": rel(dR * dR * r * r, 1.0 - A - ms.k * r * r),
    }


def prop2_partials(ms: MatchedSolution, t: float) -> np.ndarray:
    """``d(t, r) / d(tbar, rbar)`` on the surface, rows ``(t, r)``."""
    C, _, E = ms.cde(t)
    R = ms.scale(t)[0]
    A = ms.tov.A
    r = ms.r(t)
    kfac = 1.0 - ms.k * r * r
    pc = ms.psi_c_inverse(t)
    return np.array([
        [pc, E / C],
        [A / (R * kfac) * (E / C) * pc, kfac / (R * A)],
    ])


def frw_to_tov_jacobian(ms: MatchedSolution, t: float) -> np.ndarray:
    """``d(tbar, rbar) / d(t, r)`` on the surface, derived independently.

    ``rbar = R(t) r`` gives the second row; the first follows from
    ``d tbar = psi (C dt - E R dr)`` restricted to the surface.
    """
    C, _, E = ms.cde(t)
    R, dR, _ = ms.scale(t)
    r = ms.r(t)
    psi = 1.0 / (ms.psi_c_inverse(t) * C)
    return np.array([
        [psi * (C - E * dR * r), -psi * E * R],
        [dR * r, R],
    ])


def embed_2x2(J2: np.ndarray) -> np.ndarray:
    J = np.eye(tc.DIM)
    J[:2, :2] = J2
    return J


def jacobian_round_trip(ms: MatchedSolution, t: float) -> float:
    return float(np.abs(prop2_partials(ms, t) @ frw_to_tov_jacobian(ms, t) - np.eye(2)).max())


def frw_bar_components(ms: MatchedSolution, t: float, theta: float = math.pi / 2) -> np.ndarray:
    """FRW metric transformed into ``(tbar, rbar)`` on the surface."""
    x = ms.left_point(t, theta)
    g = tc.TensorComponents(ms.left_metric().value(x), 0, 2, x)
    J = embed_2x2(frw_to_tov_jacobian(ms, t))
    Jinv = embed_2x2(prop2_partials(ms, t))
    return tc.transform_tensor(g, J, Jinv).data


# --------------------------------------------------------------------------
# normals, transverse vector, lightlike and conservation residuals
# --------------------------------------------------------------------------


def lightlike_residual(ms: MatchedSolution, t: float) -> float:
    r = ms.r(t)
    R = ms.scale(t)[0]
    return ms.r_dot(t) ** 2 - (1.0 - ms.k * r * r) / (R * R)


def conservation_jump(ms: MatchedSolution, t: float, normalized: bool = False) -> float:
    """``[T^ab N_a N_b]`` for ``N = eta d/dr`` in the comoving FRW chart.

    With ``normalized`` the value is divided by ``eta^2 R^2 rho_bar``.
    """
    R = ms.scale(t)[0]
    r = ms.r(t)
    A = ms.tov.A
    p = ms.pressure(t)
    rb = ms.rho_bar(t)
    pb = ms.pressure_bar(t)
    bracket = (p + rb) / (1.0 - ms.k * r * r) - (pb + rb) / A
    if normalized:
        return bracket / max(rb, 1e-300) if rb > 0 else bracket
    return ms.eta**2 * R * R * bracket


@dataclass(frozen=True)
class SurfaceVectors:
    """Normal and transverse vectors on the surface, both charts."""

    n_lower: np.ndarray
    n_upper: np.ndarray
    nbar_lower: np.ndarray
    nbar_upper: np.ndarray
    N: np.ndarray
    N_lower: np.ndarray
    Nbar: np.ndarray
    Nbar_lower: np.ndarray
    tangents: np.ndarray
    tangents_bar: np.ndarray


def transverse_on_surface(ms: MatchedSolution, t: float, theta: float = math.pi / 2) -> SurfaceVectors:
    """``N = eta d/dr`` and its image in the TOV chart via the tensor law."""
    x = ms.left_point(t, theta)
    xb = ms.right_point(t, theta)
    gl = ms.left_metric().value(x)
    gr = ms.right_metric().value(xb)
    J = embed_2x2(frw_to_tov_jacobian(ms, t))
    Jinv = embed_2x2(prop2_partials(ms, t))
    n_lower = np.array([-ms.r_dot(t), 1.0, 0.0, 0.0])
    nb = tc.transform_tensor(tc.TensorComponents(n_lower, 0, 1, x), J, Jinv).data
    N = np.array([0.0, ms.eta, 0.0, 0.0])
    Nb = tc.transform_tensor(tc.TensorComponents(N, 1, 0, x), J, Jinv).data
    T = np.array([[1.0, 0.0, 0.0], [ms.r_dot(t), 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    Tb = np.column_stack([
        tc.transform_tensor(tc.TensorComponents(T[:, i], 1, 0, x), J, Jinv).data for i in range(3)
    ])
    return SurfaceVectors(n_lower, np.linalg.solve(gl, n_lower), nb, np.linalg.solve(gr, nb),
                          N, gl @ N, Nb, gr @ Nb, T, Tb)


def transverse_jumps(ms: MatchedSolution, t: float) -> dict[str, float]:
    """The three transverse-vector conditions, each as an absolute jump."""
    v = transverse_on_surface(ms, t)
    tang = np.abs(v.N_lower @ v.tangents - v.Nbar_lower @ v.tangents_bar).max()
    return {
        "N_dot_X": float(tang),
        "N_dot_N": float(v.N @ v.N_lower - v.Nbar @ v.Nbar_lower),
        "N_dot_n": float(v.N @ v.n_lower - v.Nbar @ v.nbar_lower),
        "N_dot_n_left_minus_eta": float(v.N @ v.n_lower - ms.eta),
    }


def stress_energy_nn(ms: MatchedSolution, t: float, N_left=None) -> tuple[float, float]:
    """``T(N, N)`` on each side for a left-chart vector ``N`` (default ``eta d/dr``)."""
    x = ms.left_point(t)
    xb = ms.right_point(t)
    N = np.array([0.0, ms.eta, 0.0, 0.0]) if N_left is None else np.asarray(N_left, float)
    Nb = embed_2x2(frw_to_tov_jacobian(ms, t)) @ N
    ml, mr = ms.left_metric(), ms.right_metric()
    rho, p = ms.rho(t), ms.pressure(t)
    rb, pb = ms.rho_bar(t), ms.pressure_bar(t)
    Tl = tc.stress_energy(tc.FluidState(rho, p, tc.comoving_velocity(ml, x)), ml, x).data
    Tr = tc.stress_energy(tc.FluidState(rb, pb, tc.comoving_velocity(mr, xb)), mr, xb).data
    gl, gr = ml.value(x), mr.value(xb)
    Nl, Nbl = gl @ N, gr @ Nb
    return float(Nl @ Tl @ Nl), float(Nbl @ Tr @ Nbl)


# --------------------------------------------------------------------------
# two-sided metric and the jump report
# --------------------------------------------------------------------------


def two_sided(ms: MatchedSolution) -> sg.TwoSidedMetric:
    """Surface parameters ``u = (t, theta, phi)``; FRW left, TOV right."""

    def phi(x):
        return x[1] - ms.r(x[0])

    def grad(x):
        return np.array([-ms.r_dot(x[0]), 1.0, 0.0, 0.0])

    def left_point(u):
        return ms.left_point(u[0], u[1], u[2])

    def right_point(u):
        return ms.right_point(u[0], u[1], u[2])

    def left_tangents(u):
        T = np.zeros((4, 3))
        T[0, 0], T[1, 0] = 1.0, ms.r_dot(u[0])
        T[2, 1] = T[3, 2] = 1.0
        return T

    def push(u):
        return embed_2x2(frw_to_tov_jacobian(ms, u[0]))

    emb = sg.SurfaceEmbedding(left_point, right_point, left_tangents, push)
    return sg.TwoSidedMetric(ms.left_metric(), ms.right_metric(), sg.LevelSurface(phi, grad), emb,
                             name="frw|tov")


def surface_u(ms: MatchedSolution, t: float, theta: float = math.pi / 2, phi: float = 0.0) -> np.ndarray:
    return np.array([t, theta, phi])


def build_chart(ms: MatchedSolution, t: float, theta: float = math.pi / 2, **kwargs) -> sg.MgsChart:
    """MGS chart at the surface point ``(t, theta)``; the seed is ``eta d/dr``."""
    kwargs.setdefault("seed", lambda u: np.array([0.0, ms.eta, 0.0, 0.0]))
    return sg.build_mgs_chart(two_sided(ms), surface_u(ms, t, theta), ms.eta, **kwargs)


@dataclass(frozen=True)
class JumpReport:
    k_jump_norm: float
    k_jump: np.ndarray
    conservation_residual: float
    conservation_normalized: float
    lightlike_residual: float
    c2_jumps: np.ndarray
    noncharacteristic_margin: float
    n_of_area: float
    notes: tuple = ()

    def as_dict(self) -> dict:
        return {
            "k_jump_norm": self.k_jump_norm,
            "k_jump": self.k_jump.tolist(),
            "conservation_residual": self.conservation_residual,
            "conservation_normalized": self.conservation_normalized,
            "lightlike_residual": self.lightlike_residual,
            "c2_jumps": self.c2_jumps.tolist(),
            "noncharacteristic_margin": self.noncharacteristic_margin,
            "n_of_area": self.n_of_area,
            "notes": list(self.notes),
        }


def full_jump_report(ms: MatchedSolution, t: float, chart: sg.MgsChart | None = None) -> JumpReport:
    chart = build_chart(ms, t) if chart is None else chart
    nc = chart.n_derivative_of_area()
    if abs(nc) < AREA_TOL:
        raise AreaDerivativeZero(f"N(c) = {nc:.3e}: area of the symmetry spheres is stationary along N")
    kj = sg.jump_second_form(chart.tm, chart)
    return JumpReport(
        k_jump_norm=kj.norm,
        k_jump=kj.components,
        conservation_residual=conservation_jump(ms, t),
        conservation_normalized=conservation_jump(ms, t, normalized=True),
        lightlike_residual=lightlike_residual(ms, t),
        c2_jumps=sg.extra_c2_condition(chart.tm, chart),
        noncharacteristic_margin=ms.noncharacteristic_margin(t),
        n_of_area=nc,
        notes=ms.notes,
    )
