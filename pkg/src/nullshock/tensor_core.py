"""Pointwise Lorentzian tensor calculus on 4D coordinate charts.

Every metric is a :class:`MetricSpec` carrying hand-coded first and second
partial derivatives, so the whole curvature chain (Christoffel symbols,
Riemann, Ricci, Einstein) is evaluated without numerical differentiation.

Index conventions
-----------------
* ``g.d1(x)[a, b, c]`` is :math:`g_{ab,c}`; ``g.d2(x)[a, b, c, d]`` is
  :math:`g_{ab,cd}`.
* Christoffel symbols are stored as ``gamma[s, a, b]`` =
  :math:`\\Gamma^s_{ab}`.
* Riemann is stored as ``riem[m, a, n, b]`` =
  :math:`R^m{}_{anb} = \\Gamma^m_{ab,n} - \\Gamma^m_{an,b}
  + \\Gamma^m_{sn}\\Gamma^s_{ab} - \\Gamma^m_{sb}\\Gamma^s_{an}` and the Ricci
  tensor is the contraction on the first and third slot.
* In a :class:`TensorComponents` array the contravariant indices come first.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import (
    BadJacobian,
    ChartExit,
    DegenerateMetric,
    OutOfDomain,
    UnnormalizedVelocity,
)

DIM = 4
DEGENERACY_TOL = 1e-12
LIGHTLIKE_TOL = 1e-10
VELOCITY_NORM_TOL = 1e-8

Array = np.ndarray
ScalarFactor = Callable[[float], tuple[float, float, float]]


# --------------------------------------------------------------------------
# data types
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SpacetimePoint:
    chart: str
    coords: Array

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float)
        if coords.shape != (DIM,) or not np.all(np.isfinite(coords)):
            raise ValueError(f"expected 4 finite coordinates, got {self.coords!r}")
        object.__setattr__(self, "coords", coords)


@dataclass(frozen=True)
class TensorComponents:
    """Components of a rank (k, l) tensor at a point."""

    data: Array
    contravariant_rank: int
    covariant_rank: int
    point: Array | None = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        rank = self.contravariant_rank + self.covariant_rank
        if data.shape != (DIM,) * rank:
            raise ValueError(
                f"rank ({self.contravariant_rank},{self.covariant_rank}) tensor "
                f"needs shape {(DIM,) * rank}, got {data.shape}"
            )
        object.__setattr__(self, "data", data)

    @property
    def rank(self) -> tuple[int, int]:
        return self.contravariant_rank, self.covariant_rank

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    def __getitem__(self, idx):
        return self.data[idx]


@dataclass(frozen=True)
class FluidState:
    rho: float
    p: float
    u: Array

    def __post_init__(self):
        object.__setattr__(self, "u", np.asarray(self.u, dtype=float))
        if self.rho < 0:
            raise ValueError("energy density must be non-negative")


class CausalType(enum.Enum):
    SPACELIKE = "spacelike"
    LIGHTLIKE = "lightlike"
    TIMELIKE = "timelike"


@dataclass(frozen=True)
class MetricSpec:
    """A metric family with analytic first and second partial derivatives.

    Instances are immutable; ``value``, ``d1`` and ``d2`` are pure functions of
    the coordinates and raise :class:`OutOfDomain` outside the chart.
    """

    family: str
    params: Mapping[str, float]
    value_fn: Callable[[Array], Array] = field(repr=False)
    d1_fn: Callable[[Array], Array] = field(repr=False)
    d2_fn: Callable[[Array], Array] = field(repr=False)
    domain_fn: Callable[[Array], None] | None = field(default=None, repr=False)
    chart: str = "cartesian"
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "params", MappingProxyType(dict(self.params)))

    def check_domain(self, x) -> Array:
        x = _coords(x)
        if self.domain_fn is not None:
            self.domain_fn(x)
        return x

    def value(self, x) -> Array:
        return self.value_fn(self.check_domain(x))

    def d1(self, x) -> Array:
        d = self.d1_fn(self.check_domain(x))
        # exact symmetry in the metric pair; addition is commutative in IEEE
        return 0.5 * (d + d.transpose(1, 0, 2))

    def d2(self, x) -> Array:
        d = self.d2_fn(self.check_domain(x))
        d = 0.5 * (d + d.transpose(1, 0, 2, 3))
        return 0.5 * (d + d.transpose(0, 1, 3, 2))

    def point(self, coords) -> SpacetimePoint:
        return SpacetimePoint(self.chart, coords)


def _coords(x) -> Array:
    if isinstance(x, SpacetimePoint):
        return x.coords
    return np.asarray(x, dtype=float)


# --------------------------------------------------------------------------
# metric families
# --------------------------------------------------------------------------


def _const(c: float) -> ScalarFactor:
    return lambda _x: (c, 0.0, 0.0)


def _power(n: int) -> ScalarFactor:
    def f(x):
        if n == 0:
            return 1.0, 0.0, 0.0
        if n == 1:
            return x, 1.0, 0.0
        return x**n, n * x ** (n - 1), n * (n - 1) * x ** (n - 2)

    return f


def _sin2(th: float) -> tuple[float, float, float]:
    return np.sin(th) ** 2, np.sin(2.0 * th), 2.0 * np.cos(2.0 * th)


def separable_diagonal(
    factors: Sequence[Mapping[int, ScalarFactor]],
    signs: Sequence[float],
) -> tuple[Callable, Callable, Callable]:
    """Build value/d1/d2 for a diagonal metric with product-form components.

    ``g_ii = signs[i] * prod_v factors[i][v](x[v])`` where each factor returns
    its value and first two derivatives in its own coordinate.
    """

    def evaluate(x):
        vals = np.zeros(DIM)
        grads = np.zeros((DIM, DIM))
        hess = np.zeros((DIM, DIM, DIM))
        for i in range(DIM):
            f = np.ones(DIM)
            df = np.zeros(DIM)
            ddf = np.zeros(DIM)
            for v, fac in factors[i].items():
                f[v], df[v], ddf[v] = fac(x[v])
            total = signs[i] * np.prod(f)
            vals[i] = total
            for v in range(DIM):
                others = signs[i] * np.prod(np.delete(f, v))
                grads[i, v] = df[v] * others
                hess[i, v, v] = ddf[v] * others
                for w in range(v + 1, DIM):
                    rest = signs[i] * np.prod(np.delete(f, [v, w]))
                    hess[i, v, w] = hess[i, w, v] = df[v] * df[w] * rest
        return vals, grads, hess

    def value(x):
        return np.diag(evaluate(x)[0])

    def d1(x):
        out = np.zeros((DIM, DIM, DIM))
        grads = evaluate(x)[1]
        for i in range(DIM):
            out[i, i, :] = grads[i]
        return out

    def d2(x):
        out = np.zeros((DIM, DIM, DIM, DIM))
        hess = evaluate(x)[2]
        for i in range(DIM):
            out[i, i] = hess[i]
        return out

    return value, d1, d2


def minkowski(spherical: bool = False) -> MetricSpec:
    """Flat metric, Cartesian ``(t, x, y, z)`` or spherical ``(t, r, theta, phi)``."""
    if spherical:
        factors = [{}, {}, {1: _power(2)}, {1: _power(2), 2: _sin2}]
        value, d1, d2 = separable_diagonal(factors, [-1.0, 1.0, 1.0, 1.0])
        return MetricSpec("Minkowski", {"spherical": 1.0}, value, d1, d2,
                          _spherical_domain, chart="spherical")
    eta = np.diag([-1.0, 1.0, 1.0, 1.0])
    return MetricSpec(
        "Minkowski",
        {"spherical": 0.0},
        lambda x: eta.copy(),
        lambda x: np.zeros((DIM,) * 3),
        lambda x: np.zeros((DIM,) * 4),
        chart="cartesian",
    )


def _spherical_domain(x):
    if not np.all(np.isfinite(x)):
        raise OutOfDomain(f"non-finite coordinates {x}")
    if x[1] <= 0.0:
        raise OutOfDomain(f"radial coordinate must be positive, got r={x[1]}")


def frw_family(scale_factor: ScalarFactor, k: float = 0.0, **params) -> MetricSpec:
    """FRW metric ``-dt^2 + R^2/(1-k r^2) dr^2 + r^2 R^2 dOmega^2``.

    ``scale_factor(t)`` returns ``(R, R', R'')``.
    """

    def area(r):
        return r * r, 2.0 * r, 2.0

    def radial(r):
        f = 1.0 / (1.0 - k * r * r)
        df = 2.0 * k * r * f * f
        ddf = 2.0 * k * f * f + 8.0 * k * k * r * r * f**3
        return f, df, ddf

    def r2(t):
        R, dR, ddR = scale_factor(t)
        return R * R, 2.0 * R * dR, 2.0 * (dR * dR + R * ddR)

    factors = [
        {},
        {0: r2, 1: radial},
        {0: r2, 1: area},
        {0: r2, 1: area, 2: _sin2},
    ]
    value, d1, d2 = separable_diagonal(factors, [-1.0, 1.0, 1.0, 1.0])

    def domain(x):
        _spherical_domain(x)
        if 1.0 - k * x[1] ** 2 <= 0.0:
            raise OutOfDomain(f"1 - k r^2 <= 0 at r={x[1]}, k={k}")
        scale_factor(x[0])

    return MetricSpec("FRW", {"k": k, **params}, value, d1, d2, domain,
                      chart="frw")


def tov_family(A: float, B: ScalarFactor, **params) -> MetricSpec:
    """Static metric ``-B(r) dt^2 + dr^2/A + r^2 dOmega^2`` with constant ``A``."""
    if A == 0.0:
        raise OutOfDomain("TOV metric needs A != 0")
    factors = [
        {1: B},
        {},
        {1: _power(2)},
        {1: _power(2), 2: _sin2},
    ]
    value, d1, d2 = separable_diagonal(factors, [-1.0, 1.0 / A, 1.0, 1.0])
    return MetricSpec("TOV", {"A": A, **params}, value, d1, d2,
                      _spherical_domain, chart="tov")


def custom_metric(value, d1, d2, domain=None, chart="custom", **params) -> MetricSpec:
    return MetricSpec("Custom", params, value, d1, d2, domain, chart=chart)


# --------------------------------------------------------------------------
# curvature chain
# --------------------------------------------------------------------------


def _inverse(m: MetricSpec, x) -> tuple[Array, Array]:
    g = m.value(x)
    det = np.linalg.det(g)
    if not np.isfinite(det) or abs(det) <= DEGENERACY_TOL * m.scale**4:
        raise DegenerateMetric(f"|det g| = {abs(det):.3e} at {np.asarray(x)}")
    ginv = np.linalg.inv(g)
    return g, 0.5 * (ginv + ginv.T)


def inverse_metric(m: MetricSpec, x) -> TensorComponents:
    return TensorComponents(_inverse(m, x)[1], 2, 0, _coords(x))


def _christoffel_lower(d1: Array) -> Array:
    # lower[c, a, b] = 1/2 (-g_ab,c + g_ca,b + g_bc,a)
    return 0.5 * (-d1.transpose(2, 0, 1) + (d1 + d1.transpose(1, 2, 0)))


def christoffel_array(m: MetricSpec, x) -> Array:
    _, ginv = _inverse(m, x)
    gam = np.einsum("sc,cab->sab", ginv, _christoffel_lower(m.d1(x)))
    return 0.5 * (gam + gam.transpose(0, 2, 1))


def christoffel(m: MetricSpec, x) -> TensorComponents:
    return TensorComponents(christoffel_array(m, x), 1, 2, _coords(x))


def christoffel_with_derivatives(m: MetricSpec, x) -> tuple[Array, Array]:
    """Return ``gamma[s,a,b]`` and ``dgamma[s,a,b,n]`` = :math:`\\Gamma^s_{ab,n}`."""
    _, ginv = _inverse(m, x)
    d1 = m.d1(x)
    d2 = m.d2(x)
    low = _christoffel_lower(d1)
    # dlow[c, a, b, n] = 1/2 (-g_ab,cn + g_ca,bn + g_bc,an)
    dlow = 0.5 * (
        -d2.transpose(2, 0, 1, 3)
        + (d2 + d2.transpose(1, 2, 0, 3))
    )
    dginv = -np.einsum("sa,abn,bc->scn", ginv, d1, ginv)
    gam = np.einsum("sc,cab->sab", ginv, low)
    gam = 0.5 * (gam + gam.transpose(0, 2, 1))
    dgam = np.einsum("scn,cab->sabn", dginv, low) + np.einsum("sc,cabn->sabn", ginv, dlow)
    dgam = 0.5 * (dgam + dgam.transpose(0, 2, 1, 3))
    return gam, dgam


def riemann_array(m: MetricSpec, x) -> Array:
    gam, dgam = christoffel_with_derivatives(m, x)
    # R^m_{anb} = G^m_{ab,n} - G^m_{an,b} + G^m_{sn} G^s_{ab} - G^m_{sb} G^s_{an}
    term1 = dgam.transpose(0, 1, 3, 2)  # [m,a,n,b] <- dgam[m,a,b,n]
    term2 = dgam  # [m,a,n,b] = G^m_{an,b}
    term3 = np.einsum("msn,sab->manb", gam, gam)
    term4 = np.einsum("msb,san->manb", gam, gam)
    return term1 - term2 + term3 - term4


def riemann(m: MetricSpec, x) -> TensorComponents:
    return TensorComponents(riemann_array(m, x), 1, 3, _coords(x))


def ricci_array(m: MetricSpec, x) -> Array:
    return np.einsum("nanb->ab", riemann_array(m, x))


def ricci(m: MetricSpec, x) -> TensorComponents:
    return TensorComponents(ricci_array(m, x), 0, 2, _coords(x))


def ricci_scalar(m: MetricSpec, x) -> float:
    _, ginv = _inverse(m, x)
    return float(np.einsum("ab,ab->", ginv, ricci_array(m, x)))


def einstein_array(m: MetricSpec, x) -> Array:
    g, ginv = _inverse(m, x)
    ric = ricci_array(m, x)
    scalar = np.einsum("ab,ab->", ginv, ric)
    G = ric - 0.5 * g * scalar
    return 0.5 * (G + G.T)


def einstein(m: MetricSpec, x) -> TensorComponents:
    return TensorComponents(einstein_array(m, x), 0, 2, _coords(x))


def einstein_mixed_from_riemann(m: MetricSpec, x) -> Array:
    """Mixed Einstein tensor :math:`G^a{}_b` from sums of Riemann components.

    Diagonal entries are minus the sum of the sectional components
    :math:`R^{st}{}_{st}` (``s < t``) over planes not containing the index;
    off-diagonal entries sum :math:`R^{at}{}_{bt}` over ``t`` not in
    ``{a, b}``.
    """
    _, ginv = _inverse(m, x)
    riem = riemann_array(m, x)
    # mixed[s, t, m, n] = R^{st}_{mn} = g^{tl} R^s_{lmn}
    mixed = np.einsum("tl,slmn->stmn", ginv, riem)
    out = np.zeros((DIM, DIM))
    for a in range(DIM):
        rest = [i for i in range(DIM) if i != a]
        out[a, a] = -sum(
            mixed[s, t, s, t] for i, s in enumerate(rest) for t in rest[i + 1:]
        )
        for b in range(DIM):
            if b != a:
                out[a, b] = sum(mixed[a, t, b, t] for t in range(DIM) if t not in (a, b))
    return out


# --------------------------------------------------------------------------
# index gymnastics and transformations
# --------------------------------------------------------------------------


def lower_index(m: MetricSpec, x, v) -> Array:
    return m.value(x) @ np.asarray(v, dtype=float)


def raise_index(m: MetricSpec, x, w) -> Array:
    return _inverse(m, x)[1] @ np.asarray(w, dtype=float)


def inner(m: MetricSpec, x, u, v) -> float:
    return float(np.asarray(u, float) @ m.value(x) @ np.asarray(v, float))


def classify_vector(m: MetricSpec, x, v) -> CausalType:
    v = np.asarray(v, dtype=float)
    norm = inner(m, x, v, v)
    if abs(norm) <= LIGHTLIKE_TOL * float(v @ v):
        return CausalType.LIGHTLIKE
    return CausalType.TIMELIKE if norm < 0 else CausalType.SPACELIKE


def transform_tensor(T: TensorComponents, jacobian, inverse_jacobian,
                     point=None) -> TensorComponents:
    """Apply the tensor transformation law.

    ``jacobian[a, m]`` is :math:`\\partial y^a/\\partial x^m` (new over old) and
    ``inverse_jacobian[n, b]`` is :math:`\\partial x^n/\\partial y^b`.
    """
    J = np.asarray(jacobian, dtype=float)
    Jinv = np.asarray(inverse_jacobian, dtype=float)
    if J.shape != (DIM, DIM) or Jinv.shape != (DIM, DIM):
        raise BadJacobian("jacobians must be 4x4")
    if not np.allclose(J @ Jinv, np.eye(DIM), rtol=0.0, atol=1e-10):
        raise BadJacobian("jacobian and inverse jacobian are not inverse to each other")
    data = T.data
    k, l = T.contravariant_rank, T.covariant_rank
    for slot in range(k + l):
        mat = J if slot < k else Jinv.T
        data = np.moveaxis(np.tensordot(mat, data, axes=([1], [slot])), 0, slot)
    return TensorComponents(data, k, l, point)


# --------------------------------------------------------------------------
# matter
# --------------------------------------------------------------------------


def stress_energy(f: FluidState, m: MetricSpec, x) -> TensorComponents:
    g, ginv = _inverse(m, x)
    u = f.u
    norm = float(u @ g @ u)
    if abs(norm + 1.0) > VELOCITY_NORM_TOL:
        raise UnnormalizedVelocity(f"g(u,u) = {norm!r}, expected -1")
    T = f.p * ginv + (f.p + f.rho) * np.outer(u, u)
    return TensorComponents(0.5 * (T + T.T), 2, 0, _coords(x))


def comoving_velocity(m: MetricSpec, x) -> Array:
    """Four-velocity at rest in the chart, ``u^0 = 1/sqrt(-g_00)``."""
    g00 = m.value(x)[0, 0]
    if g00 >= 0:
        raise UnnormalizedVelocity("g_00 >= 0: no comoving timelike observer")
    return np.array([1.0 / np.sqrt(-g00), 0.0, 0.0, 0.0])


def _central_partials(sampler: Callable[[Array], Array], x: Array, h: Array) -> Array:
    """Partials of an array-valued field, Richardson-extrapolated central FD."""
    base = np.asarray(sampler(x))
    out = np.zeros(base.shape + (DIM,))
    for c in range(DIM):
        e = np.zeros(DIM)
        e[c] = h[c]
        d1 = (np.asarray(sampler(x + e)) - np.asarray(sampler(x - e))) / (2 * h[c])
        d2 = (np.asarray(sampler(x + 2 * e)) - np.asarray(sampler(x - 2 * e))) / (4 * h[c])
        out[..., c] = (4.0 * d1 - d2) / 3.0
    return out


def covariant_divergence(field_sampler: Callable[[Array], Array], m: MetricSpec, x,
                         h: float | Sequence[float] = 1e-3) -> Array:
    """:math:`\\nabla_b T^{ab}` for a rank (2,0) field given as a sampler.

    The connection terms are analytic; the partials of ``T`` use
    Richardson-extrapolated central differences with step ``h`` per coordinate.
    """
    x = _coords(x)
    hh = np.broadcast_to(np.asarray(h, dtype=float), (DIM,)).copy()

    def sample(y):
        val = field_sampler(y)
        return val.data if isinstance(val, TensorComponents) else np.asarray(val)

    T = sample(x)
    dT = _central_partials(sample, x, hh)
    gam = christoffel_array(m, x)
    return (
        np.einsum("abb->a", dT)
        + np.einsum("abs,sb->a", gam, T)
        + np.einsum("bbs,as->a", gam, T)
    )


def metric_covariant_derivative(m: MetricSpec, x) -> Array:
    """:math:`g_{ab;c}` from the analytic derivatives; vanishes identically."""
    g = m.value(x)
    gam = christoffel_array(m, x)
    return m.d1(x) - np.einsum("sac,sb->abc", gam, g) - np.einsum("sbc,as->abc", gam, g)


# --------------------------------------------------------------------------
# geodesics
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GeodesicCurve:
    s: Array
    x: Array
    v: Array

    def norms(self, m: MetricSpec) -> Array:
        return np.array([inner(m, xi, vi, vi) for xi, vi in zip(self.x, self.v)])


def geodesic_rhs(m: MetricSpec, state: Array) -> Array:
    x, v = state[:DIM], state[DIM:]
    gam = christoffel_array(m, x)
    return np.concatenate([v, -np.einsum("abc,b,c->a", gam, v, v)])


def rk4_step(rhs: Callable[[Array], Array], y: Array, ds: float) -> Array:
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * ds * k1)
    k3 = rhs(y + 0.5 * ds * k2)
    k4 = rhs(y + ds * k3)
    return y + ds / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def geodesic_integrate(m: MetricSpec, x0, v0, s_span: tuple[float, float],
                       steps: int = 200) -> GeodesicCurve:
    """Classical fixed-step RK4 integration of the geodesic equation."""
    x0 = _coords(x0)
    v0 = np.asarray(v0, dtype=float)
    if not np.all(np.isfinite(v0)):
        raise ValueError("initial tangent must be finite")
    s = np.linspace(s_span[0], s_span[1], steps + 1)
    ds = s[1] - s[0]
    y = np.concatenate([x0, v0])
    out = np.empty((steps + 1, 2 * DIM))
    out[0] = y
    rhs = lambda state: geodesic_rhs(m, state)  # noqa: E731
    for i in range(steps):
        try:
            y = rk4_step(rhs, y, ds)
            m.check_domain(y[:DIM])
        except (OutOfDomain, DegenerateMetric) as exc:
            raise ChartExit(f"geodesic left the chart at s={s[i + 1]:.6g}: {exc}") from exc
        out[i + 1] = y
    return GeodesicCurve(s, out[:, :DIM], out[:, DIM:])


def geodesic_residual(m: MetricSpec, curve: GeodesicCurve) -> Array:
    """Residual of the geodesic equation at interior samples (central FD of v)."""
    ds = curve.s[1] - curve.s[0]
    acc = (curve.v[2:] - curve.v[:-2]) / (2 * ds)
    res = []
    for xi, vi, ai in zip(curve.x[1:-1], curve.v[1:-1], acc):
        gam = christoffel_array(m, xi)
        res.append(ai + np.einsum("abc,b,c->a", gam, vi, vi))
    return np.asarray(res)
