"""Hypersurfaces in a two-sided spacetime: normals, transverse vectors and MGS charts.

A :class:`TwoSidedMetric` glues a *left* metric (behind the surface, level
function negative) to a *right* metric (ahead, level function positive).  The
surface is described by an embedding ``u -> x`` into each chart, where
``u = (u0, u1, u2)`` are surface parameters, and by the jacobian ``push(u)``
identifying left and right tangent spaces at the surface.

Modified Gaussian skew (MGS) coordinates ``w = (w0, w1, w2, w3)`` are built
from a fan of geodesics leaving the surface along a transverse field ``N``:
``w0`` is the affine parameter (negative on the left, positive on the right),
``w1`` runs along the null generator ``n`` and ``w2, w3`` are the remaining
surface parameters, orthonormalised at the base point.  Derivatives of the
metric in ``w0`` come from Jacobi fields carried along each geodesic, so no
finite differences straddle the surface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import tensor_core as tc
from .errors import (
    ChartExit,
    DegenerateMetric,
    NoTransverse,
    OutOfDomain,
    PatchTooLarge,
    ZeroGradient,
)

Array = np.ndarray
LEFT, RIGHT = "left", "right"
SIDES = (LEFT, RIGHT)

NULL_TOL = 1e-8
TRANSVERSE_TOL = 1e-10
CONDITION_LIMIT = 1e6
# one-sided 5-point first-derivative stencil on offsets 0, h, ..., 4h
ONE_SIDED = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0


# --------------------------------------------------------------------------
# surfaces and normals
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LevelSurface:
    """Zero set of ``phi``; ``phi < 0`` is the left side, ``phi > 0`` the right."""

    phi: Callable[[Array], float]
    grad: Optional[Callable[[Array], Array]] = None
    fd_step: float = 1e-5

    def value(self, x) -> float:
        return float(self.phi(np.asarray(x, dtype=float)))

    def gradient(self, x) -> Array:
        x = np.asarray(x, dtype=float)
        if self.grad is not None:
            return np.asarray(self.grad(x), dtype=float)
        out = np.zeros(tc.DIM)
        h = self.fd_step
        for i in range(tc.DIM):
            e = np.zeros(tc.DIM)
            e[i] = h
            d1 = (self.phi(x + e) - self.phi(x - e)) / (2 * h)
            d2 = (self.phi(x + 2 * e) - self.phi(x - 2 * e)) / (4 * h)
            out[i] = (4 * d1 - d2) / 3
        return out

    def side(self, x) -> str:
        return LEFT if self.value(x) < 0 else RIGHT


def surface_normal(s: LevelSurface, m: tc.MetricSpec, x) -> tuple[Array, Array]:
    """Covariant ``n_a = phi_,a`` and contravariant ``n^a = g^ab n_b``."""
    lower = s.gradient(x)
    if not np.any(np.abs(lower) > 1e-14):
        raise ZeroGradient(f"level function has vanishing gradient at {np.asarray(x)}")
    return lower, tc.raise_index(m, x, lower)


def normal_norm(m: tc.MetricSpec, x, n_lower) -> float:
    n_lower = np.asarray(n_lower, dtype=float)
    return float(n_lower @ tc.raise_index(m, x, n_lower))


def is_lightlike(s: LevelSurface, m: tc.MetricSpec, x) -> tuple[bool, float]:
    lower, _ = surface_normal(s, m, x)
    res = normal_norm(m, x, lower)
    return abs(res) < NULL_TOL * float(lower @ lower), res


@dataclass(frozen=True)
class TransverseVector:
    components: Array
    lower: Array
    eta: float
    point: Array

    @property
    def norm(self) -> float:
        return float(self.components @ self.lower)


def choose_transverse(m: tc.MetricSpec, x, n_lower, eta: float = 1.0, seed=None,
                      tangents=None, normalize: bool = True) -> TransverseVector:
    """A vector ``N`` with ``<N, n> = eta``, orthogonal to ``tangents``.

    ``seed`` defaults to the covector components of ``n`` read as a vector,
    which always pairs positively with ``n``.  With ``normalize`` and a null
    surface, ``N`` is shifted along ``n`` so that ``<N, N> = 1``.
    """
    if eta == 0.0:
        raise ValueError("eta must be non-zero")
    x = np.asarray(x, dtype=float)
    n_lower = np.asarray(n_lower, dtype=float)
    n_upper = tc.raise_index(m, x, n_lower)
    N = n_lower.copy() if seed is None else np.asarray(seed, dtype=float).copy()
    pairing = float(N @ n_lower)
    if abs(pairing) <= TRANSVERSE_TOL * max(np.linalg.norm(N) * np.linalg.norm(n_lower), 1e-300):
        raise NoTransverse("candidate vector is tangent to the surface")
    N *= eta / pairing
    g = m.value(x)
    if tangents is not None:
        X = np.asarray(tangents, dtype=float).reshape(tc.DIM, -1)
        gram = X.T @ g @ X
        lam = np.linalg.solve(gram, -(X.T @ g @ N))
        N = N + X @ lam
        # keep <N, n> exact when a tangent set is not orthogonal to n
        N *= eta / float(N @ n_lower)
    null = abs(float(n_lower @ n_upper)) < NULL_TOL * float(n_lower @ n_lower)
    if normalize and null:
        N = N + (1.0 - float(N @ g @ N)) / (2.0 * eta) * n_upper
    return TransverseVector(N, g @ N, eta, x)


# --------------------------------------------------------------------------
# two-sided metric
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SurfaceEmbedding:
    """The surface as seen from both charts.

    ``left_tangents(u)`` is the 4x3 matrix of columns ``dx/du^i`` in the left
    chart; ``push(u)`` maps left contravariant components to right ones.
    """

    left_point: Callable[[Array], Array]
    right_point: Callable[[Array], Array]
    left_tangents: Callable[[Array], Array]
    push: Callable[[Array], Array]


@dataclass(frozen=True)
class TwoSidedMetric:
    left: tc.MetricSpec
    right: tc.MetricSpec
    surface: LevelSurface
    embedding: SurfaceEmbedding
    name: str = "two-sided"

    def metric(self, side: str) -> tc.MetricSpec:
        return self.left if side == LEFT else self.right

    def point(self, u, side: str) -> Array:
        u = np.asarray(u, dtype=float)
        f = self.embedding.left_point if side == LEFT else self.embedding.right_point
        return np.asarray(f(u), dtype=float)

    def tangents(self, u, side: str) -> Array:
        u = np.asarray(u, dtype=float)
        T = np.asarray(self.embedding.left_tangents(u), dtype=float)
        return T if side == LEFT else self.push(u) @ T

    def push(self, u) -> Array:
        return np.asarray(self.embedding.push(np.asarray(u, dtype=float)), dtype=float)

    def transport(self, u, v_left, side: str) -> Array:
        v_left = np.asarray(v_left, dtype=float)
        return v_left if side == LEFT else self.push(u) @ v_left

    def normal(self, u, side: str = LEFT) -> tuple[Array, Array]:
        x = self.point(u, LEFT)
        lower, _ = surface_normal(self.surface, self.left, x)
        if side == RIGHT:
            # covectors pull back with the inverse jacobian
            lower = np.linalg.solve(self.push(u).T, lower)
        m = self.metric(side)
        return lower, tc.raise_index(m, self.point(u, side), lower)

    def metric_jump(self, u) -> float:
        """Max entry of ``g_L - J^T g_R J`` on the surface."""
        J = self.push(u)
        gl = self.left.value(self.point(u, LEFT))
        gr = self.right.value(self.point(u, RIGHT))
        return float(np.abs(gl - J.T @ gr @ J).max())

    def is_null(self, u) -> bool:
        lower, upper = self.normal(u, LEFT)
        return abs(float(lower @ upper)) < NULL_TOL * float(lower @ lower)


def single_metric(m: tc.MetricSpec, surface: LevelSurface, point_fn, tangent_fn,
                  name: str = "single") -> TwoSidedMetric:
    """The same metric on both sides, identified by the identity map."""
    emb = SurfaceEmbedding(point_fn, point_fn, tangent_fn, lambda u: np.eye(tc.DIM))
    return TwoSidedMetric(m, m, surface, emb, name)


# --------------------------------------------------------------------------
# geodesic fan with Jacobi fields
# --------------------------------------------------------------------------


def _fan_rhs(m: tc.MetricSpec, y: Array, k: int) -> Array:
    """Geodesic plus ``k`` linearised (Jacobi) equations, flattened state."""
    D = tc.DIM
    x, v = y[:D], y[D:2 * D]
    J = y[2 * D:2 * D + D * k].reshape(D, k)
    dv = y[2 * D + D * k:].reshape(D, k)
    gam, dgam = tc.christoffel_with_derivatives(m, x)
    acc = -np.einsum("abc,b,c->a", gam, v, v)
    # d/ds dv = -Gamma_{ab,s} J^s v^a v^b - 2 Gamma_{ab} dv^a v^b
    ddv = -np.einsum("mabs,sk,a,b->mk", dgam, J, v, v) - 2.0 * np.einsum("mab,ak,b->mk", gam, dv, v)
    return np.concatenate([v, acc, dv.ravel(), ddv.ravel()])


def _metric_jet(m: tc.MetricSpec, y: Array, k: int) -> tuple[Array, Array]:
    """Pulled-back metric on columns ``[v, J_1..J_k]`` and its ``s``-derivative."""
    D = tc.DIM
    x, v = y[:D], y[D:2 * D]
    J = y[2 * D:2 * D + D * k].reshape(D, k)
    dv = y[2 * D + D * k:].reshape(D, k)
    gam = tc.christoffel_array(m, x)
    acc = -np.einsum("abc,b,c->a", gam, v, v)
    cols = np.column_stack([v, J])
    dcols = np.column_stack([acc, dv])
    g = m.value(x)
    dg = np.einsum("abc,c->ab", m.d1(x), v)
    G = cols.T @ g @ cols
    dG = cols.T @ dg @ cols + dcols.T @ g @ cols + cols.T @ g @ dcols
    return G, dG


def integrate_fan(m: tc.MetricSpec, x0, N, dN, s_end: float, steps: int) -> list[Array]:
    """RK4 samples ``y(s_i)``, ``s_i = i * s_end / steps``, of geodesic + Jacobi fields."""
    D = tc.DIM
    X = np.asarray(dN[0], dtype=float)
    dv = np.asarray(dN[1], dtype=float)
    k = X.shape[1]
    y = np.concatenate([np.asarray(x0, float), np.asarray(N, float), X.ravel(), dv.ravel()])
    ds = s_end / steps
    out = [y]
    rhs = lambda state: _fan_rhs(m, state, k)  # noqa: E731
    for i in range(steps):
        try:
            y = tc.rk4_step(rhs, y, ds)
            m.check_domain(y[:D])
        except (OutOfDomain, DegenerateMetric) as exc:
            raise ChartExit(f"geodesic fan left the chart at s={(i + 1) * ds:.3e}: {exc}") from exc
        out.append(y)
    return out


# --------------------------------------------------------------------------
# MGS chart
# --------------------------------------------------------------------------


def kretschmann(m: tc.MetricSpec, x) -> float:
    riem = tc.riemann_array(m, x)
    g = m.value(x)
    ginv = tc.inverse_metric(m, x).data
    low = np.einsum("ma,abcd->mbcd", g, riem)
    up = np.einsum("mbcd,mi,bj,ck,dl->ijkl", riem, np.eye(tc.DIM), ginv, ginv, ginv)
    return float(np.einsum("mbcd,mbcd->", low, up))


def curvature_radius(m: tc.MetricSpec, x, fallback: float = 1.0) -> float:
    k = abs(kretschmann(m, x))
    return fallback if k < 1e-300 else min(k ** -0.25, 1e6 * fallback)


@dataclass
class MgsChart:
    """A Modified Gaussian Skew chart around ``base_u`` on the surface.

    Built by :func:`build_mgs_chart`; treat as immutable.
    """

    tm: TwoSidedMetric
    base_u: Array
    eta: float
    null: bool
    L: Array
    patch_size: float
    h: float
    normalize: bool
    seed: Optional[Callable[[Array], Array]] = field(default=None, repr=False)
    gauge: Optional[Callable[[Array], Array]] = field(default=None, repr=False)
    fd_step: float = 1e-3
    substeps: int = 4
    _cache: dict = field(default_factory=dict, repr=False)

    # -- surface frame ------------------------------------------------------

    def du_dw(self, u) -> Array:
        """Columns ``du/dw^a`` for ``a = 1, 2, 3``."""
        u = np.asarray(u, dtype=float)
        M = np.zeros((3, 3))
        M[1:, 1:] = self.L
        if self.null:
            _, n_up = self.tm.normal(u, LEFT)
            T = self.tm.tangents(u, LEFT)
            M[:, 0] = np.linalg.lstsq(T, n_up, rcond=None)[0]
        else:
            M[0, 0] = 1.0
        return M

    def frame(self, u, side: str = LEFT) -> Array:
        """Surface basis ``X_1, X_2, X_3`` (4x3) in the chart of ``side``."""
        return self.tm.tangents(u, side) @ self.du_dw(u)

    def transverse(self, u, side: str = LEFT) -> Array:
        u = np.asarray(u, dtype=float)
        x = self.tm.point(u, LEFT)
        n_lower, _ = self.tm.normal(u, LEFT)
        X = self.frame(u, LEFT)
        seed = None if self.seed is None else self.seed(u)
        # off the null case g_0a need not be constant; the jump of -g_ab,0 / 2
        # still equals [K] since the antisymmetric part has no jump
        N = choose_transverse(self.tm.left, x, n_lower, self.eta, seed, X[:, 1:],
                              self.normalize).components
        if self.gauge is not None:
            N = N + X @ np.asarray(self.gauge(u), dtype=float)
        return self.tm.transport(u, N, side)

    def transverse_derivative(self, u, side: str) -> Array:
        """Columns ``dN/dw^a`` in the chart of ``side`` (Richardson central FD in ``u``)."""
        u = np.asarray(u, dtype=float)
        h = self.fd_step
        dN_du = np.zeros((tc.DIM, 3))
        for i in range(3):
            e = np.zeros(3)
            e[i] = h
            d1 = (self.transverse(u + e, side) - self.transverse(u - e, side)) / (2 * h)
            d2 = (self.transverse(u + 2 * e, side) - self.transverse(u - 2 * e, side)) / (4 * h)
            dN_du[:, i] = (4 * d1 - d2) / 3
        return dN_du @ self.du_dw(u)

    def surface_u(self, w123) -> Array:
        """Surface parameters reached by flowing from the base point."""
        w1, w2, w3 = (float(c) for c in w123)
        u = self.base_u.copy()
        u[1:] = u[1:] + self.L @ np.array([w2, w3])
        steps = max(4, int(math.ceil(abs(w1) / (0.05 * self.patch_size))))
        dw = w1 / steps
        f = lambda uu: self.du_dw(uu)[:, 0]  # noqa: E731
        for _ in range(steps):
            k1 = f(u)
            k2 = f(u + 0.5 * dw * k1)
            k3 = f(u + 0.5 * dw * k2)
            k4 = f(u + dw * k3)
            u = u + dw / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        return u

    # -- geodesic fan ---------------------------------------------------------

    def _fan(self, u, side: str, s_end: float, steps: int) -> list[Array]:
        m = self.tm.metric(side)
        x0 = self.tm.point(u, side)
        N = self.transverse(u, side)
        X = self.frame(u, side)
        dN = self.transverse_derivative(u, side)
        return integrate_fan(m, x0, N, (X, dN), s_end, steps)

    def _samples(self, side: str) -> tuple[Array, Array]:
        key = ("samples", side)
        if key not in self._cache:
            sgn = 1.0 if side == RIGHT else -1.0
            ys = self._fan(self.base_u, side, sgn * 4 * self.h, 4 * self.substeps)
            m = self.tm.metric(side)
            jets = [_metric_jet(m, ys[i * self.substeps], 3) for i in range(5)]
            self._cache[key] = (np.array([j[0] for j in jets]), np.array([j[1] for j in jets]))
        return self._cache[key]

    def one_sided(self, side: str) -> dict:
        """One-sided ``w0``-derivatives of the pulled-back metric at the base point."""
        G, dG = self._samples(side)
        sgn = 1.0 if side == RIGHT else -1.0
        w = ONE_SIDED / (sgn * self.h)
        return {
            "g": G[0],
            "g_0": np.einsum("i,iab->ab", w, G),
            "g_00": np.einsum("i,iab->ab", w, dG),
            "g_0_exact": dG[0],
        }

    def metric_at(self, w) -> Array:
        """Pulled-back 4x4 metric in MGS coordinates at ``w``."""
        w = np.asarray(w, dtype=float)
        u = self.surface_u(w[1:])
        side = RIGHT if w[0] > 0 else LEFT
        steps = max(1, int(math.ceil(abs(w[0]) / (0.02 * self.patch_size))))
        y = self._fan(u, side, w[0], steps)[-1] if w[0] != 0 else self._fan(u, side, 0.0, 1)[0]
        return _metric_jet(self.tm.metric(side), y, 3)[0]

    def jacobian_at(self, w) -> Array:
        """``dx/dw`` (4x4) at ``w`` from the Jacobi fields."""
        w = np.asarray(w, dtype=float)
        u = self.surface_u(w[1:])
        side = RIGHT if w[0] > 0 else LEFT
        steps = max(1, int(math.ceil(abs(w[0]) / (0.02 * self.patch_size))))
        y = self._fan(u, side, w[0], steps)[-1]
        D = tc.DIM
        return np.column_stack([y[D:2 * D], y[2 * D:2 * D + 3 * D].reshape(D, 3)])

    def from_mgs(self, w) -> tuple[str, Array]:
        w = np.asarray(w, dtype=float)
        u = self.surface_u(w[1:])
        side = RIGHT if w[0] > 0 else LEFT
        if w[0] == 0:
            return side, self.tm.point(u, side)
        steps = max(1, int(math.ceil(abs(w[0]) / (0.02 * self.patch_size))))
        m = self.tm.metric(side)
        curve = tc.geodesic_integrate(m, self.tm.point(u, side), self.transverse(u, side),
                                      (0.0, w[0]), steps)
        return side, curve.x[-1]

    def to_mgs(self, side: str, x, tol: float = 1e-12, max_iter: int = 30) -> Array:
        """Newton inversion of :meth:`from_mgs` on the given side."""
        x = np.asarray(x, dtype=float)
        sgn = 1.0 if side == RIGHT else -1.0
        w = np.array([sgn * 1e-3 * self.patch_size, 0.0, 0.0, 0.0])
        for _ in range(max_iter):
            _, xw = self.from_mgs(w)
            r = xw - x
            if np.abs(r).max() < tol * max(1.0, np.abs(x).max()):
                return w
            step = np.linalg.solve(self.jacobian_at(w), r)
            w = w - step
            if sgn * w[0] <= 0:
                w[0] = sgn * 1e-6 * self.patch_size
        raise ChartExit(f"MGS inversion did not converge near {x}")

    def condition(self) -> float:
        """Worst condition number of ``dx/dw`` at the patch edges."""
        worst = 0.0
        for sgn in (-1.0, 1.0):
            J = self.jacobian_at(np.array([sgn * self.patch_size, 0.0, 0.0, 0.0]))
            worst = max(worst, float(np.linalg.cond(J)))
        return worst

    def surface_metric(self, u=None) -> Array:
        """Pulled-back metric on the surface (``w0 = 0``) from the left side."""
        u = self.base_u if u is None else np.asarray(u, dtype=float)
        x = self.tm.point(u, LEFT)
        cols = np.column_stack([self.transverse(u, LEFT), self.frame(u, LEFT)])
        return cols.T @ self.tm.left.value(x) @ cols

    def n_derivative_of_area(self) -> float:
        """``N(c)`` with ``c`` the ``(2, 2)`` component of the left metric."""
        x = self.tm.point(self.base_u, LEFT)
        return float(self.tm.left.d1(x)[2, 2] @ self.transverse(self.base_u, LEFT))

    def lorentz_frame(self) -> Array:
        """Columns ``((n - eta N)/eta, N, X2, X3)`` in the left chart at the base point.

        Requires ``<N, N> = 1`` and ``X2, X3`` orthonormal; the metric in this
        basis is ``diag(-1, 1, 1, 1)`` on a null surface.
        """
        u = self.base_u
        N = self.transverse(u, LEFT)
        X = self.frame(u, LEFT)
        n = X[:, 0]
        e0 = (n - self.eta * N) / self.eta
        return np.column_stack([e0, N, X[:, 1], X[:, 2]])


def build_mgs_chart(tm: TwoSidedMetric, base_u, eta: float = 1.0, patch_size: float | None = None,
                    seed: Callable[[Array], Array] | None = None, normalize: bool = True,
                    gauge: Callable[[Array], Array] | None = None,
                    check_fan: bool = True) -> MgsChart:
    """Construct an MGS chart at ``base_u``.

    ``seed(u)`` supplies a transverse candidate in the left chart; ``gauge(u)``
    adds ``lambda^a X_a`` after normalisation (for invariance checks).
    """
    base_u = np.asarray(base_u, dtype=float)
    x = tm.point(base_u, LEFT)
    if patch_size is None:
        scale = curvature_radius(tm.left, x, fallback=max(1.0, float(np.abs(x).max())))
        patch_size = 1e-2 * scale
    T = tm.tangents(base_u, LEFT)
    g = tm.left.value(x)
    # Gram-Schmidt on du1, du2 with constant coefficients fixed at the base point
    a1 = T[:, 1]
    n1 = math.sqrt(float(a1 @ g @ a1))
    L = np.zeros((2, 2))
    L[0, 0] = 1.0 / n1
    e1 = a1 / n1
    a2 = T[:, 2]
    proj = float(a2 @ g @ e1)
    rem = a2 - proj * e1
    n2 = math.sqrt(float(rem @ g @ rem))
    L[0, 1] = -proj / (n1 * n2)
    L[1, 1] = 1.0 / n2
    chart = MgsChart(tm, base_u, eta, tm.is_null(base_u), L, patch_size, 1e-4 * patch_size,
                     normalize, seed, gauge)
    if check_fan:
        cond = chart.condition()
        if not np.isfinite(cond) or cond > CONDITION_LIMIT:
            raise PatchTooLarge(f"geodesic fan jacobian condition {cond:.3e} exceeds {CONDITION_LIMIT:g}")
    return chart


# --------------------------------------------------------------------------
# second fundamental form and jumps
# --------------------------------------------------------------------------


def generalized_second_form(chart: MgsChart, side: str, exact: bool = False) -> Array:
    """``K_ab = -1/2 g_ab,0`` for surface indices ``a, b = 1, 2, 3``."""
    d = chart.one_sided(side)
    g0 = d["g_0_exact"] if exact else d["g_0"]
    return -0.5 * g0[1:, 1:]


@dataclass(frozen=True)
class SecondFormJump:
    components: Array
    norm: float
    left: Array
    right: Array


def jump_second_form(tm: TwoSidedMetric | None, chart: MgsChart, exact: bool = False) -> SecondFormJump:
    """``[K] = K^L - K^R`` with its max-norm."""
    kl = generalized_second_form(chart, LEFT, exact)
    kr = generalized_second_form(chart, RIGHT, exact)
    jump = kl - kr
    return SecondFormJump(jump, float(np.abs(jump).max()), kl, kr)


def extra_c2_condition(tm: TwoSidedMetric | None, chart: MgsChart) -> Array:
    """``[g_tt,00]`` for ``t = 2, 3``."""
    gl = chart.one_sided(LEFT)["g_00"]
    gr = chart.one_sided(RIGHT)["g_00"]
    return np.array([gl[2, 2] - gr[2, 2], gl[3, 3] - gr[3, 3]])


def mgs_form_residuals(chart: MgsChart, u=None) -> dict[str, float]:
    """Departures of the surface metric from the MGS normal form."""
    g = chart.surface_metric(u)
    return {
        "g01_minus_eta": float(g[0, 1] - chart.eta),
        "g11": float(g[1, 1]),
        "g0i": float(np.abs(g[0, 2:]).max()),
        "g22": float(g[2, 2]),
        "g33": float(g[3, 3]),
        "g00": float(g[0, 0]),
    }
