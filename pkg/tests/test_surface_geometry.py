import math

import numpy as np
import pytest

from nullshock import exact_solutions as es
from nullshock import shock_matching as sm
from nullshock import surface_geometry as sg
from nullshock import tensor_core as tc
from nullshock.errors import NoTransverse, PatchTooLarge, ZeroGradient

FLAT_SEED = np.array([-0.5, 0.5, 0.0, 0.0])


def flat_null_plane():
    surf = sg.LevelSurface(lambda x: x[1] - x[0])
    point = lambda u: np.array([u[0], u[0], u[1], u[2]])  # noqa: E731
    tangents = lambda u: np.array([[1.0, 0, 0], [1.0, 0, 0], [0, 1.0, 0], [0, 0, 1.0]])  # noqa: E731
    return sg.single_metric(tc.minkowski(), surf, point, tangents)


@pytest.fixture(scope="module")
def flat_chart():
    return sg.build_mgs_chart(flat_null_plane(), np.zeros(3), seed=lambda u: FLAT_SEED)


@pytest.fixture(scope="module")
def smooth_chart(exact):
    # FRW on both sides of the shock surface
    full = sm.two_sided(exact)
    tm = sg.single_metric(exact.left_metric(), full.surface, full.embedding.left_point,
                          full.embedding.left_tangents)
    return sg.build_mgs_chart(tm, sm.surface_u(exact, 0.3), seed=lambda u: np.array([0, 1.0, 0, 0]))


# ---------------------------------------------------------------------------
# normals
# ---------------------------------------------------------------------------


class TestNormal:
    def test_frw_surface(self, exact):
        t = 0.5
        surf = sm.two_sided(exact).surface
        lower, _ = sg.surface_normal(surf, exact.left_metric(), exact.left_point(t))
        assert lower[0] == pytest.approx(-exact.r_dot(t), rel=1e-15)
        assert lower[1] == 1.0

    def test_fd_gradient(self, exact):
        t = 0.5
        surf = sg.LevelSurface(lambda x: x[1] - exact.r(x[0]))
        lower, _ = sg.surface_normal(surf, exact.left_metric(), exact.left_point(t))
        assert lower[0] == pytest.approx(-exact.r_dot(t), rel=1e-9)

    def test_flat_plane(self):
        m = tc.minkowski()
        lower, upper = sg.surface_normal(sg.LevelSurface(lambda x: x[1] - x[0]), m, np.zeros(4))
        assert np.allclose(lower, [-1, 1, 0, 0], atol=1e-12)
        assert np.allclose(upper, [1, 1, 0, 0], atol=1e-12)
        assert tc.classify_vector(m, np.zeros(4), upper) is tc.CausalType.LIGHTLIKE

    def test_constant(self):
        with pytest.raises(ZeroGradient):
            sg.surface_normal(sg.LevelSurface(lambda x: 2.0), tc.minkowski(), np.zeros(4))

    def test_side(self):
        surf = sg.LevelSurface(lambda x: x[1] - x[0])
        assert surf.side([1.0, 0.0, 0, 0]) == sg.LEFT
        assert surf.side([0.0, 1.0, 0, 0]) == sg.RIGHT


class TestLightlike:
    @staticmethod
    def _surface(R, speed):
        return sg.LevelSurface(lambda x: x[1] - 0.5, grad=lambda x: np.array([-speed / R, 1.0, 0, 0]))

    def test_null(self):
        R = 1.7
        m = tc.frw_family(lambda t: (R, 0.0, 0.0))
        ok, res = sg.is_lightlike(self._surface(R, 1.0), m, np.array([0, 0.5, 1.0, 0]))
        assert ok and abs(res) < 1e-15

    def test_timelike_surface(self):
        R = 1.7
        m = tc.frw_family(lambda t: (R, 0.0, 0.0))
        ok, res = sg.is_lightlike(self._surface(R, 0.5), m, np.array([0, 0.5, 1.0, 0]))
        assert not ok
        assert res == pytest.approx(0.75 / R**2, rel=1e-14)

    def test_flat_plane(self):
        assert sg.is_lightlike(sg.LevelSurface(lambda x: x[1] - x[0]), tc.minkowski(), np.zeros(4))[0]


class TestTransverse:
    def test_flat_adjustment(self):
        m = tc.minkowski()
        N = sg.choose_transverse(m, np.zeros(4), [-1.0, 1.0, 0, 0], 1.0, seed=FLAT_SEED)
        assert np.allclose(N.components, [0, 1, 0, 0], atol=1e-15)
        assert N.norm == pytest.approx(1.0)
        assert N.components @ np.array([-1.0, 1.0, 0, 0]) == pytest.approx(1.0)

    def test_frw_side(self, exact):
        t = 0.3
        tm = sm.two_sided(exact)
        u = sm.surface_u(exact, t)
        lower, _ = tm.normal(u)
        N = sg.choose_transverse(exact.left_metric(), exact.left_point(t), lower, 1.0,
                                 seed=[0, 1.0, 0, 0], tangents=tm.tangents(u, sg.LEFT)[:, 1:],
                                 normalize=False)
        assert N.components[0] == 0.0 and N.components[1] == 1.0

    def test_seed_normal(self):
        with pytest.raises(NoTransverse):
            sg.choose_transverse(tc.minkowski(), np.zeros(4), [-1.0, 1.0, 0, 0], 1.0, seed=[1.0, 1.0, 0, 0])

    def test_pairing(self, exact):
        t = 0.3
        tm = sm.two_sided(exact)
        lower, _ = tm.normal(sm.surface_u(exact, t))
        for eta in (0.3, 1.0, -2.0):
            N = sg.choose_transverse(exact.left_metric(), exact.left_point(t), lower, eta)
            assert abs(N.components @ lower - eta) < 1e-10
            assert N.norm == pytest.approx(1.0, abs=1e-12)


# ---------------------------------------------------------------------------
# charts
# ---------------------------------------------------------------------------


class TestFlatChart:
    def test_metric_form(self, flat_chart):
        expected = np.array([[1.0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])
        assert np.abs(flat_chart.surface_metric() - expected).max() < 1e-14
        w = np.array([0.3, 0.1, 0.2, 0.3]) * flat_chart.patch_size
        assert np.abs(flat_chart.metric_at(w) - expected).max() < 1e-12

    def test_second_form_zero(self, flat_chart, sigma2):
        for side in sg.SIDES:
            assert np.abs(sg.generalized_second_form(flat_chart, side)).max() < 1e-9
            assert np.abs(sg.generalized_second_form(flat_chart, side, exact=True)).max() == 0.0

    def test_jumps_zero(self, flat_chart):
        assert sg.jump_second_form(flat_chart.tm, flat_chart, exact=True).norm == 0.0
        assert sg.jump_second_form(flat_chart.tm, flat_chart).norm < 1e-9
        assert np.abs(sg.extra_c2_condition(flat_chart.tm, flat_chart)).max() < 1e-6

    def test_round_trip(self, flat_chart):
        w = np.array([0.5, 0.2, 0.1, -0.3]) * flat_chart.patch_size
        side, x = flat_chart.from_mgs(w)
        assert np.abs(flat_chart.to_mgs(side, x) - w).max() < 1e-8

    def test_lorentz_frame(self, flat_chart):
        L = flat_chart.lorentz_frame()
        assert np.abs(L.T @ np.diag([-1.0, 1, 1, 1]) @ L - np.diag([-1.0, 1, 1, 1])).max() < 1e-8

    def test_focusing_fan(self):
        # a gauge that shrinks X2 to zero at the patch edge
        with pytest.raises(PatchTooLarge):
            sg.build_mgs_chart(flat_null_plane(), np.zeros(3), patch_size=0.5,
                               seed=lambda u: FLAT_SEED, gauge=lambda u: np.array([0, -u[1] / 0.5, 0]))


class TestMatchedChart:
    def test_mgs_form(self, exact, exact_chart):
        for du in ([0, 0, 0], [1e-3, 0, 0], [0, 1e-3, 1e-3], [-2e-3, 0, -1e-3]):
            u = exact_chart.base_u + np.array(du)
            res = sg.mgs_form_residuals(exact_chart, u)
            assert abs(res["g01_minus_eta"]) < 1e-6
            assert abs(res["g11"]) < 1e-6
            assert res["g0i"] < 1e-6
            assert res["g22"] > 0 and res["g33"] > 0

    def test_normalized_at_base(self, exact_chart):
        g = exact_chart.surface_metric()
        assert g[0, 0] == pytest.approx(1.0, abs=1e-12)
        assert g[2, 2] == pytest.approx(1.0, abs=1e-12)
        assert g[3, 3] == pytest.approx(1.0, abs=1e-12)

    def test_metric_continuous(self, exact_chart):
        assert exact_chart.tm.metric_jump(exact_chart.base_u) < 1e-10

    def test_round_trip(self, exact_chart):
        for sgn in (-1.0, 1.0):
            w = np.array([0.5 * sgn, 0.2, 0.1, -0.3]) * exact_chart.patch_size
            side, x = exact_chart.from_mgs(w)
            assert np.abs(exact_chart.to_mgs(side, x) - w).max() < 1e-8

    def test_lorentz_frame(self, exact, exact_chart):
        L = exact_chart.lorentz_frame()
        g = exact.left_metric().value(exact_chart.tm.point(exact_chart.base_u, sg.LEFT))
        assert np.abs(L.T @ g @ L - np.diag([-1.0, 1, 1, 1])).max() < 1e-8

    def test_areal_component(self, exact, exact_chart):
        # K_22 in the normalised angular frame times c equals -N(c)/2, each side
        t = 0.3
        c = exact.rbar(t) ** 2
        nc_left = exact_chart.n_derivative_of_area()
        Nb = exact_chart.transverse(exact_chart.base_u, sg.RIGHT)
        nc_right = 2.0 * exact.rbar(t) * Nb[1]
        kl = sg.generalized_second_form(exact_chart, sg.LEFT)
        kr = sg.generalized_second_form(exact_chart, sg.RIGHT)
        assert kl[1, 1] * c == pytest.approx(-0.5 * nc_left, rel=1e-6)
        assert kr[1, 1] * c == pytest.approx(-0.5 * nc_right, rel=1e-6)
        assert nc_left == pytest.approx(nc_right, rel=1e-12)

    def test_angular_jumps_vanish(self, exact_chart):
        j = sg.jump_second_form(exact_chart.tm, exact_chart).components
        assert abs(j[1, 1]) < 1e-6 and abs(j[2, 2]) < 1e-6
        assert np.abs(j[0, 1:]).max() < 1e-6

    def test_radial_jump_oracle(self, exact, exact_chart):
        # K_11 = <N, nabla_n n> per side with n = rdot d/du0 along the surface;
        # built from Christoffels and a finite difference of the surface normal
        tm, u, t = exact_chart.tm, exact_chart.base_u, 0.3
        h = 1e-4
        kappa = {}
        for side in sg.SIDES:
            m, x = tm.metric(side), tm.point(u, side)
            n = tm.normal(u, side)[1]
            dn = (tm.normal(u + [h, 0, 0], side)[1] - tm.normal(u - [h, 0, 0], side)[1]) / (2 * h)
            acc = exact.r_dot(t) * dn + np.einsum("abc,b,c->a", tc.christoffel_array(m, x), n, n)
            kappa[side] = float(exact_chart.transverse(u, side) @ m.value(x) @ acc)
        j = sg.jump_second_form(tm, exact_chart).components
        assert j[0, 0] == pytest.approx(kappa[sg.LEFT] - kappa[sg.RIGHT], rel=1e-5)

    def test_gauge_invariance(self, exact, exact_chart):
        base = sg.jump_second_form(None, exact_chart).components
        rng = np.random.default_rng(11)
        for _ in range(10):
            c = rng.normal(size=(3, 2))
            gauge = lambda u, c=c: c[:, 0] + c[:, 1] * (u[0] - 0.3)  # noqa: E731
            ch = sm.build_chart(exact, 0.3, gauge=gauge, check_fan=False)
            assert np.abs(sg.jump_second_form(None, ch).components - base).max() < 1e-8

    def test_jump_is_metric_derivative_jump(self, exact_chart, perturbed_chart):
        for ch in (exact_chart, perturbed_chart):
            dl = ch.one_sided(sg.LEFT)["g_0"][1:, 1:]
            dr = ch.one_sided(sg.RIGHT)["g_0"][1:, 1:]
            jump = sg.jump_second_form(None, ch)
            assert jump.norm == pytest.approx(0.5 * np.abs(dl - dr).max(), rel=1e-12)

    def test_perturbed(self, perturbed_chart):
        assert sg.jump_second_form(None, perturbed_chart).norm > 1e-3


class TestSmoothMetric:
    def test_sides_agree(self, smooth_chart):
        kl = sg.generalized_second_form(smooth_chart, sg.LEFT)
        kr = sg.generalized_second_form(smooth_chart, sg.RIGHT)
        assert np.abs(kl - kr).max() < 1e-8

    def test_exact_jump_zero(self, smooth_chart):
        assert sg.jump_second_form(None, smooth_chart, exact=True).norm == 0.0

    def test_c2_zero(self, smooth_chart):
        assert np.abs(sg.extra_c2_condition(None, smooth_chart)).max() < 1e-6


def test_kretschmann_flat_and_frw(frw_m, frw_point):
    assert sg.kretschmann(tc.minkowski(), np.zeros(4)) == 0.0
    assert sg.curvature_radius(tc.minkowski(), np.zeros(4), fallback=3.0) == 3.0
    assert sg.kretschmann(frw_m, frw_point) > 0
