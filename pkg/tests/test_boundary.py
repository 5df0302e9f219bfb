import numpy as np
import pytest

from adsmax import boundary as B
from adsmax import lorentz as L


class TestCrossRatio:
    def test_paper_value_two(self):
        assert B.cross_ratio(-3, -1, 1, np.inf) == pytest.approx(2.0, abs=1e-15)

    def test_paper_value_one(self):
        assert B.cross_ratio(0, 0, 1, 1) == pytest.approx(1.0, abs=1e-15)

    def test_mobius_invariance(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            m = L.random_mobius(rng)
            a, b, c, d = rng.standard_normal(4) * 3
            cr1 = B.cross_ratio(a, b, c, d)
            cr2 = B.cross_ratio(
                m.apply_rp1(a), m.apply_rp1(b), m.apply_rp1(c), m.apply_rp1(d)
            )
            assert cr2 == pytest.approx(cr1, rel=1e-10, abs=1e-10)

    def test_three_coincident_raises(self):
        with pytest.raises(ValueError):
            B.cross_ratio(1, 1, 1, 2)


class TestCircleHomeo:
    def test_identity(self):
        f = B.CircleHomeo.identity()
        x = np.linspace(0, 2 * np.pi, 40)
        assert np.allclose(f.lift(x), x)

    def test_rejects_non_monotone(self):
        x = np.linspace(0, 2 * np.pi, 8, endpoint=False)
        y = x.copy()
        y[3], y[4] = y[4], y[3]
        with pytest.raises(ValueError):
            B.CircleHomeo(x, y)

    def test_interpolant_monotone(self):
        # PCHIP between strictly increasing knots stays strictly increasing
        rng = np.random.default_rng(1)
        x = np.linspace(0, 2 * np.pi, 32, endpoint=False)
        y = np.cumsum(rng.uniform(0.01, 1.0, 32))
        y = y / y[-1] * (2 * np.pi - 0.1)
        f = B.CircleHomeo(x, y)
        s = np.linspace(0, 2 * np.pi, 2000)
        F = f.lift(s)
        assert np.all(np.diff(F) >= 0)

    def test_degree_one(self):
        f = B.step_family(0.6)
        x = np.linspace(-5, 5, 30)
        assert np.allclose(f.lift(x + 2 * np.pi), f.lift(x) + 2 * np.pi, atol=1e-12)


class TestFamilies:
    def test_step_zero_is_identity(self):
        assert B.step_family(0.0).is_identity()

    def test_step_monotone_knots(self):
        for k in (0.25, 0.5, 0.75, 0.9, 0.99):
            f = B.step_family(k)
            assert np.all(np.diff(f.knots_y) > 0)

    def test_step_out_of_range(self):
        with pytest.raises(ValueError):
            B.step_family(1.0)

    def test_mobius_identity(self):
        assert B.mobius_boundary(L.MobiusMap.identity()).is_identity()

    def test_bump_monotone(self):
        f = B.bump_family(0.8)
        s = np.linspace(0, 2 * np.pi, 500)
        assert np.all(np.diff(f.lift(s)) > 0)

    def test_bump_out_of_range(self):
        with pytest.raises(ValueError):
            B.bump_family(1.0)


class TestQsModulus:
    def test_identity_is_one(self):
        assert B.qs_modulus(B.CircleHomeo.identity()) == pytest.approx(1.0, abs=1e-10)

    def test_mobius_is_one(self):
        rng = np.random.default_rng(2)
        for _ in range(5):
            m = L.random_mobius(rng, 0.6)
            assert B.qs_modulus(B.mobius_boundary(m)) == pytest.approx(
                1.0, abs=1e-10
            )

    def test_step_family_monotone_in_kappa(self):
        mods = [B.qs_modulus(B.step_family(k)) for k in (0.0, 0.25, 0.5, 0.75, 0.9)]
        assert all(m2 >= m1 - 1e-9 for m1, m2 in zip(mods, mods[1:]))
        assert mods[-1] > mods[1] > 1.0

    def test_composition_with_mobius_stable(self):
        # pre/post-composing with Mobius maps moves the sampled modulus only
        # by sampler resolution
        rng = np.random.default_rng(3)
        f = B.step_family(0.5)
        base = B.qs_modulus(f)
        m1, m2 = L.random_mobius(rng, 0.3), L.random_mobius(rng, 0.3)
        comp = B.CircleHomeo.from_lift(
            lambda x: m1.apply_angle_lift(f.lift(m2.apply_angle_lift(x))), 512
        )
        # composed map is quasi-symmetric with the same true modulus; sampled
        # values agree within the stratification tolerance
        assert B.qs_modulus(comp) == pytest.approx(base, rel=0.2)


class TestLiftGraph:
    def test_identity_equator(self):
        c = B.lift_graph(B.CircleHomeo.identity(), 64)
        assert np.abs(c.tau).max() == 0.0
        assert np.abs(c.xi - c.eta).max() < 1e-12

    def test_mobius_lands_on_plane_boundary(self):
        rng = np.random.default_rng(4)
        m = L.random_mobius(rng, 0.5)
        c = B.lift_graph(B.mobius_boundary(m), 128)
        assert c.is_planar()
        res = np.angle(np.exp(1j * (c.eta - m.apply_angle(c.xi))))
        assert np.abs(res).max() < 1e-9

    def test_step_curve_approaches_lightlike(self):
        # the kappa -> 1 limit is the 2-step graph: slopes approach +-1 and
        # tau spans almost (-pi/4, pi/4) in this normalization
        c = B.lift_graph(B.step_family(0.99), 4096)
        slope = np.diff(c.tau) / np.diff(c.theta)
        assert np.abs(slope).max() > 0.99
        assert np.abs(slope).max() <= 1 + 1e-9
        assert c.tau.max() > np.pi / 4 - 0.05
        assert c.tau.min() < -np.pi / 4 + 0.05

    def test_achronal_for_every_monotone_map(self):
        rng = np.random.default_rng(5)
        x = np.linspace(0, 2 * np.pi, 64, endpoint=False)
        y = np.cumsum(rng.uniform(0.01, 1.0, 64))
        y = y / (y[-1] + 0.5) * 2 * np.pi
        c = B.lift_graph(B.CircleHomeo(x, y), 512)
        dth = np.diff(np.concatenate([c.theta, [c.theta[0] + 2 * np.pi]]))
        dta = np.diff(np.concatenate([c.tau, [c.tau[0]]]))
        assert np.all(np.abs(dta) <= np.abs(dth) + 1e-9)

    def test_timelike_pair_rejected(self):
        th = np.array([0.0, 1.0, 2.0, 4.0])
        ta = np.array([0.0, 0.0, 1.5, 0.0])  # jump of 1.5 over dtheta 1.0
        with pytest.raises(ValueError):
            B.BoundaryCurve(th, ta)

    def test_equivariance_under_isometries(self):
        rng = np.random.default_rng(6)
        f = B.step_family(0.3)
        m1, m2 = L.random_mobius(rng, 0.4), L.random_mobius(rng, 0.4)
        comp = B.CircleHomeo.from_lift(
            lambda x: m1.apply_angle_lift(f.lift(m2.apply_angle_lift(x))), 512
        )
        c1 = B.lift_graph(comp, 800)
        c2 = B.lift_graph(f, 800).transform(L.Isometry3(m2.inverse(), m1))
        dev = np.angle(np.exp(1j * (c1.tau_of_theta(c2.theta) - c2.tau)))
        assert np.abs(dev).max() < 1e-4


class TestTwoStep:
    def test_achronal_and_spans(self):
        c = B.two_step_curve(256)
        assert c.tau.max() == pytest.approx(np.pi / 2, abs=0.02)
        assert c.tau.min() == pytest.approx(0.0, abs=0.02)

    def test_lightlike_segments(self):
        c = B.two_step_curve(256)
        dth = np.diff(c.theta)
        dta = np.diff(c.tau)
        # all but the 4 corner cells are exactly lightlike
        ratio = np.abs(dta) / dth
        assert (np.abs(ratio - 1.0) < 1e-9).sum() >= len(ratio) - 4
