import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nsaps.errors import RegionMismatchError, WindowTooSmallError
from nsaps.operators import AndersonParams, Window, h0_ellipse_point
from nsaps.transfer import (EllipseEn, RegionLabel, classify_point, construct_decaying_solution,
                            e_alpha_curve, multiplier_radius, trace_polynomial, transfer_product,
                            transfer_step, write_curve_csv)

LN2 = math.log(2)


def e2_trace(lam, a0, a1, g):
    return math.exp(-2 * g) * ((lam - a0) * (lam - a1) - 2)


def e2_matrix(lam, a0, a1, g):
    # the n = 2 product written out by hand
    e = math.exp
    return np.array([
        [-e(-2 * g), -e(-3 * g) * (lam - a1)],
        [e(-g) * (lam - a0), e(-2 * g) * ((lam - a0) * (lam - a1) - 1)],
    ])


class TestSteps:
    def test_step_at_zero(self):
        for g in (0.0, 0.5, 2.0):
            a = transfer_step(0, 0, g)
            np.testing.assert_allclose(a.entries, [[0, -math.exp(-2 * g)], [1, 0]])
            assert a.trace == 0

    def test_step_lambda_equals_alpha(self):
        a = transfer_step(1.7, 1.7, 0.3)
        assert a.entries[1, 1] == 0 and a.trace == 0

    def test_selfadjoint_step(self):
        a = transfer_step(2, 0, 0.0)
        np.testing.assert_allclose(a.entries, [[0, -1], [1, 2]])
        assert a.det == pytest.approx(1.0)

    def test_length_one_product(self):
        np.testing.assert_array_equal(transfer_product(0.4, [1.1], 0.2).entries,
                                      transfer_step(0.4, 1.1, 0.2).entries)

    def test_n2_matches_hand_product(self, rng):
        for _ in range(5):
            lam, a0, a1 = rng.uniform(-3, 3, 3)
            g = rng.uniform(0, 2)
            np.testing.assert_allclose(transfer_product(lam, [a0, a1], g).entries,
                                       e2_matrix(lam, a0, a1, g), rtol=0, atol=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(-2, 2), min_size=1, max_size=6), st.floats(0, 2),
           st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False))
    def test_determinant(self, word, g, lam):
        # rounding in det grows like eps |B|^2, so the sample stays near the spectrum
        d = transfer_product(lam, word, g).det
        target = math.exp(-2 * len(word) * g)
        assert abs(d - target) <= 1e-10 * target


class TestTracePolynomial:
    def test_n1(self):
        p = trace_polynomial([0.7], 0.4)
        np.testing.assert_allclose(p.coef, [-0.7 * math.exp(-0.4), math.exp(-0.4)], atol=1e-14)

    def test_n2_closed_form(self, rng):
        for _ in range(5):
            a0, a1 = rng.uniform(-2, 2, 2)
            g = rng.uniform(0, 1.5)
            p = trace_polynomial([a0, a1], g)
            for lam in rng.uniform(-3, 3, 4):
                assert abs(p(lam) - e2_trace(lam, a0, a1, g)) <= 1e-12

    def test_leading_coefficient(self):
        for n in range(1, 8):
            p = trace_polynomial(np.linspace(-1, 1, n), 0.6)
            assert p.degree() == n
            assert p.coef[-1] == pytest.approx(math.exp(-0.6 * n), rel=1e-9)

    def test_rotation_invariant(self):
        w = [0.3, -1.2, 2.0, 0.5]
        p = trace_polynomial(w, 0.4)
        q = trace_polynomial(w[1:] + w[:1], 0.4)
        np.testing.assert_allclose(p.coef, q.coef, atol=1e-10)


class TestClassification:
    def test_examples(self):
        p = AndersonParams.from_eg(2.0)
        assert classify_point(0, [0], p) is RegionLabel.INTERIOR
        assert classify_point(3, [0], p) is RegionLabel.EXTERIOR
        assert classify_point(0, [-1.5, 1.5], p) is RegionLabel.BOUNDARY

    def test_selfadjoint_degenerate(self):
        assert classify_point(1.0, [0], 0.0) is RegionLabel.BOUNDARY
        assert classify_point(3.0, [0], 0.0) is RegionLabel.EXTERIOR
        assert classify_point(0.5j, [0], 0.0) is RegionLabel.EXTERIOR

    def test_matches_multiplier_moduli(self, rng):
        for _ in range(1000):
            n = int(rng.integers(1, 5))
            word = rng.uniform(-3, 3, n)
            g = rng.uniform(0.05, 1.5)
            lam = complex(rng.uniform(-5, 5), rng.uniform(-3, 3))
            mods = np.abs(transfer_product(lam, word, g).multipliers())
            lab = classify_point(lam, word, g, eps=1e-9)
            if mods.max() < 1 - 1e-7:
                assert lab is RegionLabel.INTERIOR
            elif mods.max() > 1 + 1e-7:
                assert lab is RegionLabel.EXTERIOR

    def test_ellipse_membership_agrees(self, rng):
        for _ in range(300):
            n = int(rng.integers(1, 4))
            word = rng.uniform(-2, 2, n)
            g = rng.uniform(0.1, 1.0)
            lam = complex(rng.uniform(-4, 4), rng.uniform(-2, 2))
            ell = EllipseEn.for_word(g, n)
            inside = ell.contains_interior(transfer_product(lam, word, g).trace)
            lab = classify_point(lam, word, g, eps=0.0)
            assert inside == (lab is RegionLabel.INTERIOR)

    def test_far_points_exterior(self, rng):
        for _ in range(100):
            word = rng.uniform(-2, 2, int(rng.integers(1, 5)))
            g = rng.uniform(0, 2)
            reach = np.abs(word).max() + 2 * math.cosh(g) + 3
            lam = reach * np.exp(1j * rng.uniform(0, 2 * np.pi)) * rng.uniform(1, 3)
            assert classify_point(lam, word, g) is RegionLabel.EXTERIOR

    def test_multiplier_radius_on_ellipse(self):
        r = 0.25
        for t in np.linspace(0, 6, 13):
            w = np.exp(1j * t) + r * np.exp(-1j * t)
            assert multiplier_radius(w, r) == pytest.approx(1.0, abs=1e-14)


class TestCurves:
    def test_n1_is_shifted_ellipse(self):
        g, alpha = 0.5, 0.3 - 0.2j
        th = np.linspace(0, 2 * np.pi, 50)
        c = e_alpha_curve([alpha], g, th)
        expect = np.array([h0_ellipse_point(AndersonParams(g), t) for t in th]) + alpha
        np.testing.assert_allclose(c[:, 0], expect, atol=1e-10)

    def test_n2_closed_form(self):
        g, mu = 0.4, 1.3
        th = np.linspace(0, 2 * np.pi, 40)
        c = e_alpha_curve([-mu, mu], g, th)
        rhs = mu ** 2 + 2 + math.exp(2 * g) * (np.exp(1j * th) + np.exp(-4 * g - 1j * th))
        np.testing.assert_allclose(c ** 2, np.column_stack([rhs, rhs]), atol=1e-9)

    def test_points_are_boundary(self, rng):
        for _ in range(10):
            word = rng.uniform(-2, 2, int(rng.integers(1, 7)))
            g = rng.uniform(0.05, 2)
            c = e_alpha_curve(word, g, np.linspace(0, 2 * np.pi, 37))
            assert all(classify_point(l, word, g, eps=1e-7) is RegionLabel.BOUNDARY
                       for l in c.ravel())

    def test_csv(self):
        th = np.array([0.0, 1.0])
        c = e_alpha_curve([0.0], LN2, th)
        buf = io.StringIO()
        write_curve_csv(buf, th, c)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "theta,root_index,re_lambda,im_lambda"
        assert lines[1].startswith("0.0,0,2.5,")
        assert len(lines) == 3


class TestDecayingSolution:
    def test_reference_case(self):
        s = construct_decaying_solution(0.0, [0.0], [-2.0, 2.0], LN2, Window(-120, 120))
        assert s.residual <= 1e-6
        assert s.left_rate < 1 and s.right_rate < 1
        assert -120 < min(s.argmin_sites) and max(s.argmin_sites) < 120
        assert np.isfinite(s.variance)
        # on the alpha side every solution decays at rate e^-g
        assert s.right_rate == pytest.approx(0.5, abs=0.01)

    def test_region_mismatch(self):
        with pytest.raises(RegionMismatchError):
            construct_decaying_solution(0.0, [0.0], [-1.0, 1.0], LN2, Window(-50, 50))
        with pytest.raises(RegionMismatchError):
            construct_decaying_solution(3.0, [0.0], [-2.0, 2.0], LN2, Window(-50, 50))

    def test_window_too_small(self):
        with pytest.raises(WindowTooSmallError):
            construct_decaying_solution(0.0, [0.0], [-2.0, 2.0], LN2, Window(-6, 6))
