import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nsaps.errors import InvalidArgumentError
from nsaps.operators import (AndersonParams, ConstrainedQ1, ConstrainedQ2, IIDUniform, Periodic,
                             RandomStream, Ramp, Splice, TruncatedOperator, TwoPoint, Window,
                             build_truncation, h0_ellipse_point, parse_spec, sample_potential,
                             spec_from_dict)


class TestParams:
    def test_hops_multiply_to_one(self):
        for g in (0.0, 0.3, math.log(2), 2.0):
            p = AndersonParams(g)
            assert abs(p.hop_left * p.hop_right - 1) <= 1e-15

    def test_from_eg_exact(self):
        p = AndersonParams.from_eg(2.0)
        assert p.hop_right == 2.0 and p.hop_left == 0.5
        assert p.cosh_sum == 2.5 and p.sinh_diff == 1.5

    def test_negative_g(self):
        with pytest.raises(InvalidArgumentError):
            AndersonParams(-0.1)


class TestWindowAndStreams:
    def test_window(self):
        w = Window.parse("-2:1")
        assert w.size == 4 and list(w.sites) == [-2, -1, 0, 1] and str(w) == "-2:1"
        with pytest.raises(InvalidArgumentError):
            Window(3, 2)

    def test_stream_reproducible(self):
        a = RandomStream(7, 3).generator().random(5)
        b = RandomStream(7, 3).generator().random(5)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, RandomStream(7, 4).generator().random(5))

    def test_children_and_points_distinct(self):
        s = RandomStream(11)
        ids = {s.child(k).stream_id for k in range(200)}
        assert len(ids) == 200
        assert s.for_point(1 + 2j) == s.for_point(complex(1.0, 2.0))
        assert s.for_point(1 + 2j) != s.for_point(1 - 2j)
        # signed zero maps to the same stream
        assert s.for_point(complex(0.0, -0.0)) == s.for_point(0j)

    def test_frozen_values(self):
        # pins the generator so that silent library changes show up
        v = sample_potential(IIDUniform(3.0), Window(1, 3), RandomStream(42))
        w = RandomStream(42).generator().uniform(-3, 3, 3)
        np.testing.assert_array_equal(v, w)


class TestSamplePotential:
    def test_periodic_constant(self):
        v = sample_potential(Periodic((5,)), Window(0, 3), RandomStream(0))
        np.testing.assert_array_equal(v, [5, 5, 5, 5])

    def test_periodic_indexing_by_site(self):
        v = sample_potential(Periodic((1, 2, 3)), Window(-2, 2), None)
        np.testing.assert_array_equal(v, [2, 3, 1, 2, 3])

    def test_splice(self):
        v = sample_potential(Splice((2,), (-2,), 0), Window(-2, 1), None)
        np.testing.assert_array_equal(v, [-2, -2, 2, 2])

    def test_splice_offset(self):
        v = sample_potential(Splice((2,), (-2,), 1), Window(-1, 2), None)
        np.testing.assert_array_equal(v, [-2, -2, 2, 2])

    def test_ramp(self):
        v = sample_potential(Ramp(4.0, 0.0, 4), Window(-2, 6), None)
        np.testing.assert_allclose(v, [0, 0, 0, 1, 2, 3, 4, 4, 4])

    def test_two_point_values(self):
        v = sample_potential(TwoPoint(1.5), Window(1, 400), RandomStream(3))
        assert set(np.unique(v)) == {-1.5, 1.5}
        assert 150 < np.sum(v > 0) < 250

    def test_iid_range(self):
        v = sample_potential(IIDUniform(3.0), Window(1, 1000), RandomStream(1))
        assert v.min() >= -3 and v.max() <= 3 and v.std() > 1.5

    def test_invalid_specs(self):
        for bad in (lambda: IIDUniform(0.0), lambda: TwoPoint(-1), lambda: Periodic(()),
                    lambda: Ramp(1, 0, 0), lambda: ConstrainedQ1(1, 3), lambda: ConstrainedQ2(1, 0)):
            with pytest.raises(InvalidArgumentError):
                bad()

    @settings(max_examples=60, deadline=None)
    @given(st.floats(0.1, 5), st.floats(0.01, 1), st.integers(0, 2**63 - 1))
    def test_q1_constraints_exact(self, a, frac, seed):
        b = 2 * a * frac
        v = sample_potential(ConstrainedQ1(a, b), Window(0, 300), RandomStream(seed))
        assert np.abs(v).max() <= a
        assert np.abs(np.diff(v)).max() <= b

    @settings(max_examples=60, deadline=None)
    @given(st.floats(0.1, 5), st.floats(0.01, 1), st.integers(0, 2**63 - 1))
    def test_q2_constraints_exact(self, a, frac, seed):
        b = 2 * a * frac
        v = sample_potential(ConstrainedQ2(a, b), Window(0, 300), RandomStream(seed))
        assert np.abs(v).max() <= a
        assert np.abs(np.diff(v)).min() >= b

    def test_q2_example(self):
        for seed in range(20):
            v = sample_potential(ConstrainedQ2(3, 2), Window(-50, 50), RandomStream(seed))
            assert np.all(np.abs(np.diff(v)) >= 2) and np.all(np.abs(v) <= 3)

    def test_q2_extreme_b_equals_2a(self):
        # only the alternating +-a chain is admissible
        v = sample_potential(ConstrainedQ2(1.0, 2.0), Window(0, 50), RandomStream(9))
        np.testing.assert_array_equal(np.abs(v), 1.0)
        assert np.all(v[1:] == -v[:-1])


class TestSpecText:
    @pytest.mark.parametrize("spec", [Periodic((1, -2.5)), IIDUniform(3.0), TwoPoint(2.0),
                                      Splice((0,), (-2, 2), 0), Ramp(1.0, -1.0, 10),
                                      ConstrainedQ1(3, 2), ConstrainedQ2(3, 2),
                                      Periodic((1 + 2j, -1))])
    def test_roundtrip(self, spec):
        assert parse_spec(spec.to_text()) == spec
        assert spec_from_dict(spec.to_dict()) == spec

    def test_aliases_and_errors(self):
        assert parse_spec("variant=twopoint;mu=2") == TwoPoint(2.0)
        assert parse_spec("iid;mu=3") == IIDUniform(3.0)
        with pytest.raises(InvalidArgumentError):
            parse_spec("variant=nope;mu=1")
        with pytest.raises(InvalidArgumentError):
            parse_spec("mu=1")


class TestTruncation:
    def test_single_site(self):
        p = AndersonParams(0.7)
        cm = build_truncation(p, [0.3], Window(0, 0)).column_map().to_dense()
        np.testing.assert_allclose(cm[:, 0], [p.hop_right, 0.3, p.hop_left])

    def test_laplacian_interior(self):
        a = build_truncation(AndersonParams(0.0), np.zeros(4), Window(1, 4)).interior()
        np.testing.assert_array_equal(a, a.T)
        np.testing.assert_array_equal(np.diag(a, 1), 1.0)

    def test_two_site_transcription(self):
        op = build_truncation(AndersonParams.from_eg(2.0), [1.0, -1.0], Window(1, 2))
        np.testing.assert_array_equal(op.interior(), [[1, 2], [0.5, -1]])
        cm = op.column_map().to_dense()
        assert cm.shape == (4, 2)
        # row for site 0 sees e^g f_1, row for site 3 sees e^-g f_2
        np.testing.assert_array_equal(cm[0], [2, 0])
        np.testing.assert_array_equal(cm[-1], [0, 0.5])
        np.testing.assert_array_equal(cm[1:3], op.interior())

    def test_image_is_full_space_action(self, rng):
        p = AndersonParams(0.4)
        w = Window(-3, 4)
        v = rng.uniform(-1, 1, w.size)
        f = rng.standard_normal(w.size)
        op = build_truncation(p, v, w)
        # apply the operator on a larger lattice to f padded with zeros
        big = np.zeros(w.size + 6)
        big[3:-3] = f
        vv = np.concatenate([np.zeros(3), v, np.zeros(3)])
        out = vv * big
        out[1:] += p.hop_left * big[:-1]
        out[:-1] += p.hop_right * big[1:]
        np.testing.assert_allclose(op.apply(f), out[2:-2], atol=1e-14)

    def test_linear_in_potential(self, rng):
        p = AndersonParams(0.5)
        w = Window(0, 5)
        v, u = rng.standard_normal(6), rng.standard_normal(6)
        d = build_truncation(p, v + u, w).interior() - build_truncation(p, v, w).interior()
        np.testing.assert_allclose(d, np.diag(u), atol=1e-14)

    def test_length_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            build_truncation(AndersonParams(0.1), [1, 2], Window(0, 2))

    def test_adjoint_real_operator(self):
        op = build_truncation(AndersonParams.from_eg(2.0), [1.0, -1.0, 0.5], Window(1, 3))
        np.testing.assert_array_equal(op.adjoint().interior(), op.interior().T)

    def test_adjoint_complex(self):
        op = TruncatedOperator(Window(0, 2), np.array([1j, 2.0, -1j]), 0.5 + 1j, 2.0)
        np.testing.assert_allclose(op.adjoint().interior(), op.interior().conj().T)


class TestEllipsePoint:
    def test_values(self):
        p = AndersonParams.from_eg(2.0)
        assert h0_ellipse_point(p, 0.0) == pytest.approx(2.5)
        assert h0_ellipse_point(p, math.pi / 2) == pytest.approx(1.5j)
        q = AndersonParams(0.0)
        for t in np.linspace(0, 6, 7):
            assert h0_ellipse_point(q, t) == pytest.approx(2 * math.cos(t))
