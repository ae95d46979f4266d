import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specreg import index_fn as ix
from specreg.errors import RangeError, ValidationError

PL_KNOTS = [(0, 0), (0.5, 0.1), (1, 1)]


class TestBuiltins:
    def test_holder_sqrt(self):
        assert ix.holder(0.5)(0.25) == pytest.approx(0.5, abs=1e-15)

    def test_holder_zero(self):
        assert ix.holder(1.0)(0.0) == 0.0

    def test_piecewise_linear_interpolates(self):
        # by hand: halfway between (0, 0) and (0.5, 0.1)
        assert ix.piecewise_linear(PL_KNOTS)(0.25) == pytest.approx(0.05, abs=1e-15)

    def test_piecewise_linear_constant_beyond_last_knot(self):
        phi = ix.piecewise_linear(PL_KNOTS, s=3.0)
        assert phi(2.5) == 1.0

    def test_holder_log_at_zero(self):
        phi = ix.holder_log(0.5, 2.0)
        assert phi(0.0) == 0.0
        t = 0.3
        assert phi(t) == pytest.approx(t ** 0.5 * math.log(math.e + 1 / t) ** -2.0)

    @pytest.mark.parametrize("r", [0.0, -1.0])
    def test_rejects_nonpositive_exponent(self, r):
        with pytest.raises(ValidationError):
            ix.holder(r)

    def test_rejects_decreasing_knots(self):
        with pytest.raises(ValidationError):
            ix.piecewise_linear([(0, 0), (0.5, 0.4), (1, 0.2)])

    def test_rejects_bad_first_knot(self):
        with pytest.raises(ValidationError):
            ix.piecewise_linear([(0, 0.1), (1, 1)])

    def test_make_builtin_and_config_roundtrip(self):
        phi = ix.make_builtin("holder_log", 2.0, r=1.0, p=1.0)
        again = ix.from_config(phi.to_config())
        t = np.linspace(0, 2, 11)
        np.testing.assert_array_equal(phi(t), again(t))
        assert again.s == 2.0

    def test_from_config_piecewise(self):
        phi = ix.from_config({"kind": "piecewise_linear", "knots": [[0, 0], [0.5, 0.1], [1, 1]]})
        assert phi.s == 1.0
        assert phi(0.75) == pytest.approx(0.55)


class TestValidate:
    def test_holder_passes(self):
        assert ix.validate_index(ix.holder(0.5), 1000).passed

    def test_non_monotone_fails(self):
        rep = ix.validate_index(ix.IndexFunction(lambda t: t - t ** 2, s=2.0), 1000)
        assert not rep.passed
        assert not rep.monotone_ok
        assert rep.zero_ok

    def test_offset_fails_zero_axiom(self):
        rep = ix.validate_index(ix.IndexFunction(lambda t: t + 0.1, s=1.0), 1000)
        assert not rep.zero_ok
        assert rep.monotone_ok
        assert not rep.passed

    def test_rejects_tiny_grid(self):
        with pytest.raises(ValidationError):
            ix.validate_index(ix.holder(1.0), 1)

    @pytest.mark.parametrize("phi", [ix.holder(0.3, 5.0), ix.holder_log(1.0, 3.0, 5.0),
                                     ix.piecewise_linear(PL_KNOTS, 2.0)])
    def test_builtins_pass(self, phi):
        assert ix.validate_index(phi).passed


class TestCovering:
    def test_linear_by_one(self):
        res = ix.covering_check(ix.holder(1.0), 1.0)
        assert res.covered
        assert res.c_estimate == pytest.approx(1.0, abs=1e-12)

    def test_square_not_covered_by_one(self):
        res = ix.covering_check(ix.holder(2.0), 1.0)
        assert not res.covered
        assert res.decaying

    def test_sqrt_by_one(self):
        res = ix.covering_check(ix.holder(0.5, s=1.0), 1.0)
        assert res.covered
        assert res.c_estimate == pytest.approx(1.0, abs=1e-12)

    def test_piecewise_constant(self):
        # q(sigma) = sigma/phi(sigma) is 5 below 0.5 and falls to 1 at sigma = 1
        res = ix.covering_check(ix.piecewise_linear(PL_KNOTS), 1.0)
        assert res.covered
        assert res.c_estimate == pytest.approx(0.2, rel=1e-12)

    def test_rejects_zero_function(self):
        with pytest.raises(ValidationError):
            ix.covering_check(ix.IndexFunction(lambda t: 0 * t, s=1.0), 1.0)

    @pytest.mark.parametrize("r,nu0,s", [(0.25, 1.0, 1.0), (0.5, 0.5, 3.0), (1.0, 2.0, 4.0),
                                         (1.5, 4.0, 1.0), (0.1, 16.0, 5.0)])
    def test_holder_covered_whenever_nu0_at_least_r(self, r, nu0, s):
        # sigma**(nu0 - r) is non-decreasing, so the infimum sits at sigma = t
        res = ix.covering_check(ix.holder(r, s), nu0)
        assert res.covered
        assert abs(res.c_estimate - 1.0) <= 1e-6


class TestPsi:
    def test_value(self):
        psi = ix.psi_of(ix.holder(0.5), 2.0)
        assert psi(0.25) == pytest.approx(0.25 ** 1.25, rel=1e-14)
        assert psi(0.25) == pytest.approx(0.176777, abs=1e-6)

    def test_zero_and_one(self):
        assert ix.psi_of(ix.holder(0.5), 2.0)(0.0) == 0.0
        assert ix.psi_of(ix.holder(1.0), 3.0)(1.0) == 1.0

    def test_rejects_small_b(self):
        with pytest.raises(ValidationError):
            ix.psi_of(ix.holder(1.0), 1.0)

    @pytest.mark.parametrize("phi", [ix.holder(0.5), ix.piecewise_linear(PL_KNOTS, 2.0),
                                     ix.holder_log(0.2, 1.0)])
    def test_strictly_increasing(self, phi):
        grid = ix.composite_grid(phi.s, include_zero=False)
        vals = ix.psi_of(phi, 2.0)(grid)
        assert np.all(np.diff(vals) > 0)


class TestInvert:
    def test_holder_power(self):
        psi = ix.psi_of(ix.holder(0.5), 2.0)
        t = ix.invert_monotone(psi, 0.0625, 1e-12)
        assert t == pytest.approx(0.0625 ** 0.8, rel=1e-11)
        assert t == pytest.approx(0.108819, abs=1e-6)

    def test_identity(self):
        ident = ix.IndexFunction(lambda t: t, s=1.0)
        assert ix.invert_monotone(ident, 0.5) == pytest.approx(0.5, rel=1e-12)

    def test_zero(self):
        assert ix.invert_monotone(ix.psi_of(ix.holder(0.5), 2.0), 0.0) == 0.0

    def test_out_of_range(self):
        with pytest.raises(RangeError):
            ix.invert_monotone(ix.holder(1.0, 1.0), 2.0)

    def test_detects_non_monotone(self):
        # the midpoint value 0.6 lies above the right endpoint value 0.4
        bumpy = ix.IndexFunction(lambda t: np.where(t < 0.75, 1.2 * t, t - 0.6), s=1.0)
        with pytest.raises(ValidationError):
            ix.invert_monotone(bumpy, 0.3)

    def test_roundtrip_random(self):
        psi = ix.psi_of(ix.piecewise_linear(PL_KNOTS, 1.0), 2.0)
        rng = np.random.default_rng(3)
        for t in rng.uniform(0, 1, 100):
            y = psi(t)
            back = ix.invert_monotone(psi, y)
            assert abs(psi(back) - y) <= 1e-12 * y
            assert back == pytest.approx(t, rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(r=st.floats(0.05, 3.0), s=st.floats(0.5, 10.0),
       t1=st.floats(0, 1), t2=st.floats(0, 1))
def test_holder_monotone_property(r, s, t1, t2):
    phi = ix.holder(r, s)
    lo, hi = sorted((t1 * s, t2 * s))
    assert phi(lo) <= phi(hi) + 1e-12


@settings(max_examples=60, deadline=None)
@given(r=st.floats(0.05, 3.0), p=st.floats(0, 4.0), t1=st.floats(0, 1), t2=st.floats(0, 1))
def test_holder_log_monotone_property(r, p, t1, t2):
    phi = ix.holder_log(r, p, 2.0)
    lo, hi = sorted((2 * t1, 2 * t2))
    assert phi(lo) <= phi(hi) + 1e-12


@settings(max_examples=50, deadline=None)
@given(r=st.floats(0.1, 2.0), b=st.floats(1.1, 5.0), t=st.floats(1e-6, 1.0))
def test_inversion_roundtrip_property(r, b, t):
    psi = ix.psi_of(ix.holder(r, 1.0), b)
    y = psi(t)
    back = ix.invert_monotone(psi, y)
    assert abs(psi(back) - y) <= 1e-12 * max(y, 1e-300) * 1.0001 or back == pytest.approx(t, rel=1e-10)
