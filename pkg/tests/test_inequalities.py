import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wfde import Params
from wfde.geometry import Ball
from wfde.inequalities import (RadialField, ThresholdExceeded, bmo_gamma, bump,
                               ckn_on_ball, ckn_ratio, constant, cosine, gaussian,
                               herrero_pierre_constant, iterative_ckn,
                               john_nirenberg_average, kappa10_test_function,
                               measure_ckn_constant, measure_john_nirenberg,
                               poincare_on_ball, probe_family_hash, probe_manifest,
                               reverse_holder, sharp_sobolev_constant, talenti)

UNWEIGHTED = Params(3, 0.0, 0.0, 0.5)
W = Params(3, 1.0, 0.0, 0.6)


class TestSobolev:
    def test_talenti_attains_sharp_constant(self):
        ratio = ckn_ratio(talenti(UNWEIGHTED), UNWEIGHTED)
        assert ratio == pytest.approx(sharp_sobolev_constant(3), rel=1e-10)

    def test_sharp_constant_value(self):
        # N = 3: (1/sqrt(3 pi)) (Gamma(3)/Gamma(3/2))^{1/3}
        assert sharp_sobolev_constant(3) == pytest.approx(0.42726054, rel=1e-7)

    def test_other_profiles_fall_short(self):
        s = sharp_sobolev_constant(3)
        for f in (gaussian(1.0), bump(2), bump(3)):
            assert ckn_ratio(f, UNWEIGHTED) < s

    @pytest.mark.parametrize("lam", [0.1, 3.0, 20.0])
    def test_ratio_scale_invariant(self, lam):
        f = talenti(W)
        assert ckn_ratio(f.scaled(lam), W) == pytest.approx(ckn_ratio(f, W), rel=1e-8)

    def test_weighted_probe_maximum_is_talenti(self):
        assert measure_ckn_constant(W) == pytest.approx(ckn_ratio(talenti(W), W), rel=1e-12)

    def test_ckn_on_ball_with_installed_constant(self):
        rep = ckn_on_ball(bump(2, 1.0), W, Ball(0, 1.0))
        assert rep.passed
        assert not ckn_on_ball(bump(2, 1.0), W, Ball(0, 1.0), S=0.5 * rep.measured_constant).passed


class TestPoincare:
    @pytest.mark.parametrize("f", [bump(2, 1.0), cosine(1.0), gaussian(4.0)])
    def test_scale_invariant_at_origin(self, f):
        base = poincare_on_ball(f, W, Ball(0, 1.0)).measured_constant
        for R in (0.1, 10.0):
            g = f.scaled(1.0 / R)
            got = poincare_on_ball(g, W, Ball(0, R)).measured_constant
            assert got == pytest.approx(base, rel=1e-6)

    def test_constant_function(self):
        rep = poincare_on_ball(constant(3.0), W, Ball(0.5, 1.0))
        assert rep.lhs == pytest.approx(0.0, abs=1e-12) and rep.passed


class TestIterativeCKN:
    def test_passes_with_slice_constant(self):
        f = lambda t, r: (1 + t) * np.exp(-np.asarray(r) ** 2)
        df = lambda t, r: -2 * np.asarray(r) * (1 + t) * np.exp(-np.asarray(r) ** 2)
        rep = iterative_ckn(f, df, W, Ball(0, 1.0), (0.0, 1.0), 1.5, n_times=6)
        assert rep.passed and rep.measured_constant > 0


class TestBMO:
    def test_constant_has_zero_oscillation(self):
        f = RadialField(values=np.full(20, 2.0), edges=np.linspace(0, 1, 21))
        assert bmo_gamma(f, W, Ball(0, 1.0), depth=2).bmo_norm == pytest.approx(0, abs=1e-14)

    def test_log_is_bmo(self):
        edges = np.concatenate(([0.0], np.geomspace(1e-6, 1.0, 200)))
        c = 0.5 * (edges[1:] + edges[:-1])
        f = RadialField(values=np.log(c), edges=edges)
        rep = bmo_gamma(f, W, Ball(0, 1.0), depth=3)
        assert 0 < rep.bmo_norm < 5

    def test_john_nirenberg_constant(self):
        k6 = measure_john_nirenberg(W)
        assert 0 < k6 < 10
        edges = np.concatenate(([0.0], np.geomspace(1e-6, 1.0, 200)))
        c = 0.5 * (edges[1:] + edges[:-1])
        f = RadialField(values=np.log(c), edges=edges)
        bmo = bmo_gamma(f, W, Ball(0, 1.0), depth=3).bmo_norm
        avg = john_nirenberg_average(f, Ball(0, 1.0), W, 1.0 / (k6 * bmo))
        assert avg <= math.e * (1 + 1e-6)


class TestReverseHolder:
    def _field(self):
        edges = np.linspace(0, 1, 101)
        c = 0.5 * (edges[1:] + edges[:-1])
        return RadialField(values=1.0 + c, edges=edges)

    def test_inside_window(self):
        rep = reverse_holder(self._field(), W, Ball(0, 1.0), 0.5, kappa6=1.5, kappa7=math.e)
        assert rep.passed and rep.measured_constant >= 1.0

    def test_outside_window(self):
        with pytest.raises(ThresholdExceeded):
            reverse_holder(self._field(), W, Ball(0, 1.0), 1e6, kappa6=1.5)

    def test_needs_positive_field(self):
        f = RadialField(values=np.zeros(10), edges=np.linspace(0, 1, 11))
        with pytest.raises(ValueError):
            reverse_holder(f, W, Ball(0, 1.0), 0.1, kappa6=1.5)


class TestCutoffConstants:
    @pytest.mark.parametrize("R", [0.1, 1.0, 10.0])
    def test_kappa10_invariant_at_origin(self, R):
        base = kappa10_test_function(W, Ball(0, 1.0))
        assert kappa10_test_function(W, Ball(0, R)) == pytest.approx(base, rel=1e-10)

    @pytest.mark.parametrize("R", [0.1, 10.0])
    def test_herrero_pierre_invariant_at_origin(self, R):
        base = herrero_pierre_constant(W, Ball(0, 1.0))
        assert herrero_pierre_constant(W, Ball(0, R)) == pytest.approx(base, rel=1e-10)

    def test_herrero_pierre_frozen(self):
        assert herrero_pierre_constant(W, Ball(0, 1.0)) == pytest.approx(470.97, rel=1e-4)


def test_probe_manifest_is_versioned():
    man = probe_manifest(W)
    assert man["version"] == "1"
    assert probe_family_hash(W) == probe_family_hash(Params(3, 1.0, 0.0, 0.6))
    assert probe_family_hash(W) != probe_family_hash(Params(3, 1.0, 0.0, 0.7))


@given(st.floats(0.05, 0.95))
@settings(max_examples=10, deadline=None)
def test_talenti_beats_bumps_weighted(m):
    p = Params(3, 1.0, 0.0, m, p=10.0)
    assert ckn_ratio(talenti(p), p) >= ckn_ratio(bump(2), p)
