"""Properties of the concave distance transform psi and its exponent g."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levy_mkv.metrics import PsiTransform

from oracles import quad_psi

# a moderate synthetic envelope where every quantity is well inside the
# floating range, next to the reference transform whose exponent is huge
MODERATE = PsiTransform(G=2.0, beta=0.5, R1=3.0)
STEEP = PsiTransform(G=40.0, beta=0.7, R1=1.5)


@pytest.fixture(scope="module")
def ref_psi(ref_constants):
    return ref_constants.psi()


class TestExponent:
    def test_g_zero(self):
        assert MODERATE.g(0.0) == 0.0

    def test_g_increasing_concave(self):
        r = np.array([0.5, 1.0, 1.5])
        g = MODERATE.g(r)
        assert g[0] < g[1] < g[2]
        assert g[2] + g[0] - 2 * g[1] < 0

    def test_quadrature_agreement(self):
        for psi in (MODERATE, STEEP):
            r = psi.R1
            assert psi._raw(r) == pytest.approx(quad_psi(psi.G, psi.beta, r),
                                                rel=1e-5)

    def test_reference_plateau(self, ref_psi):
        # the restricted reference envelope saturates psi at 2/G^2
        assert ref_psi.value(2 * ref_psi.R1) == pytest.approx(
            2.0 / ref_psi.G ** 2, rel=1e-6)


class TestPsiBasics:
    def test_at_zero(self, ref_psi):
        for psi in (MODERATE, STEEP, ref_psi):
            assert psi.value(0.0) == 0.0
            assert psi.prime(0.0) == 1.0

    def test_linear_tail(self):
        psi = MODERATE
        r0 = 2 * psi.R1
        for dr in (0.5, 1.0, 7.0):
            expect = psi.value(r0) + psi.prime(r0) * dr
            assert psi.value(r0 + dr) == pytest.approx(expect, rel=1e-12)

    def test_prime_constant_on_tail(self):
        psi = MODERATE
        assert psi.prime(2 * psi.R1 + 5.0) == psi.prime(2 * psi.R1)

    def test_second_derivative_sign(self):
        psi = MODERATE
        r = np.linspace(0.01, 2 * psi.R1, 50)
        assert np.all(psi.second(r) <= 0)
        assert psi.second(2 * psi.R1 + 1.0) == 0.0


class TestPsiInequalities:
    @pytest.mark.parametrize("psi_name", ["moderate", "steep", "reference"])
    def test_sandwich(self, psi_name, ref_psi):
        psi = {"moderate": MODERATE, "steep": STEEP, "reference": ref_psi}[psi_name]
        rng = np.random.default_rng(21)
        r = 10 ** rng.uniform(-8, 2, size=2000)
        vals = psi.value(r)
        lo = psi.prime(2 * psi.R1) * r
        assert np.all(lo <= vals + 1e-9)
        assert np.all(vals <= r + 1e-9)

    @pytest.mark.parametrize("psi_name", ["moderate", "steep", "reference"])
    def test_concavity_second_difference(self, psi_name, ref_psi):
        psi = {"moderate": MODERATE, "steep": STEEP, "reference": ref_psi}[psi_name]
        rng = np.random.default_rng(22)
        r = 10 ** rng.uniform(-4, math.log10(3 * psi.R1), size=2000)
        d = rng.random(2000) * r
        gap = psi.value(r + d) + psi.value(r - d) - 2 * psi.value(r)
        assert np.all(gap <= 1e-9)

    @pytest.mark.parametrize("psi_name", ["moderate", "steep", "reference"])
    def test_second_difference_curvature_bound(self, psi_name, ref_psi):
        # psi(r+d) + psi(r-d) - 2 psi(r) <= psi''(r) d^2 for 0 <= d <= r <= R1
        psi = {"moderate": MODERATE, "steep": STEEP, "reference": ref_psi}[psi_name]
        rng = np.random.default_rng(23)
        r = rng.random(2000) * psi.R1
        d = rng.random(2000) * r
        gap = psi.value(r + d) + psi.value(r - d) - 2 * psi.value(r)
        assert np.all(gap <= psi.second(r) * d ** 2 + 1e-9)

    @given(r=st.floats(1e-6, 10.0), frac=st.floats(0.0, 1.0))
    @settings(max_examples=300, deadline=None)
    def test_concavity_hypothesis(self, r, frac):
        d = frac * r
        psi = MODERATE
        gap = psi.value(r + d) + psi.value(r - d) - 2 * psi.value(r)
        assert gap <= 1e-9

    def test_monotone(self):
        r = np.linspace(0, 10, 500)
        for psi in (MODERATE, STEEP):
            assert np.all(np.diff(psi.value(r)) >= -1e-15)
