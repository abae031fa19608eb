"""
tests/test_boundary.py

Testar ψ och bredderna mot handräknade värden och deras monotonicitet.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from app.core.boundary import (
    BoundaryParams,
    CsBudget,
    psi,
    psi_array,
    range_term,
    width_proxy,
    width_residual,
)


# ── Test: ψ ──────────────────────────────────────────────────────────────────

class TestPsi:
    def test_handraknat_v25(self):
        # 1.7·sqrt(25·(ln ln 50 + 0.72·ln 104))
        assert psi(25, 0.05) == pytest.approx(18.443, abs=0.01)

    def test_handraknat_v1(self):
        assert psi(1, 0.05) == pytest.approx(2.9334, abs=0.005)

    def test_golv_for_liten_varians(self):
        assert psi(0, 0.05) == psi(1, 0.05)
        assert psi(0.3, 0.05) == psi(1, 0.05)

    def test_sluten_form(self):
        v, alpha = 40.0, 0.01
        expected = 1.7 * math.sqrt(v * (math.log(math.log(2 * v)) + 0.72 * math.log(5.2 / alpha)))
        assert psi(v, alpha) == pytest.approx(expected, rel=1e-12)

    def test_egna_konstanter(self):
        params = BoundaryParams(leading_coeff=3.4)
        assert psi(10, 0.05, params) == pytest.approx(2 * psi(10, 0.05), rel=1e-12)

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.1, 1.5])
    def test_ogiltig_alpha(self, alpha):
        with pytest.raises(ValueError):
            psi(10, alpha)

    def test_negativ_varians(self):
        with pytest.raises(ValueError):
            psi(-1, 0.05)

    def test_array_matchar_skalar(self):
        v = np.array([0.0, 0.5, 1.0, 2.5, 25.0, 1e4])
        expected = [psi(x, 0.02) for x in v]
        np.testing.assert_allclose(psi_array(v, 0.02), expected, rtol=1e-12)

    @given(
        v1=st.floats(0, 1e6),
        v2=st.floats(0, 1e6),
        alpha=st.floats(1e-6, 0.99),
    )
    def test_okar_med_varians(self, v1, v2, alpha):
        lo, hi = sorted((v1, v2))
        assert psi(lo, alpha) <= psi(hi, alpha) + 1e-9

    @given(
        v=st.floats(0, 1e6),
        a1=st.floats(1e-6, 0.99),
        a2=st.floats(1e-6, 0.99),
    )
    def test_minskar_med_alpha(self, v, a1, a2):
        lo, hi = sorted((a1, a2))
        assert psi(v, hi) <= psi(v, lo) + 1e-9


# ── Test: budget ─────────────────────────────────────────────────────────────

class TestCsBudget:
    def test_delta_per_arm(self):
        budget = CsBudget.for_arms(0.05, 4)
        assert budget.delta_k == pytest.approx(0.0125)

    def test_en_arm(self):
        assert CsBudget.for_arms(0.1, 1).delta_k == pytest.approx(0.1)

    def test_ogiltig_delta(self):
        with pytest.raises(ValueError):
            CsBudget.for_arms(1.5, 4)


# ── Test: bredder ────────────────────────────────────────────────────────────

class TestWidthProxy:
    def test_handraknat(self):
        # ψ(25; 0.00625)/100 för δ = 0.05, K = 4
        assert width_proxy(100, 0.0125) == pytest.approx(0.2117, abs=1e-3)
        assert width_proxy(100, 0.0125) == pytest.approx(psi(25, 0.00625) / 100, rel=1e-12)

    def test_golv_for_en_dragning(self):
        assert width_proxy(1, 0.025) == pytest.approx(psi(1, 0.0125), rel=1e-12)

    def test_noll_dragningar(self):
        with pytest.raises(ValueError):
            width_proxy(0, 0.0125)

    @settings(max_examples=200)
    @given(n=st.integers(1, 10**6), delta_k=st.floats(1e-4, 0.5))
    def test_krymper_med_data(self, n, delta_k):
        assert width_proxy(n + 1, delta_k) < width_proxy(n, delta_k)

    @given(n=st.integers(4, 10**5), delta_k=st.floats(1e-4, 0.5))
    def test_fyrdubbling(self, n, delta_k):
        assert width_proxy(n, delta_k) >= width_proxy(4 * n, delta_k)


class TestWidthResidual:
    def test_handraknat(self):
        expected = (psi(50, 0.00625) + 0.45 * 40 * math.log(832)) / 200
        assert width_residual(200, 50, 0.05, 0.0125) == pytest.approx(expected, rel=1e-12)
        assert width_residual(200, 50, 0.05, 0.0125) == pytest.approx(0.7568, abs=1e-3)

    def test_utan_audits_ar_bredden_andlig(self):
        n, pi_min, delta_k = 300, 0.05, 0.0125
        expected = 0.45 * (2 / pi_min) * math.log(10.4 / delta_k) / n + psi(0, delta_k / 2) / n
        assert width_residual(n, 0.0, pi_min, delta_k) == pytest.approx(expected, rel=1e-12)
        assert width_residual(2 * n, 0.0, pi_min, delta_k) < width_residual(n, 0.0, pi_min, delta_k)

    def test_dubblad_pi_min_halverar_intervalltermen(self):
        assert range_term(0.1, 0.0125) == pytest.approx(range_term(0.05, 0.0125) / 2, rel=1e-12)

    def test_dekomposition(self):
        n, v_hat, pi_min, delta_k = 500, 120.0, 0.1, 0.025
        total = width_residual(n, v_hat, pi_min, delta_k)
        parts = (psi(v_hat, delta_k / 2) + range_term(pi_min, delta_k)) / n
        assert total == pytest.approx(parts, rel=1e-12)

    def test_ogiltig_pi_min(self):
        with pytest.raises(ValueError):
            width_residual(10, 1.0, 0.0, 0.0125)
