import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crac.infotheory import (
    JointDistribution,
    binary_entropy,
    bsc_information,
    es_margins,
    evans_schulman_bound,
    mutual_information,
)
from crac.qcore import ContractError


class TestEntropy:
    def test_values(self):
        assert binary_entropy(0.5) == 1.0
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0
        direct = -0.75 * math.log2(0.75) - 0.25 * math.log2(0.25)
        assert binary_entropy(0.75) == pytest.approx(direct, abs=1e-15)
        assert binary_entropy(0.75) == pytest.approx(0.811278, abs=1e-6)

    def test_contract(self):
        with pytest.raises(ContractError):
            binary_entropy(1.1)
        assert binary_entropy(1 + 1e-13) == 0.0


class TestMutualInformation:
    def test_perfect_correlation(self):
        assert mutual_information(np.diag([0.5, 0.5])) == pytest.approx(1.0)

    def test_independent(self):
        assert mutual_information(np.full((2, 2), 0.25)) == pytest.approx(0.0, abs=1e-15)

    def test_symmetric_channel(self):
        j = JointDistribution.symmetric(0.75)
        assert mutual_information(j) == pytest.approx(1 - binary_entropy(0.75), abs=1e-15)
        assert mutual_information(j) == pytest.approx(0.188722, abs=1e-6)

    def test_rejects_bad_tables(self):
        with pytest.raises(ContractError):
            JointDistribution(np.full((2, 2), 0.3))
        with pytest.raises(ContractError):
            JointDistribution(np.array([[0.6, -0.1], [0.25, 0.25]]))

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(0, 1), min_size=4, max_size=4))
    def test_relabeling_invariance(self, cells):
        t = np.array(cells).reshape(2, 2)
        if t.sum() < 1e-6:
            return
        t = t / t.sum()
        i = mutual_information(t)
        assert i >= 0
        assert mutual_information(t[::-1]) == pytest.approx(i, abs=1e-12)
        assert mutual_information(t[:, ::-1]) == pytest.approx(i, abs=1e-12)


class TestEvansSchulman:
    @pytest.mark.parametrize("xi,bound", [(0.0, 0.0), (1.0, 1.0), (0.5, 0.25)])
    def test_bound_values(self, xi, bound):
        assert evans_schulman_bound(xi) == bound

    def test_half_bias_channel_respects_bound(self):
        assert bsc_information(0.5) == pytest.approx(0.188722, abs=1e-6)
        assert bsc_information(0.5) <= evans_schulman_bound(0.5)

    def test_margins_nonnegative(self):
        xi, m = es_margins(1e-3)
        assert xi.size == 1001
        assert np.all(m >= 0)
        assert np.all(m[1:-1] > 0)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(0, 1))
    def test_bound_holds(self, xi):
        assert bsc_information(xi) <= evans_schulman_bound(xi) + 1e-15
