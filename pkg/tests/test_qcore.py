import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crac.geometry import phase_state
from crac.machines import pcc_op, swap_op
from crac.qcore import (
    I2,
    KET0,
    KET1,
    SIGMA_Z,
    ContractError,
    DensityMatrix,
    Projector,
    PureState,
    apply,
    born_probability,
    expectation,
    partial_trace,
    tensor,
)
from crac.protocol import SINGLET

from conftest import random_qubit


def brute_partial_trace(rho, keep):
    out = np.zeros((2, 2), dtype=complex)
    for i in range(2):
        for k in range(2):
            for j in range(2):
                if keep == "first":
                    out[i, k] += rho[2 * i + j, 2 * k + j]
                else:
                    out[i, k] += rho[2 * j + i, 2 * j + k]
    return out


class TestTensor:
    def test_basis_ordering(self):
        np.testing.assert_array_equal(tensor(KET0, KET0).amplitudes, [1, 0, 0, 0])
        np.testing.assert_array_equal(tensor(KET1, KET0).amplitudes, [0, 0, 1, 0])

    def test_operator_expectation_matches_dense_loop(self, rng):
        op = tensor(I2, SIGMA_Z)
        for v in [SINGLET.amplitudes] + [
            np.kron(random_qubit(rng), random_qubit(rng)) for _ in range(5)
        ]:
            brute = 0j
            for r in range(4):
                for c in range(4):
                    # I (x) Z has entries delta(r0,c0) * Z[r1, c1]
                    if r // 2 == c // 2:
                        brute += v[r].conjugate() * SIGMA_Z[r % 2, c % 2] * v[c]
            assert np.vdot(v, op @ v) == pytest.approx(brute, abs=1e-12)
        assert np.vdot(SINGLET.amplitudes, op @ SINGLET.amplitudes).real == pytest.approx(0, abs=1e-15)

    def test_mixed_kinds_rejected(self):
        with pytest.raises(ContractError):
            tensor(KET0, KET0.density())
        with pytest.raises(ContractError):
            tensor(SINGLET, KET0)


class TestApply:
    def test_swap_exchanges_object_and_probe(self, rng):
        for _ in range(100):
            psi = PureState(random_qubit(rng))
            out = apply(swap_op(), tensor(psi, KET0))
            np.testing.assert_allclose(out.amplitudes, tensor(KET0, psi).amplitudes, atol=1e-12)

    def test_identity_and_pcc_endpoint(self, rng):
        from crac.machines import identity_op

        s = PureState(np.kron(random_qubit(rng), random_qubit(rng)))
        np.testing.assert_allclose(apply(identity_op(), s).amplitudes, s.amplitudes)
        out = apply(pcc_op(math.pi / 2), tensor(KET1, KET0))
        np.testing.assert_allclose(out.amplitudes, tensor(KET0, KET1).amplitudes, atol=1e-15)

    def test_rejects_single_qubit(self):
        with pytest.raises(ContractError):
            apply(swap_op(), KET0)


class TestPartialTrace:
    def test_product_state(self):
        r = partial_trace(tensor(KET0, KET0).density(), "first")
        np.testing.assert_allclose(r.entries, [[1, 0], [0, 0]])

    @pytest.mark.parametrize("keep", ["first", "second"])
    def test_singlet_is_maximally_mixed(self, keep):
        np.testing.assert_allclose(partial_trace(SINGLET.density(), keep).entries, I2 / 2, atol=1e-15)

    @pytest.mark.parametrize("eta", [0.0, 0.3, math.pi / 4, 1.2, math.pi / 2])
    def test_cloned_probe_coherence(self, eta):
        phi = 0.9
        state = apply(pcc_op(eta), tensor(phase_state(phi), KET0)).density()
        probe = partial_trace(state, "second")
        np.testing.assert_allclose(probe.entries, brute_partial_trace(state.entries, "second"), atol=1e-15)
        assert abs(probe.entries[1, 0]) == pytest.approx(math.sin(eta) / 2, abs=1e-12)

    def test_matches_brute_force(self, rng):
        v = rng.normal(size=4) + 1j * rng.normal(size=4)
        rho = PureState.normalized(v).density()
        for keep in ("first", "second"):
            np.testing.assert_allclose(partial_trace(rho, keep).entries,
                                       brute_partial_trace(rho.entries, keep), atol=1e-15)

    def test_bad_keep(self):
        with pytest.raises(ContractError):
            partial_trace(SINGLET.density(), "both")


class TestBorn:
    def test_pole_against_equator(self):
        for sign in (1, -1):
            assert born_probability(KET0.density(), Projector.along(1.1, sign)) == pytest.approx(0.5)

    def test_eigenstate(self):
        assert born_probability(phase_state(0.4).density(), Projector.along(0.4, 1)) == pytest.approx(1.0)

    def test_cloned_probe_probability(self):
        state = apply(pcc_op(math.pi / 4), tensor(phase_state(0.0), KET0)).density()
        probe = partial_trace(state, "second")
        assert born_probability(probe, Projector.along(0.0, 1)) == pytest.approx(
            0.5 * (1 + math.sin(math.pi / 4)), abs=1e-12
        )
        assert 0.5 * (1 + math.sin(math.pi / 4)) == pytest.approx(0.85355, abs=1e-5)

    def test_projector_algebra(self):
        p, m = Projector.along(0.7, 1), Projector.along(0.7, -1)
        np.testing.assert_allclose(p.entries + m.entries, I2, atol=1e-15)
        np.testing.assert_allclose(p.entries @ p.entries, p.entries, atol=1e-15)


class TestExpectation:
    def test_maximally_mixed(self):
        assert expectation(DensityMatrix(I2 / 2), 0.3) == pytest.approx(0.0)

    def test_antipodal(self):
        assert expectation(phase_state(1.0).density(), 1.0 + math.pi) == pytest.approx(-1.0)

    def test_swap_carries_expectation_to_probe(self, rng):
        for _ in range(100):
            psi = PureState(random_qubit(rng))
            axis = rng.uniform(0, 2 * math.pi)
            before = expectation(psi.density(), axis)
            out = apply(swap_op(), tensor(psi, KET0)).density()
            after = expectation(partial_trace(out, "second"), axis)
            assert after == pytest.approx(before, abs=1e-12)


class TestContracts:
    def test_unnormalized_state(self):
        with pytest.raises(ContractError):
            PureState(np.array([1.0, 1.0]))

    def test_non_finite(self):
        with pytest.raises(ContractError):
            PureState(np.array([np.nan, 1.0]))

    def test_non_unitary(self):
        from crac.qcore import UnitaryOp

        with pytest.raises(ContractError):
            UnitaryOp(np.ones((4, 4)))

    def test_negative_density(self):
        with pytest.raises(ContractError):
            DensityMatrix(np.diag([1.5, -0.5]))


@settings(max_examples=60, deadline=None)
@given(
    re=st.lists(st.floats(-1, 1), min_size=4, max_size=4),
    im=st.lists(st.floats(-1, 1), min_size=4, max_size=4),
    axis=st.floats(0, 2 * math.pi),
    eta=st.floats(0, math.pi / 2),
)
def test_reduced_state_invariants(re, im, axis, eta):
    v = np.array(re) + 1j * np.array(im)
    if np.linalg.norm(v) < 1e-3:
        return
    s = apply(pcc_op(eta), PureState.normalized(v))
    assert np.linalg.norm(s.amplitudes) == pytest.approx(1.0, abs=1e-12)
    for keep in ("first", "second"):
        r = partial_trace(s.density(), keep)
        assert np.trace(r.entries).real == pytest.approx(1.0, abs=1e-12)
        assert r.purity() <= 1 + 1e-12
        assert np.min(np.linalg.eigvalsh(r.entries)) >= -1e-10
        total = born_probability(r, Projector.along(axis, 1)) + born_probability(r, Projector.along(axis, -1))
        assert total == pytest.approx(1.0, abs=1e-12)
