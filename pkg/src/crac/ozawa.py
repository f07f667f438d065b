"""Ozawa noise and disturbance for an object-probe interaction.

Both quantities are root-mean-square differences between a Heisenberg-picture
output observable and the corresponding input observable, evaluated on
``|psi> (x) |probe>``. Observables are equatorial spin axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import as_direction
from .qcore import ATOL, I2, KET0, ContractError, PureState, UnitaryOp, spin_operator, tensor


@dataclass(frozen=True)
class HeisenbergPair:
    in_op: np.ndarray
    out_op: np.ndarray

    def __post_init__(self):
        for op in (self.in_op, self.out_op):
            if np.max(np.abs(op - op.conj().T)) > ATOL:
                raise ContractError("Heisenberg observable not Hermitian")

    def rms_difference(self, state: PureState) -> float:
        d = self.out_op - self.in_op
        v = state.amplitudes
        sq = float(np.vdot(v, d @ d @ v).real)
        if sq < -ATOL:
            raise ContractError("negative squared deviation")
        return math.sqrt(max(sq, 0.0))


def meter_pair(u: UnitaryOp, axis) -> HeisenbergPair:
    """(A (x) I, U^dag (I (x) M) U) with the meter reading the same axis as A."""
    s = spin_operator(as_direction(axis).angle)
    return HeisenbergPair(np.kron(s, I2), u.dagger @ np.kron(I2, s) @ u.entries)


def object_pair(u: UnitaryOp, axis) -> HeisenbergPair:
    """(B (x) I, U^dag (B (x) I) U)."""
    s = spin_operator(as_direction(axis).angle)
    b_in = np.kron(s, I2)
    return HeisenbergPair(b_in, u.dagger @ b_in @ u.entries)


def _initial(psi: PureState, probe: PureState) -> PureState:
    if psi.qubit_count != 1 or probe.qubit_count != 1:
        raise ContractError("object and probe must be single qubits")
    return tensor(psi, probe)


def noise_epsilon(u: UnitaryOp, psi: PureState, axis_a, probe: PureState = KET0) -> float:
    return meter_pair(u, axis_a).rms_difference(_initial(psi, probe))


def disturbance_eta(u: UnitaryOp, psi: PureState, axis_b, probe: PureState = KET0) -> float:
    return object_pair(u, axis_b).rms_difference(_initial(psi, probe))


def meter_expectations(u: UnitaryOp, psi: PureState, axis_a, probe: PureState = KET0):
    """(<A_in>, <M_out>) on the initial composite state."""
    pair = meter_pair(u, axis_a)
    v = _initial(psi, probe).amplitudes
    return (
        float(np.vdot(v, pair.in_op @ v).real),
        float(np.vdot(v, pair.out_op @ v).real),
    )
