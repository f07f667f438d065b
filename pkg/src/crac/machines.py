"""Object-probe interaction unitaries: identity, SWAP and the phase-covariant cloner."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .qcore import ContractError, UnitaryLabel, UnitaryOp


@dataclass(frozen=True)
class ClonerAngle:
    eta: float

    def __post_init__(self):
        eta = float(self.eta)
        if not (0.0 <= eta <= math.pi / 2):
            raise ContractError(f"cloner angle {eta!r} outside [0, pi/2]")
        object.__setattr__(self, "eta", eta)


def as_cloner_angle(x) -> ClonerAngle:
    return x if isinstance(x, ClonerAngle) else ClonerAngle(x)


def identity_op() -> UnitaryOp:
    return UnitaryOp(np.eye(4), UnitaryLabel.IDENTITY)


def swap_op() -> UnitaryOp:
    u = np.zeros((4, 4))
    u[0, 0] = u[3, 3] = 1.0
    u[1, 2] = u[2, 1] = 1.0
    return UnitaryOp(u, UnitaryLabel.SWAP)


def pcc_op(angle, completion_phase: float = 0.0) -> UnitaryOp:
    """Economical 1->2 phase-covariant cloner, no ancilla.

    U|00> = |00>,  U|10> = cos(eta)|10> + sin(eta)|01>.
    The remaining columns are fixed as U|01> = cos(eta)|01> - sin(eta)|10>
    and U|11> = |11>, each multiplied by ``exp(i * completion_phase)``. With
    the probe prepared in |0> those columns never act, which the tests use
    to show the completion choice is irrelevant.
    """
    eta = as_cloner_angle(angle).eta
    c, s = math.cos(eta), math.sin(eta)
    ph = np.exp(1j * completion_phase)
    u = np.zeros((4, 4), dtype=complex)
    u[0, 0] = 1.0
    u[2, 2], u[1, 2] = c, s
    u[1, 1], u[2, 1] = c * ph, -s * ph
    u[3, 3] = ph
    return UnitaryOp(u, UnitaryLabel.PCC, {"eta": eta, "completion_phase": completion_phase})


def named_unitary(name: str, eta: float | None = None) -> UnitaryOp:
    if name == "identity":
        return identity_op()
    if name == "swap":
        return swap_op()
    if name == "pcc":
        if eta is None:
            raise ContractError("pcc needs a cloner angle")
        return pcc_op(eta)
    raise ContractError(f"unknown unitary {name!r}")
