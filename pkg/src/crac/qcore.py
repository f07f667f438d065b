"""Dense one- and two-qubit quantum mechanics.

Composite systems are ordered (object, probe): the object index varies
slowest, so ``|1>|0>`` is basis index 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np

ATOL = 1e-12
POSITIVITY_SLACK = 1e-10

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class ContractError(ValueError):
    """Raised when an operation is called outside its contract."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    if not np.all(np.isfinite(a)):
        raise ContractError("non-finite amplitude")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PureState:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(self.amplitudes).reshape(-1)
        if amps.size not in (2, 4):
            raise ContractError(f"state dimension {amps.size} not in (2, 4)")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > ATOL:
            raise ContractError(f"state not normalized (norm^2={norm!r})")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def qubit_count(self) -> int:
        return 1 if self.amplitudes.size == 2 else 2

    @classmethod
    def normalized(cls, amplitudes) -> "PureState":
        a = np.asarray(amplitudes, dtype=complex).reshape(-1)
        return cls(a / np.linalg.norm(a))

    def density(self) -> "DensityMatrix":
        return DensityMatrix.positive(np.outer(self.amplitudes, self.amplitudes.conj()))

    def overlap(self, other: "PureState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


KET0 = PureState(np.array([1, 0]))
KET1 = PureState(np.array([0, 1]))


@dataclass(frozen=True)
class DensityMatrix:
    entries: np.ndarray

    def __post_init__(self):
        rho = _frozen(self.entries)
        if rho.shape not in ((2, 2), (4, 4)):
            raise ContractError(f"density matrix shape {rho.shape}")
        if np.max(np.abs(rho - rho.conj().T)) > ATOL:
            raise ContractError("density matrix not Hermitian")
        if abs(np.trace(rho) - 1.0) > ATOL:
            raise ContractError("density matrix trace != 1")
        if _min_eigenvalue(rho) < -POSITIVITY_SLACK:
            raise ContractError("density matrix has negative eigenvalue")
        object.__setattr__(self, "entries", rho)

    @classmethod
    def positive(cls, entries) -> "DensityMatrix":
        """Build from a matrix that is positive by construction (outer
        products, projections and conjugations of valid states), skipping
        the eigenvalue check but keeping the shape, Hermiticity and trace."""
        rho = _frozen(entries)
        if rho.shape not in ((2, 2), (4, 4)):
            raise ContractError(f"density matrix shape {rho.shape}")
        if np.max(np.abs(rho - rho.conj().T)) > ATOL or abs(np.trace(rho) - 1.0) > ATOL:
            raise ContractError("density matrix not Hermitian with unit trace")
        obj = object.__new__(cls)
        object.__setattr__(obj, "entries", rho)
        return obj

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def purity(self) -> float:
        return float(np.trace(self.entries @ self.entries).real)

    def bloch_vector(self) -> np.ndarray:
        if self.dim != 2:
            raise ContractError("Bloch vector needs a single qubit")
        return np.array(
            [np.trace(self.entries @ s).real for s in (SIGMA_X, SIGMA_Y, SIGMA_Z)]
        )


def _min_eigenvalue(h: np.ndarray) -> float:
    if h.shape == (2, 2):
        a, d = h[0, 0].real, h[1, 1].real
        return 0.5 * (a + d) - math.hypot(0.5 * (a - d), abs(h[0, 1]))
    return float(np.linalg.eigvalsh(h)[0])


class UnitaryLabel(Enum):
    IDENTITY = "identity"
    SWAP = "swap"
    PCC = "pcc"
    CUSTOM = "custom"


@dataclass(frozen=True)
class UnitaryOp:
    entries: np.ndarray
    label: UnitaryLabel = UnitaryLabel.CUSTOM
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        u = _frozen(self.entries)
        if u.shape != (4, 4):
            raise ContractError(f"unitary shape {u.shape}, expected (4, 4)")
        if unitarity_defect(u) > ATOL:
            raise ContractError("operator is not unitary")
        object.__setattr__(self, "entries", u)

    @property
    def dagger(self) -> np.ndarray:
        return self.entries.conj().T


def unitarity_defect(u: np.ndarray) -> float:
    u = np.asarray(u)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def spin_operator(angle: float) -> np.ndarray:
    """Equatorial spin observable cos(angle) sigma_x + sin(angle) sigma_y."""
    return np.cos(angle) * SIGMA_X + np.sin(angle) * SIGMA_Y


@dataclass(frozen=True)
class Projector:
    entries: np.ndarray
    axis: float
    sign: int

    @classmethod
    def along(cls, axis, sign: int) -> "Projector":
        """Sharp projector 1/2 (I + sign * n.sigma) for an equator axis.

        ``axis`` may be an angle or anything with an ``angle`` attribute.
        """
        if sign not in (1, -1):
            raise ContractError("projector sign must be +1 or -1")
        return _projector(float(getattr(axis, "angle", axis)), sign)

    def __post_init__(self):
        p = _frozen(self.entries)
        if p.shape != (2, 2):
            raise ContractError("projector must be 2x2")
        if np.max(np.abs(p @ p - p)) > ATOL:
            raise ContractError("projector is not idempotent")
        object.__setattr__(self, "entries", p)


@lru_cache(maxsize=4096)
def _projector(angle: float, sign: int) -> Projector:
    return Projector(0.5 * (I2 + sign * spin_operator(angle)), angle, sign)


def tensor(a, b):
    """Kronecker composite of two single-qubit objects, (a, b) ordering.

    Accepts pairs of PureState, pairs of DensityMatrix or pairs of raw 2x2
    operators; the result has the matching composite type.
    """
    if isinstance(a, PureState) and isinstance(b, PureState):
        if a.qubit_count != 1 or b.qubit_count != 1:
            raise ContractError("tensor needs single-qubit states")
        return PureState(np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        if a.dim != 2 or b.dim != 2:
            raise ContractError("tensor needs single-qubit density matrices")
        return DensityMatrix.positive(np.kron(a.entries, b.entries))
    if isinstance(a, (PureState, DensityMatrix)) or isinstance(
        b, (PureState, DensityMatrix)
    ):
        raise ContractError("tensor operands must be of the same kind")
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != (2, 2) or b.shape != (2, 2):
        raise ContractError("tensor needs 2x2 operators")
    return np.kron(a, b)


def apply(u: UnitaryOp, s: PureState) -> PureState:
    if not isinstance(u, UnitaryOp):
        raise ContractError("apply needs a UnitaryOp")
    if s.qubit_count != 2:
        raise ContractError("apply needs a two-qubit state")
    out = u.entries @ s.amplitudes
    # guard: renormalize only away rounding noise
    return PureState(out / np.linalg.norm(out))


def partial_trace(rho: DensityMatrix, keep: str) -> DensityMatrix:
    """Reduce a two-qubit state to the ``"first"`` or ``"second"`` qubit."""
    if rho.dim != 4:
        raise ContractError("partial_trace needs a two-qubit density matrix")
    r = rho.entries.reshape(2, 2, 2, 2)  # [i, j, k, l] = <ij|rho|kl>
    if keep == "first":
        out = np.einsum("ijkj->ik", r)
    elif keep == "second":
        out = np.einsum("ijil->jl", r)
    else:
        raise ContractError(f"keep must be 'first' or 'second', got {keep!r}")
    return DensityMatrix.positive(0.5 * (out + out.conj().T))


def _clamp_probability(p: float) -> float:
    if p < -ATOL or p > 1 + ATOL:
        raise ContractError(f"probability {p!r} outside [0, 1]")
    return min(1.0, max(0.0, p))


def born_probability(rho: DensityMatrix, p: Projector) -> float:
    if rho.dim != 2:
        raise ContractError("born_probability needs a single-qubit state")
    return _clamp_probability(float(np.trace(rho.entries @ p.entries).real))


def expectation(rho: DensityMatrix, axis) -> float:
    return born_probability(rho, Projector.along(axis, 1)) - born_probability(
        rho, Projector.along(axis, -1)
    )
