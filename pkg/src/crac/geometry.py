"""Bloch-equator geometry: phase states, bit encoding and the quadrant partition."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .qcore import ContractError, PureState

TWO_PI = 2.0 * math.pi
# fraction of each quadrant arc kept clear of its endpoints when sampling,
# so float rounding can never push a sample across a boundary
_EDGE_GUARD = 1e-9


@dataclass(frozen=True)
class EquatorDirection:
    angle: float

    def __post_init__(self):
        a = float(self.angle)
        if not math.isfinite(a):
            raise ContractError("direction angle must be finite")
        a = math.fmod(a, TWO_PI)
        if a < 0:
            a += TWO_PI
        if a >= TWO_PI:
            a = 0.0
        object.__setattr__(self, "angle", a)

    @property
    def vector(self) -> np.ndarray:
        return np.array([math.cos(self.angle), math.sin(self.angle), 0.0])

    def dot(self, other: "EquatorDirection") -> float:
        return math.cos(self.angle - other.angle)

    def rotated(self, by: float) -> "EquatorDirection":
        return EquatorDirection(self.angle + by)


def as_direction(x) -> EquatorDirection:
    return x if isinstance(x, EquatorDirection) else EquatorDirection(x)


class DatabaseBits(NamedTuple):
    x_a: int
    x_b: int

    @property
    def index(self) -> int:
        return 2 * self.x_a + self.x_b

    @classmethod
    def from_index(cls, i: int) -> "DatabaseBits":
        if not 0 <= i < 4:
            raise ContractError(f"database index {i} out of range")
        return cls(i >> 1, i & 1)


ALL_BITS = tuple(DatabaseBits.from_index(i) for i in range(4))


class Arc(NamedTuple):
    start: float
    length: float
    # which axis has its zero-crossing at each end of the arc
    start_axis: str
    end_axis: str


@dataclass(frozen=True)
class QuadrantPartition:
    axis_a: EquatorDirection
    axis_b: EquatorDirection

    def __post_init__(self):
        a, b = as_direction(self.axis_a), as_direction(self.axis_b)
        object.__setattr__(self, "axis_a", a)
        object.__setattr__(self, "axis_b", b)
        if abs(math.sin(a.angle - b.angle)) < 1e-12:
            raise ContractError("axes are parallel or antiparallel; quadrants degenerate")

    @classmethod
    def orthogonal(cls, axis_a: float = 0.0) -> "QuadrantPartition":
        return cls(EquatorDirection(axis_a), EquatorDirection(axis_a + math.pi / 2))

    def arcs(self) -> dict[DatabaseBits, Arc]:
        """The four quadrant arcs, keyed by the bits they encode."""
        cuts = []
        for name, ax in (("a", self.axis_a), ("b", self.axis_b)):
            for off in (math.pi / 2, -math.pi / 2):
                cuts.append((EquatorDirection(ax.angle + off).angle, name))
        cuts.sort()
        out = {}
        for k, (start, name) in enumerate(cuts):
            end, end_name = cuts[(k + 1) % 4]
            length = (end - start) % TWO_PI
            mid = EquatorDirection(start + length / 2)
            out[database_bits(mid, self)] = Arc(start, length, name, end_name)
        return out


def phase_state(phi) -> PureState:
    phi = as_direction(phi).angle
    return PureState(np.array([1.0, np.exp(1j * phi)]) / math.sqrt(2.0))


def orthogonal_state(phi) -> PureState:
    phi = as_direction(phi).angle
    return PureState(np.array([1.0, -np.exp(1j * phi)]) / math.sqrt(2.0))


def heaviside(z: float) -> int:
    return 1 if z > 0 else 0


def database_bits(phi, part: QuadrantPartition) -> DatabaseBits:
    phi = as_direction(phi)
    return DatabaseBits(
        1 - heaviside(phi.dot(part.axis_a)), 1 - heaviside(phi.dot(part.axis_b))
    )


def point_on_arc(arc: Arc, t: float) -> EquatorDirection:
    """Point at fraction ``t`` along ``arc``, clear of the endpoints."""
    t = _EDGE_GUARD + (1.0 - 2.0 * _EDGE_GUARD) * t
    return EquatorDirection(arc.start + t * arc.length)


def sample_in_quadrant(
    bits: DatabaseBits, part: QuadrantPartition, rng: np.random.Generator
) -> EquatorDirection:
    return point_on_arc(part.arcs()[DatabaseBits(*bits)], float(rng.random()))


def quadrant_representatives(
    phi, part: QuadrantPartition
) -> dict[DatabaseBits, EquatorDirection]:
    """One encoding direction per quadrant, derived from a single angle.

    ``phi`` represents its own quadrant and its antipode the opposite one.
    The two remaining quadrants are reached by crossing the boundary where
    the b-axis dot product vanishes, keeping the same fractional distance
    from that boundary. For orthogonal axes this is the mirror image of
    ``phi`` in the a-axis, so every quadrant sees the same |a.phi| and
    |b.phi|.
    """
    phi = as_direction(phi)
    arcs = part.arcs()
    own = database_bits(phi, part)
    arc = arcs[own]
    offset = (phi.angle - arc.start) % TWO_PI
    if arc.start_axis == "b":
        frac_from_b = offset / arc.length
        neighbour = next(
            bits for bits, other in arcs.items()
            if bits != own and abs(((other.start + other.length) - arc.start + math.pi) % TWO_PI - math.pi) < 1e-12
        )
        n_arc = arcs[neighbour]
        mirror = EquatorDirection(n_arc.start + n_arc.length * (1.0 - frac_from_b))
    else:
        frac_from_b = (arc.length - offset) / arc.length
        neighbour = next(
            bits for bits, other in arcs.items()
            if bits != own and abs((other.start - (arc.start + arc.length) + math.pi) % TWO_PI - math.pi) < 1e-12
        )
        n_arc = arcs[neighbour]
        mirror = EquatorDirection(n_arc.start + n_arc.length * frac_from_b)
    flip = lambda bits: DatabaseBits(1 - bits.x_a, 1 - bits.x_b)  # noqa: E731
    return {
        own: phi,
        flip(own): phi.rotated(math.pi),
        neighbour: mirror,
        flip(neighbour): mirror.rotated(math.pi),
    }
