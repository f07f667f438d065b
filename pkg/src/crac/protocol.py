"""Coarse-grained random access code: encoding, one-bit communication, decoding.

Alice and Bob share the singlet. Alice measures her half in the basis
{|phi>, |phi_perp>} for a direction phi in the quadrant of her two database
bits and announces beta = 1 when she finds |phi>. Bob runs his qubit through
a phase-covariant cloner into probe A, reads axis A on that probe, swaps the
object into probe B and reads axis B there. His guesses are the outcomes
corrected by beta.

Two engines are provided: ``exact_statistics`` (dense density matrices, no
sampling) and ``run_trials`` (seeded Monte Carlo on the compiled kernel).
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from . import kernels
from .geometry import (
    ALL_BITS,
    DatabaseBits,
    EquatorDirection,
    QuadrantPartition,
    as_direction,
    database_bits,
    orthogonal_state,
    phase_state,
    point_on_arc,
    quadrant_representatives,
)
from .infotheory import JointDistribution
from .machines import ClonerAngle, as_cloner_angle, pcc_op, swap_op
from .qcore import (
    KET0,
    ContractError,
    DensityMatrix,
    I2,
    Projector,
    PureState,
    UnitaryOp,
    apply,
    born_probability,
    partial_trace,
    tensor,
)

# singlet (|01> - |10>)/sqrt(2), Alice's qubit first
SINGLET = PureState(np.array([0, 1, -1, 0]) / math.sqrt(2.0))
UNIFORM_PRIOR = (0.25, 0.25, 0.25, 0.25)
QUAD_RTOL = 1e-9
# branches below this weight are dropped rather than renormalized
NEGLIGIBLE = 1e-14


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class ProtocolConfig:
    axis_a: EquatorDirection
    axis_b: EquatorDirection
    cloner_eta: ClonerAngle
    phi_mode: str = "fixed"
    phi: float | None = None
    bits_prior: tuple = UNIFORM_PRIOR
    trials: int = 10_000
    seed: int = 0
    shards: int = 1

    def __post_init__(self):
        object.__setattr__(self, "axis_a", as_direction(self.axis_a))
        object.__setattr__(self, "axis_b", as_direction(self.axis_b))
        object.__setattr__(self, "cloner_eta", as_cloner_angle(self.cloner_eta))
        self.partition  # non-degeneracy check
        if self.phi_mode not in ("fixed", "uniform"):
            raise ContractError(f"phi_mode must be 'fixed' or 'uniform', got {self.phi_mode!r}")
        if self.phi_mode == "fixed":
            if self.phi is None:
                raise ContractError("fixed phi mode needs an angle")
            object.__setattr__(self, "phi", as_direction(self.phi).angle)
        prior = tuple(float(p) for p in self.bits_prior)
        if len(prior) != 4 or min(prior) < 0 or abs(sum(prior) - 1.0) > 1e-12:
            raise ContractError("bits_prior must be 4 nonnegative weights summing to 1")
        object.__setattr__(self, "bits_prior", prior)
        if int(self.trials) < 0 or int(self.shards) < 1:
            raise ContractError("trials must be >= 0 and shards >= 1")

    @property
    def partition(self) -> QuadrantPartition:
        return QuadrantPartition(self.axis_a, self.axis_b)

    @property
    def eta(self) -> float:
        return self.cloner_eta.eta

    def unitaries(self) -> tuple[UnitaryOp, UnitaryOp]:
        return pcc_op(self.cloner_eta), swap_op()

    def representatives(self) -> dict[DatabaseBits, EquatorDirection]:
        if self.phi_mode != "fixed":
            raise ContractError("representatives only exist in fixed phi mode")
        return quadrant_representatives(self.phi, self.partition)

    def to_dict(self) -> dict:
        return {
            "axis_a": self.axis_a.angle,
            "axis_b": self.axis_b.angle,
            "cloner_eta": self.eta,
            "phi_mode": self.phi_mode,
            "phi": self.phi,
            "bits_prior": list(self.bits_prior),
            "trials": int(self.trials),
            "seed": int(self.seed),
            "shards": int(self.shards),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProtocolConfig":
        d = dict(d)
        d["bits_prior"] = tuple(d.get("bits_prior", UNIFORM_PRIOR))
        return cls(**d)

    def config_hash(self) -> str:
        blob = json.dumps(
            {k: (repr(v) if isinstance(v, float) else v) for k, v in self.to_dict().items()},
            sort_keys=True,
        )
        return hashlib.sha256(blob.encode()).hexdigest()


class TrialRecord(NamedTuple):
    bits: DatabaseBits
    phi: float
    beta: int
    outcome_a: int
    outcome_b: int
    guess_a: int
    guess_b: int


@dataclass
class ChannelStats:
    """Joint (x, g) tables for both observables, x indexing rows.

    ``outcome_a``/``outcome_b`` hold the same channels expressed through the
    bits of Bob's actual qubit direction and his raw outcomes.
    """

    joint_a: JointDistribution
    joint_b: JointDistribution
    classical_bits_used: int
    trials: int = 0
    exact: bool = False
    bias: tuple | None = None
    outcome_a: JointDistribution | None = None
    outcome_b: JointDistribution | None = None
    counts_a: np.ndarray | None = field(default=None, repr=False)
    counts_b: np.ndarray | None = field(default=None, repr=False)

    def success(self) -> tuple[float, float]:
        return (
            float(np.trace(self.joint_a.table)),
            float(np.trace(self.joint_b.table)),
        )

    def to_dict(self) -> dict:
        d = {
            "joint_a": self.joint_a.table.tolist(),
            "joint_b": self.joint_b.table.tolist(),
            "classical_bits_used": self.classical_bits_used,
            "trials": self.trials,
            "exact": self.exact,
        }
        if self.bias is not None:
            d["bias"] = list(self.bias)
        if self.counts_a is not None:
            d["counts_a"] = self.counts_a.tolist()
            d["counts_b"] = self.counts_b.tolist()
        return d


# -- protocol phases ----------------------------------------------------------


def guess(outcome: int, beta: int) -> int:
    return ((1 - outcome) // 2 + beta) % 2


def bob_state_for(phi, beta: int) -> PureState:
    return orthogonal_state(phi) if beta else phase_state(phi)


def encode(phi, rng: np.random.Generator | None = None, *, u: float | None = None):
    """Alice's basis measurement on the singlet.

    Returns (beta, Bob's conditional qubit). ``u`` overrides the uniform draw.
    """
    if u is None:
        u = float(rng.random())
    p_phi = projector_on_alice(phase_state(phi))
    prob_phi = float(np.vdot(SINGLET.amplitudes, p_phi @ SINGLET.amplitudes).real)
    beta = 1 if u < prob_phi else 0
    alice = phase_state(phi) if beta else orthogonal_state(phi)
    # <alice| (x) I applied to the singlet
    bob = alice.amplitudes.conj() @ SINGLET.amplitudes.reshape(2, 2)
    return beta, PureState.normalized(bob)


def projector_on_alice(state: PureState) -> np.ndarray:
    return np.kron(np.outer(state.amplitudes, state.amplitudes.conj()), I2)


@lru_cache(maxsize=4096)
def _probe_projector(axis: float, sign: int) -> np.ndarray:
    p = np.kron(I2, Projector.along(axis, sign).entries)
    p.setflags(write=False)
    return p


def _measure_probe(rho: np.ndarray, axis: float, sign: int):
    """Unnormalized post-measurement state and probability, probe = 2nd qubit."""
    p = _probe_projector(axis, sign)
    post = p @ rho @ p
    return post, float(np.trace(post).real)


def outcome_distribution(
    bob_state: PureState,
    u_a: UnitaryOp,
    u_b: UnitaryOp,
    axis_a,
    axis_b,
    *,
    measure_a: bool = True,
    probe_b: str = "swap",
) -> np.ndarray:
    """Exact P(o_a, o_b) as a 2x2 array, index 0 for +1 and 1 for -1.

    ``measure_a=False`` skips the probe-A readout (row 0 then carries the
    whole o_b marginal). ``probe_b="direct"`` reads axis B on the object
    instead of swapping it into probe B first.
    """
    a = as_direction(axis_a).angle
    b = as_direction(axis_b).angle
    rho = apply(u_a, tensor(bob_state, KET0)).density().entries
    out = np.zeros((2, 2))
    branches = [(0, 1), (1, -1)] if measure_a else [(0, None)]
    for ia, sa in branches:
        if sa is None:
            post, pa = rho, 1.0
        else:
            post, pa = _measure_probe(rho, a, sa)
        if pa <= NEGLIGIBLE:
            continue
        obj = partial_trace(DensityMatrix.positive(post / pa), "first")
        if probe_b == "swap":
            full = tensor(obj, KET0.density()).entries
            full = u_b.entries @ full @ u_b.dagger
            reader = partial_trace(DensityMatrix.positive(full), "second")
        elif probe_b == "direct":
            reader = obj
        else:
            raise ContractError(f"probe_b must be 'swap' or 'direct', got {probe_b!r}")
        for ib, sb in ((0, 1), (1, -1)):
            out[ia, ib] = pa * born_probability(reader, Projector.along(b, sb))
    return out


def decode(bob_state: PureState, cfg: ProtocolConfig, rng=None, *, r=None):
    """One sampled pass of Bob's apparatus on the dense-matrix path.

    ``r`` = (r_a, r_b) overrides the two uniforms; outcome +1 is chosen when
    the uniform falls below its Born probability.
    """
    if r is None:
        r = rng.random(2)
    u_a, u_b = cfg.unitaries()
    rho = apply(u_a, tensor(bob_state, KET0)).density().entries
    post, p_plus = _measure_probe(rho, cfg.axis_a.angle, 1)
    if not (r[0] < p_plus and p_plus > 0):
        post, p_minus = _measure_probe(rho, cfg.axis_a.angle, -1)
        o_a, p = -1, p_minus
    else:
        o_a, p = 1, p_plus
    obj = partial_trace(DensityMatrix.positive(post / p), "first")
    full = u_b.entries @ tensor(obj, KET0.density()).entries @ u_b.dagger
    reader = partial_trace(DensityMatrix.positive(full), "second")
    pb = born_probability(reader, Projector.along(cfg.axis_b, 1))
    o_b = 1 if (r[1] < pb and pb > 0) else -1
    return o_a, o_b


# -- exact engine -------------------------------------------------------------


def _branch_tables(phi: float, bits: DatabaseBits, cfg: ProtocolConfig, u_a, u_b) -> np.ndarray:
    """Flattened contributions of one encoding direction (beta averaged).

    Layout: joint_a (4), joint_b (4), outcome_a (4), outcome_b (4).
    """
    acc = np.zeros((4, 2, 2))
    for beta in (0, 1):
        dist = outcome_distribution(bob_state_for(phi, beta), u_a, u_b, cfg.axis_a, cfg.axis_b)
        for ia, oa in ((0, 1), (1, -1)):
            for ib, ob in ((0, 1), (1, -1)):
                w = 0.5 * dist[ia, ib]
                acc[0, bits.x_a, guess(oa, beta)] += w
                acc[1, bits.x_b, guess(ob, beta)] += w
                # Bob's qubit direction is phi or its antipode
                acc[2, bits.x_a ^ beta, ia] += w
                acc[3, bits.x_b ^ beta, ib] += w
    return acc.reshape(-1)


def channel_success(phi, cfg: ProtocolConfig) -> tuple[float, float]:
    """Engine success probabilities (beta averaged) for one direction phi."""
    u_a, u_b = cfg.unitaries()
    phi = as_direction(phi)
    t = _branch_tables(phi.angle, database_bits(phi, cfg.partition), cfg, u_a, u_b).reshape(4, 2, 2)
    return float(np.trace(t[0])), float(np.trace(t[1]))


def adaptive_simpson(f, a: float, b: float, rtol: float = QUAD_RTOL, max_depth: int = 40):
    """Vector-valued adaptive Simpson quadrature of ``f`` over [a, b]."""
    fa, fb = np.asarray(f(a)), np.asarray(f(b))
    m = 0.5 * (a + b)
    fm = np.asarray(f(m))
    whole = (b - a) / 6.0 * (fa + 4 * fm + fb)
    scale = max(float(np.max(np.abs(whole))), 1e-300)

    def recurse(a, fa, m, fm, b, fb, whole, depth):
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = np.asarray(f(lm)), np.asarray(f(rm))
        left = (m - a) / 6.0 * (fa + 4 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4 * frm + fb)
        err = float(np.max(np.abs(left + right - whole)))
        if err <= 15.0 * rtol * scale * (b - a) / span:
            return left + right + (left + right - whole) / 15.0
        if depth >= max_depth:
            raise QuadratureError(f"adaptive Simpson did not converge on [{a}, {b}]")
        return recurse(a, fa, lm, flm, m, fm, left, depth + 1) + recurse(
            m, fm, rm, frm, b, fb, right, depth + 1
        )

    span = b - a
    return recurse(a, fa, m, fm, b, fb, whole, 0)


def _stats_from_flat(flat: np.ndarray, cfg: ProtocolConfig, bias) -> ChannelStats:
    t = flat.reshape(4, 2, 2)
    return ChannelStats(
        joint_a=JointDistribution(t[0]),
        joint_b=JointDistribution(t[1]),
        classical_bits_used=int(cfg.trials),
        trials=int(cfg.trials),
        exact=True,
        bias=bias,
        outcome_a=JointDistribution(t[2]),
        outcome_b=JointDistribution(t[3]),
    )


def exact_statistics(cfg: ProtocolConfig, rtol: float = QUAD_RTOL) -> ChannelStats:
    """Joint tables from Born probabilities; no sampling.

    Fixed mode uses one representative direction per quadrant. Uniform mode
    averages each quadrant's contribution over its arc by adaptive Simpson.
    ``bias`` carries the prior-weighted closed-form bias of each channel.
    """
    u_a, u_b = cfg.unitaries()
    part = cfg.partition
    flat = np.zeros(16)
    xi_a = xi_b = 0.0
    s, c = math.sin(cfg.eta), math.cos(cfg.eta)
    if cfg.phi_mode == "fixed":
        reps = cfg.representatives()
        for bits in ALL_BITS:
            w = cfg.bits_prior[bits.index]
            if w == 0.0:
                continue
            phi = reps[bits]
            flat += w * _branch_tables(phi.angle, bits, cfg, u_a, u_b)
            xi_a += w * abs(phi.dot(cfg.axis_a)) * s
            xi_b += w * abs(phi.dot(cfg.axis_b)) * c
    else:
        arcs = part.arcs()
        for bits in ALL_BITS:
            w = cfg.bits_prior[bits.index]
            if w == 0.0:
                continue
            arc = arcs[bits]
            f = lambda t, arc=arc, bits=bits: _branch_tables(  # noqa: E731
                arc.start + t * arc.length, bits, cfg, u_a, u_b
            )
            flat += w * adaptive_simpson(f, 0.0, 1.0, rtol)
            xi_a += w * s * _mean_abs_cos(arc, cfg.axis_a.angle)
            xi_b += w * c * _mean_abs_cos(arc, cfg.axis_b.angle)
    return _stats_from_flat(flat, cfg, (xi_a, xi_b))


def _mean_abs_cos(arc, axis: float) -> float:
    # cos(phi - axis) keeps one sign on a quadrant arc
    lo = arc.start - axis
    return abs(math.sin(lo + arc.length) - math.sin(lo)) / arc.length


# -- Monte Carlo engine -------------------------------------------------------


def shard_streams(seed: int, shard: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent (alice, bob) generators for one shard."""
    mk = lambda role: np.random.default_rng(  # noqa: E731
        np.random.SeedSequence(int(seed), spawn_key=(int(shard), role))
    )
    return mk(0), mk(1)


ALICE_DRAWS = 3  # bits, phi, beta
BOB_DRAWS = 2  # r_a, r_b


class AliceTrial(NamedTuple):
    bits: DatabaseBits
    phi: float
    beta: int


def alice_trial(cfg: ProtocolConfig, u, reps=None, arcs=None) -> AliceTrial:
    """Turn Alice's three uniforms into (bits, phi, beta)."""
    cum = np.cumsum(cfg.bits_prior)
    idx = min(int(np.searchsorted(cum, u[0], side="right")), 3)
    while cfg.bits_prior[idx] == 0.0:
        idx -= 1
    bits = DatabaseBits.from_index(idx)
    if cfg.phi_mode == "fixed":
        phi = (reps or cfg.representatives())[bits].angle
    else:
        phi = point_on_arc((arcs or cfg.partition.arcs())[bits], u[1]).angle
    # singlet: each of Alice's two outcomes has probability 1/2
    beta = 1 if u[2] < 0.5 else 0
    return AliceTrial(bits, phi, beta)


def bob_amplitudes(phi: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Bob's qubit amplitudes: |phi> for beta = 0, |phi_perp> for beta = 1."""
    sign = np.where(np.asarray(beta) == 1, -1.0, 1.0)
    amps = np.empty((len(phi), 2), dtype=complex)
    amps[:, 0] = 1.0 / math.sqrt(2.0)
    amps[:, 1] = sign * np.exp(1j * np.asarray(phi)) / math.sqrt(2.0)
    return amps


@dataclass
class TrialArrays:
    bits: np.ndarray  # (n, 2) int8
    phi: np.ndarray
    beta: np.ndarray
    o_a: np.ndarray
    o_b: np.ndarray

    @property
    def g_a(self) -> np.ndarray:
        return ((1 - self.o_a) // 2 + self.beta) % 2

    @property
    def g_b(self) -> np.ndarray:
        return ((1 - self.o_b) // 2 + self.beta) % 2

    def __len__(self):
        return len(self.phi)

    def records(self) -> list[TrialRecord]:
        ga, gb = self.g_a.tolist(), self.g_b.tolist()
        bits = self.bits.tolist()
        return [
            TrialRecord(DatabaseBits(*bits[i]), p, b, oa, ob, ga[i], gb[i])
            for i, (p, b, oa, ob) in enumerate(
                zip(self.phi.tolist(), self.beta.tolist(), self.o_a.tolist(), self.o_b.tolist())
            )
        ]

    @classmethod
    def concat(cls, parts: list["TrialArrays"]) -> "TrialArrays":
        return cls(*(np.concatenate([getattr(p, f) for p in parts]) for f in
                     ("bits", "phi", "beta", "o_a", "o_b")))


def shard_sizes(trials: int, shards: int) -> list[int]:
    base, extra = divmod(trials, shards)
    return [base + (1 if s < extra else 0) for s in range(shards)]


def alice_block(cfg: ProtocolConfig, u: np.ndarray):
    """Vectorized ``alice_trial`` over an (n, 3) block of uniforms."""
    n = len(u)
    cum = np.cumsum(cfg.bits_prior)
    idx = np.minimum(np.searchsorted(cum, u[:, 0], side="right"), 3)
    for _ in range(3):
        zero = np.array(cfg.bits_prior)[idx] == 0.0
        idx = np.where(zero, idx - 1, idx)
    bits = np.stack([idx >> 1, idx & 1], axis=1).astype(np.int8)
    if cfg.phi_mode == "fixed":
        reps = cfg.representatives()
        table = np.array([reps[b].angle for b in ALL_BITS])
        phi = table[idx]
    else:
        arcs = cfg.partition.arcs()
        phi = np.array([point_on_arc(arcs[ALL_BITS[k]], t).angle for k, t in zip(idx.tolist(), u[:, 1].tolist())]) if n else np.zeros(0)
    beta = (u[:, 2] < 0.5).astype(np.int8)
    return bits, phi, beta


def _run_shard(cfg: ProtocolConfig, shard: int, n: int, u_a, u_b) -> TrialArrays:
    alice_rng, bob_rng = shard_streams(cfg.seed, shard)
    ua = alice_rng.random((n, ALICE_DRAWS))
    ub = bob_rng.random((n, BOB_DRAWS))
    bits, phi, beta = alice_block(cfg, ua)
    o_a, o_b = kernels.sample_outcomes(
        u_a.entries, u_b.entries, bob_amplitudes(phi, beta),
        cfg.axis_a.angle, cfg.axis_b.angle, ub[:, 0], ub[:, 1],
    )
    return TrialArrays(bits, phi, beta, o_a, o_b)


def simulate(cfg: ProtocolConfig, parallel: int = 1) -> TrialArrays:
    if cfg.trials <= 0:
        raise ContractError("run needs at least one trial")
    u_a, u_b = cfg.unitaries()
    sizes = shard_sizes(int(cfg.trials), int(cfg.shards))
    jobs = [(s, n) for s, n in enumerate(sizes)]
    if parallel > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(parallel) as pool:
            parts = list(pool.map(lambda j: _run_shard(cfg, j[0], j[1], u_a, u_b), jobs))
    else:
        parts = [_run_shard(cfg, s, n, u_a, u_b) for s, n in jobs]
    return TrialArrays.concat(parts)


def empirical_stats(arr: TrialArrays) -> ChannelStats:
    n = len(arr)
    if n == 0:
        raise ContractError("no trials to summarize")
    ca = np.zeros((2, 2), dtype=np.int64)
    cb = np.zeros((2, 2), dtype=np.int64)
    np.add.at(ca, (arr.bits[:, 0], arr.g_a), 1)
    np.add.at(cb, (arr.bits[:, 1], arr.g_b), 1)
    oa = np.zeros((2, 2), dtype=np.int64)
    ob = np.zeros((2, 2), dtype=np.int64)
    np.add.at(oa, (arr.bits[:, 0] ^ arr.beta, (1 - arr.o_a) // 2), 1)
    np.add.at(ob, (arr.bits[:, 1] ^ arr.beta, (1 - arr.o_b) // 2), 1)
    return ChannelStats(
        joint_a=JointDistribution(ca / n),
        joint_b=JointDistribution(cb / n),
        classical_bits_used=n,
        trials=n,
        outcome_a=JointDistribution(oa / n),
        outcome_b=JointDistribution(ob / n),
        counts_a=ca,
        counts_b=cb,
    )


def run_trials(cfg: ProtocolConfig, parallel: int = 1) -> tuple[list[TrialRecord], ChannelStats]:
    arr = simulate(cfg, parallel)
    return arr.records(), empirical_stats(arr)


CSV_COLUMNS = ("trial", "x_a", "x_b", "phi_rad", "beta", "o_a", "o_b", "g_a", "g_b")


def write_trials_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for i, r in enumerate(records):
            w.writerow([i, r.bits.x_a, r.bits.x_b, f"{r.phi:.9f}", r.beta,
                        r.outcome_a, r.outcome_b, r.guess_a, r.guess_b])


def with_trials(cfg: ProtocolConfig, trials: int) -> ProtocolConfig:
    return replace(cfg, trials=trials)
