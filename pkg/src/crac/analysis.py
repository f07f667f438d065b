"""Bias parameters, engine cross-checks, case studies, sweeps and the gain optimizer."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .geometry import DatabaseBits, EquatorDirection, QuadrantPartition, as_direction
from .infotheory import BiasParameters, bsc_information, information_gain
from .machines import ClonerAngle, as_cloner_angle
from .protocol import ProtocolConfig, channel_success, exact_statistics
from .qcore import ContractError

HALF_PI = math.pi / 2
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

AXIS_PAIRS = (
    (0.0, HALF_PI),
    (0.3, 0.3 + math.pi / 3),
    (1.0, 1.0 + 2 * math.pi / 3),
    (2.5, 2.5 + 0.4),
)


def bias_parameters(axes: QuadrantPartition, phi, eta) -> BiasParameters:
    phi = as_direction(phi)
    eta = as_cloner_angle(eta).eta
    return BiasParameters(
        abs(phi.dot(axes.axis_a)) * math.sin(eta),
        abs(phi.dot(axes.axis_b)) * math.cos(eta),
    )


def engine_bias(axes: QuadrantPartition, phi, eta) -> BiasParameters:
    """Bias read off the exact engine as 2 p_success - 1 for direction ``phi``."""
    cfg = ProtocolConfig(axes.axis_a, axes.axis_b, eta, "fixed", as_direction(phi).angle)
    pa, pb = channel_success(phi, cfg)
    return BiasParameters(2 * pa - 1, 2 * pb - 1)


@dataclass(frozen=True)
class SweepGrid:
    eta_values: tuple
    delta_values: tuple
    axes: QuadrantPartition

    def __post_init__(self):
        for name in ("eta_values", "delta_values"):
            v = tuple(float(x) for x in getattr(self, name))
            if not v or any(b <= a for a, b in zip(v, v[1:])):
                raise ContractError(f"{name} must be nonempty and strictly increasing")
            object.__setattr__(self, name, v)
        for e in self.eta_values:
            ClonerAngle(e)

    @classmethod
    def uniform(cls, n_eta: int, n_delta: int, axes: QuadrantPartition | None = None,
                delta_max: float = HALF_PI) -> "SweepGrid":
        return cls(
            tuple(np.linspace(0.0, HALF_PI, n_eta)),
            tuple(np.linspace(0.0, delta_max, n_delta)),
            axes or QuadrantPartition.orthogonal(),
        )


class Eq10Report(NamedTuple):
    max_deviation: float
    max_deviation_swapped: float
    matched: str
    points: int
    passed: bool


def verify_bias_formula(
    eta_values, phi_values, axis_pairs=AXIS_PAIRS, tol: float = 1e-10
) -> Eq10Report:
    """Compare the closed-form bias with the exact engine on a grid.

    Also scores the opposite labeling (cos on the first measurement, sin on
    the second), so the report says which one the engine reproduces.
    """
    dev = dev_swapped = 0.0
    n = 0
    for a, b in axis_pairs:
        axes = QuadrantPartition(EquatorDirection(a), EquatorDirection(b))
        for eta in eta_values:
            for phi in phi_values:
                eng = engine_bias(axes, phi, eta)
                cf = bias_parameters(axes, phi, eta)
                ca = abs(math.cos(phi - a))
                cb = abs(math.cos(phi - b))
                swapped = (ca * math.cos(eta), cb * math.sin(eta))
                dev = max(dev, abs(eng.xi_a - cf.xi_a), abs(eng.xi_b - cf.xi_b))
                dev_swapped = max(
                    dev_swapped, abs(eng.xi_a - swapped[0]), abs(eng.xi_b - swapped[1])
                )
                n += 1
    if dev < dev_swapped:
        matched = "xi_a = |a.phi| sin(eta), xi_b = |b.phi| cos(eta)"
    else:
        matched = "xi_a = |a.phi| cos(eta), xi_b = |b.phi| sin(eta)"
    return Eq10Report(dev, dev_swapped, matched, n, min(dev, dev_swapped) < tol and dev < tol)


def verify_eq10(grid: SweepGrid, tol: float = 1e-10) -> Eq10Report:
    a = grid.axes.axis_a.angle
    return verify_bias_formula(
        grid.eta_values,
        [a + d for d in grid.delta_values],
        [(a, grid.axes.axis_b.angle)],
        tol,
    )


class SweepRow(NamedTuple):
    eta: float
    delta: float
    xi_a: float
    xi_b: float
    xi_sq_sum: float
    i_a: float
    i_b: float
    i_total: float


def sweep_row(axes: QuadrantPartition, eta: float, delta: float) -> SweepRow:
    phi = axes.axis_a.rotated(delta)
    xi = bias_parameters(axes, phi, eta)
    eng = engine_bias(axes, phi, eta)
    i_a = bsc_information(min(max(eng.xi_a, 0.0), 1.0))
    i_b = bsc_information(min(max(eng.xi_b, 0.0), 1.0))
    return SweepRow(eta, delta, xi.xi_a, xi.xi_b, xi.sq_sum, i_a, i_b, i_a + i_b)


def sweep(grid: SweepGrid, parallel: int = 1) -> list[SweepRow]:
    cells = [(e, d) for e in grid.eta_values for d in grid.delta_values]
    if parallel > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(parallel) as pool:
            return list(pool.map(lambda c: sweep_row(grid.axes, *c), cells))
    return [sweep_row(grid.axes, e, d) for e, d in cells]


SWEEP_COLUMNS = SweepRow._fields


def write_sweep_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow([f"{v:.9f}" for v in r])


# -- optimizer ----------------------------------------------------------------


def golden_max(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-10):
    """Golden-section search for the maximum of a unimodal ``f`` on [lo, hi]."""
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


OBJECTIVES = ("xi_sq_sum", "mutual_info_total")


class OptimumResult(NamedTuple):
    eta: float
    delta: float
    value: float
    xi_a: float
    xi_b: float
    i_total: float


def _channel_scores(objective: str):
    if objective == "xi_sq_sum":
        return lambda xi: xi * xi
    if objective == "mutual_info_total":
        return lambda xi: bsc_information(min(xi, 1.0))
    raise ContractError(f"objective must be one of {OBJECTIVES}, got {objective!r}")


def balanced_arc(axes: QuadrantPartition) -> tuple[float, float]:
    """Range of delta (offset of phi from axis A) spanning the quadrant
    where both dot products are positive."""
    arc = axes.arcs()[DatabaseBits(0, 0)]
    lo = (arc.start - axes.axis_a.angle + math.pi) % (2 * math.pi) - math.pi
    return lo, lo + arc.length


def optimize_gain(
    axes: QuadrantPartition,
    objective: str = "xi_sq_sum",
    grid_points: int = 181,
    tol: float = 1e-10,
) -> OptimumResult:
    """Best operating point when both observables must be learned equally.

    Maximizes the smaller of the two channel scores over (eta, delta) with
    delta restricted to the quadrant where both dot products are positive,
    then reports the summed objective there. A coarse grid locates the basin
    and nested golden-section searches refine eta (inner) and delta (outer).
    """
    score = _channel_scores(objective)
    a, b = axes.axis_a.angle, axes.axis_b.angle
    d_lo, d_hi = balanced_arc(axes)

    def channels(eta, delta):
        ca = abs(math.cos(delta))
        cb = abs(math.cos(a + delta - b))
        return ca * math.sin(eta), cb * math.cos(eta)

    def balanced(eta, delta):
        xa, xb = channels(eta, delta)
        return min(score(xa), score(xb))

    etas = np.linspace(0.0, HALF_PI, grid_points)
    deltas = np.linspace(d_lo, d_hi, grid_points)
    best = max(
        ((balanced(e, d), i, j) for i, e in enumerate(etas) for j, d in enumerate(deltas)),
    )
    _, _, j = best
    step = deltas[1] - deltas[0]
    lo, hi = max(d_lo, deltas[j] - step), min(d_hi, deltas[j] + step)

    def profile(delta):
        return golden_max(lambda e: balanced(e, delta), 0.0, HALF_PI, tol)

    delta, _ = golden_max(lambda d: profile(d)[1], lo, hi, tol)
    eta, _ = profile(delta)
    xa, xb = channels(eta, delta)
    i_total = bsc_information(min(xa, 1.0)) + bsc_information(min(xb, 1.0))
    value = score(xa) + score(xb)
    return OptimumResult(eta, delta, value, xa, xb, i_total)


def no_cloning_witness(axes: QuadrantPartition, n: int = 181):
    """(max of min(xi_a, xi_b), count of cells with both biases at 1) on a grid."""
    best, hits = 0.0, 0
    for eta in np.linspace(0.0, HALF_PI, n):
        for delta in np.linspace(0.0, 2 * math.pi, 4 * (n - 1) + 1):
            xi = bias_parameters(axes, axes.axis_a.angle + delta, eta)
            best = max(best, min(xi.xi_a, xi.xi_b))
            if xi.xi_a >= 1.0 - 1e-12 and xi.xi_b >= 1.0 - 1e-12:
                hits += 1
    return best, hits


# -- case studies -------------------------------------------------------------


def case_study(which: str) -> dict:
    which = which.upper()
    axes = QuadrantPartition.orthogonal()
    if which == "A":
        cfg = ProtocolConfig(axes.axis_a, axes.axis_b, HALF_PI, "fixed", axes.axis_a.angle)
        stats = exact_statistics(cfg)
        gain = information_gain(stats)
        xi = bias_parameters(axes, cfg.phi, HALF_PI)
        return {
            "case": "A",
            "eta": HALF_PI,
            "phi": cfg.phi,
            "xi_a": xi.xi_a,
            "xi_b": xi.xi_b,
            "i_a": gain.i_a,
            "i_b": gain.i_b,
            "total": gain.total,
            "xi_a_one_forces_xi_b_zero": xi.xi_a == 1.0 and abs(xi.xi_b) < 1e-15,
        }
    if which == "B":
        eta = math.pi / 4
        # orthogonal axes: no direction has both dot products at 1
        deltas = np.linspace(0.0, 2 * math.pi, 1441)
        best_both = max(min(abs(math.cos(d)), abs(math.sin(d))) for d in deltas)
        near = QuadrantPartition(EquatorDirection(0.0), EquatorDirection(1e-6))
        xi_near = bias_parameters(near, 0.5e-6, eta)
        return {
            "case": "B",
            "eta": eta,
            "orthogonal_max_min_dot": best_both,
            "orthogonal_one_bit_feasible": best_both >= 1.0 - 1e-12,
            "near_parallel_xi_sq_sum": xi_near.sq_sum,
            "near_parallel_i_total": bsc_information(xi_near.xi_a) + bsc_information(xi_near.xi_b),
        }
    if which == "C":
        opt = optimize_gain(axes, "xi_sq_sum")
        opt_mi = optimize_gain(axes, "mutual_info_total")
        return {
            "case": "C",
            "eta": opt.eta,
            "delta": opt.delta,
            "xi_sq_sum": opt.value,
            "i_total": opt_mi.value,
            "bound": 0.5,
        }
    raise ContractError(f"unknown case {which!r}")
