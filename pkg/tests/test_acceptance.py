"""Acceptance gate: nine end-to-end criteria at their stated tolerances.

Run with ``pytest tests/test_acceptance.py`` (a pass/fail line per criterion
is printed in the terminal summary) or directly as
``python3 tests/test_acceptance.py``.
"""

import io
import json
import math
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from crac.analysis import AXIS_PAIRS, case_study, no_cloning_witness, optimize_gain, verify_bias_formula
from crac.cli import random_ic_check
from crac.geometry import QuadrantPartition
from crac.infotheory import es_margins, mutual_information
from crac.machines import identity_op, swap_op
from crac.netsim import loopback
from crac.ozawa import disturbance_eta, meter_expectations, noise_epsilon
from crac.protocol import ProtocolConfig, exact_statistics, run_trials
from crac.qcore import PureState

from conftest import random_qubit

RESULTS: list[tuple[str, bool, str]] = []
CRITERIA = {}


def criterion(key, title):
    def wrap(fn):
        CRITERIA[key] = (title, fn)
        return fn
    return wrap


def timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def optimum_config(trials):
    return ProtocolConfig(0.0, math.pi / 2, math.pi / 4, "fixed", math.pi / 4, trials=trials, seed=2026)


@criterion("AC1", "closed-form bias matches engine (20x20x4 grid)")
def ac1():
    etas = np.linspace(0, math.pi / 2, 20)
    phis = np.linspace(0, 2 * math.pi, 20, endpoint=False)
    rep, dt = timed(lambda: verify_bias_formula(etas, phis, AXIS_PAIRS, 1e-10))
    ok = rep.points == 1600 and rep.max_deviation < 1e-10 and dt < 5.0
    return ok, f"max dev {rep.max_deviation:.2e} ({rep.matched}); other labeling {rep.max_deviation_swapped:.2f}; {dt:.2f}s"


@criterion("AC2", "balanced optimum on orthogonal axes")
def ac2():
    axes = QuadrantPartition.orthogonal()
    (xi, mi), dt = timed(lambda: (optimize_gain(axes, "xi_sq_sum"), optimize_gain(axes, "mutual_info_total")))
    ok = (abs(xi.value - 0.5) < 1e-9 and abs(xi.eta - math.pi / 4) < 1e-6
          and abs(xi.delta - math.pi / 4) < 1e-6 and abs(mi.value - 0.377443) < 1e-6 and mi.value <= 0.5 and dt < 10.0)
    return ok, f"eta {xi.eta:.9f} delta {xi.delta:.9f} sum {xi.value:.12f} I {mi.value:.9f}; {dt:.2f}s"


@criterion("AC3", "case A: full information on A, none on B")
def ac3():
    c = case_study("A")
    ok = abs(c["i_a"] - 1.0) < 1e-9 and abs(c["i_b"]) < 1e-9
    return ok, f"I_a {c['i_a']:.12f} I_b {c['i_b']:.2e}"


@criterion("AC4", "Evans-Schulman bound on a 1e-3 grid")
def ac4():
    (xi, m), dt = timed(lambda: es_margins(1e-3))
    zero = xi[m <= 0.0]
    ok = bool(np.all(m >= 0.0)) and set(zero.tolist()) <= {0.0, 1.0} and dt < 1.0
    return ok, f"{xi.size} points, min interior margin {m[1:-1].min():.2e}, equality at {sorted(zero.tolist())}; {dt:.3f}s"


@criterion("AC5", "information-causality bounds on 1000 random configs")
def ac5():
    (worst, failures), dt = timed(lambda: random_ic_check(1000, seed=1))
    ok = not failures and min(worst.values()) >= -1e-9 and dt < 30.0
    return ok, f"worst margins {{{', '.join(f'{k}: {v:.2e}' for k, v in worst.items())}}}; {dt:.1f}s"


@criterion("AC6", "Ozawa limits over 100 random states")
def ac6():
    rng = np.random.default_rng(6)
    worst_eps = worst_mean = worst_dist = 0.0
    for _ in range(100):
        psi = PureState(random_qubit(rng))
        axis_a, axis_b = rng.uniform(0, 2 * math.pi, 2)
        worst_eps = max(worst_eps, noise_epsilon(swap_op(), psi, axis_a))
        a_in, m_out = meter_expectations(swap_op(), psi, axis_a)
        worst_mean = max(worst_mean, abs(a_in - m_out))
        worst_dist = max(worst_dist, disturbance_eta(identity_op(), psi, axis_b))
    ok = worst_eps < 1e-12 and worst_mean < 1e-12 and worst_dist < 1e-12
    return ok, f"eps(swap) {worst_eps:.1e}, |<M>-<A>| {worst_mean:.1e}, eta(id) {worst_dist:.1e}"


@criterion("AC7", "Monte Carlo (1e5 trials) against exact within 4 SE")
def ac7():
    cfg = replace(optimum_config(100_000), shards=4)

    def go():
        return run_trials(cfg, parallel=4), run_trials(cfg, parallel=1)

    ((records, emp), (again, _)), dt = timed(go)
    ex = exact_statistics(cfg)
    n = cfg.trials
    worst = 0.0
    for e, x in ((emp.joint_a, ex.joint_a), (emp.joint_b, ex.joint_b)):
        se = np.sqrt(x.table * (1 - x.table) / n)
        worst = max(worst, float(np.max(np.abs(e.table - x.table) / se)))
    same = records == again
    ok = worst <= 4.0 and same and dt < 10.0
    return ok, f"worst deviation {worst:.2f} SE, repeat identical {same}; {dt:.2f}s"


@criterion("AC8", "no-cloning witness")
def ac8():
    best, hits = no_cloning_witness(QuadrantPartition.orthogonal())
    ok = abs(best - 0.5) < 1e-9 and hits == 0
    return ok, f"max min(xi) {best:.12f}, cells with both xi = 1: {hits}"


@criterion("AC9", "two-endpoint run over TCP (1e4 trials)")
def ac9():
    cfg = optimum_config(10_000)

    def go():
        log = io.StringIO()
        alice, bob = loopback(cfg, transcript=log)
        records, _ = run_trials(cfg)
        ab_alice, _ = loopback(cfg, ablate=True)
        return alice, bob, records, ab_alice, log.getvalue()

    (alice, bob, records, ab, log), dt = timed(go)
    msgs = [json.loads(l) for l in log.splitlines()]
    fabric = [m["payload"] for m in msgs if m["side"] == "alice" and m["dir"] == "tx" and m["kind"] == "QuantumCollapse"]
    guesses = [m["payload"] for m in msgs if m["side"] == "bob" and m["dir"] == "tx" and m["kind"] == "Guess"]
    wire = [(float(f["phi"]), f["branch"], g["o_a"], g["o_b"], g["g_a"], g["g_b"]) for f, g in zip(fabric, guesses)]
    local = [(r.phi, r.beta, r.outcome_a, r.outcome_b, r.guess_a, r.guess_b) for r in records]
    floor = 16 / (2 * cfg.trials * math.log(2))
    i_ab = max(mutual_information(ab.stats.joint_a), mutual_information(ab.stats.joint_b))
    ok = (wire == local and bob.audit.classical_bits_observed == 10_000
          and alice.unread_bytes == bob.unread_bytes == 0 and i_ab < floor and dt < 60.0)
    return ok, (f"transcript identical {wire == local}, classical bits {bob.audit.classical_bits_observed}, "
                f"ablated I {i_ab:.1e} < {floor:.1e}; {dt:.1f}s")


def run_one(key):
    title, fn = CRITERIA[key]
    ok, detail = fn()
    line = f"{key} {'PASS' if ok else 'FAIL'}: {title}: {detail}"
    RESULTS.append((key, ok, line))
    print(line)
    return ok, line


@pytest.mark.parametrize("key", list(CRITERIA))
def test_criterion(key):
    ok, line = run_one(key)
    assert ok, line


if __name__ == "__main__":
    outcomes = [run_one(k)[0] for k in CRITERIA]
    sys.exit(0 if all(outcomes) else 1)
