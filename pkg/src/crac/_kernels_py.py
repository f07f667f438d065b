"""Pure-Python trial kernel; the reference for the compiled ``_kernels`` module.

Both implementations take pre-drawn uniforms, so for the same inputs they
return the same outcomes.
"""

import cmath
import math

import numpy as np

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


def _measure_probe(psi, phase_conj, r):
    """Sharp measurement of the probe (second qubit) of a 4-amplitude state.

    Returns (outcome, collapsed object amplitudes normalized).
    """
    # <e_+-| on the probe, e_+- = (|0> +- e^{i theta}|1>)/sqrt(2)
    p0 = (psi[0] + phase_conj * psi[1]) * _INV_SQRT2
    p1 = (psi[2] + phase_conj * psi[3]) * _INV_SQRT2
    m0 = (psi[0] - phase_conj * psi[1]) * _INV_SQRT2
    m1 = (psi[2] - phase_conj * psi[3]) * _INV_SQRT2
    p_plus = (p0 * p0.conjugate()).real + (p1 * p1.conjugate()).real
    p_minus = (m0 * m0.conjugate()).real + (m1 * m1.conjugate()).real
    if r < p_plus and p_plus > 0.0 or p_minus <= 0.0:
        n = math.sqrt(p_plus)
        return 1, p0 / n, p1 / n
    n = math.sqrt(p_minus)
    return -1, m0 / n, m1 / n


def _evolve(u, c0, c1):
    # probe enters in |0>: only columns |00> and |10> contribute
    return [u[k][0] * c0 + u[k][2] * c1 for k in range(4)]


def sample_outcomes(u_a, u_b, bob, theta_a, theta_b, r_a, r_b):
    """Sequential A/B readouts for a batch of Bob qubits.

    ``bob`` is an (n, 2) complex array of single-qubit amplitudes; ``r_a``
    and ``r_b`` are uniforms in [0, 1) deciding each sharp measurement.
    Returns two int8 arrays of +-1 outcomes.
    """
    ua = np.asarray(u_a, dtype=complex).tolist()
    ub = np.asarray(u_b, dtype=complex).tolist()
    bob = np.asarray(bob, dtype=complex).tolist()
    r_a = np.asarray(r_a, dtype=float).tolist()
    r_b = np.asarray(r_b, dtype=float).tolist()
    ph_a = cmath.exp(-1j * theta_a)
    ph_b = cmath.exp(-1j * theta_b)
    n = len(bob)
    o_a = np.empty(n, dtype=np.int8)
    o_b = np.empty(n, dtype=np.int8)
    for i in range(n):
        c0, c1 = bob[i]
        oa, w0, w1 = _measure_probe(_evolve(ua, c0, c1), ph_a, r_a[i])
        ob, _, _ = _measure_probe(_evolve(ub, w0, w1), ph_b, r_b[i])
        o_a[i] = oa
        o_b[i] = ob
    return o_a, o_b
