import math
import os
import subprocess
import sys

import numpy as np
import pytest

from crac import kernels
from crac._kernels_py import sample_outcomes as py_sample
from crac.protocol import ProtocolConfig, bob_amplitudes, bob_state_for, decode


def _inputs(n, seed=0):
    rng = np.random.default_rng(seed)
    phi = rng.uniform(0, 2 * math.pi, n)
    beta = rng.integers(0, 2, n)
    return bob_amplitudes(phi, beta), rng.random(n), rng.random(n), phi, beta


@pytest.mark.skipif(kernels.BACKEND != "cython", reason="extension not built")
def test_backends_agree():
    cfg = ProtocolConfig(0.3, 1.7, 0.9, "fixed", 0.2)
    u_a, u_b = cfg.unitaries()
    amps, ra, rb, _, _ = _inputs(5000)
    c = kernels.sample_outcomes(u_a.entries, u_b.entries, amps, 0.3, 1.7, ra, rb)
    p = py_sample(u_a.entries, u_b.entries, amps, 0.3, 1.7, ra, rb)
    np.testing.assert_array_equal(c[0], p[0])
    np.testing.assert_array_equal(c[1], p[1])


@pytest.mark.parametrize("impl", [kernels.sample_outcomes, py_sample])
def test_kernel_matches_dense_decode(impl):
    cfg = ProtocolConfig(0.3, 1.7, 0.9, "fixed", 0.2)
    u_a, u_b = cfg.unitaries()
    amps, ra, rb, phi, beta = _inputs(300, seed=1)
    o_a, o_b = impl(u_a.entries, u_b.entries, amps, 0.3, 1.7, ra, rb)
    for i in range(300):
        ref = decode(bob_state_for(phi[i], int(beta[i])), cfg, r=(ra[i], rb[i]))
        assert (int(o_a[i]), int(o_b[i])) == ref


def test_outcome_dtype_and_values():
    cfg = ProtocolConfig(0.0, 1.0, 0.5, "fixed", 0.2)
    u_a, u_b = cfg.unitaries()
    amps, ra, rb, _, _ = _inputs(100)
    o_a, o_b = kernels.sample_outcomes(u_a.entries, u_b.entries, amps, 0.0, 1.0, ra, rb)
    assert set(np.unique(o_a)) <= {-1, 1} and set(np.unique(o_b)) <= {-1, 1}
    assert len(o_a) == len(o_b) == 100


def test_pure_python_fallback_selected():
    env = dict(os.environ, CRAC_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from crac import kernels; print(kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"
