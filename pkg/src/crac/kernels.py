"""Backend selection for the Monte Carlo trial kernel.

The compiled extension is used when it was built; otherwise the pure-Python
module is used. Set ``CRAC_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

if os.environ.get("CRAC_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

sample_outcomes = _impl.sample_outcomes
python_sample_outcomes = _kernels_py.sample_outcomes
