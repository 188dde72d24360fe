import os
import subprocess
import sys

import numpy as np
import pytest

from gyrostab import _kernels_py, numerics
from gyrostab.gyrostat import GyrostatParams

try:
    from gyrostab import _kernels as _compiled
except ImportError:
    _compiled = None

BACKENDS = [pytest.param(_kernels_py, id="python")]
BACKENDS.append(
    pytest.param(_compiled, id="compiled", marks=pytest.mark.skipif(_compiled is None, reason="extension not built"))
)


def args(p, general=False):
    return numerics.GyrostatField(p, general).kernel_args()


@pytest.mark.parametrize("kern", BACKENDS)
def test_kernel_shapes_and_first_row(kern):
    p = GyrostatParams(3, 2, 1, (1, 0, 0))
    X = np.ascontiguousarray(np.random.default_rng(0).normal(size=(3, 6)))
    states, nvalid = kern.rk4_gyrostat(X, *args(p), 1e-2, 100, 10)
    assert states.shape == (3, 11, 6)
    np.testing.assert_array_equal(states[:, 0], X)
    assert list(nvalid) == [11, 11, 11]


@pytest.mark.parametrize("kern", BACKENDS)
def test_kernel_blowup_marks_rest_nan(kern):
    p = GyrostatParams(3, 2, 1, (1, 0, 0))
    X = np.array([[5.0, 5, 5, 1, 1, 1], [0.1, 0, 0, 1, 0, 0]])
    states, nvalid = kern.rk4_gyrostat(X, *args(p), 5.0, 50, 1)
    assert nvalid[0] < 51 and nvalid[1] == 51
    assert np.all(np.isnan(states[0, nvalid[0]:]))
    dev, blown = kern.rk4_max_deviation(X, *args(p), 5.0, 50, np.zeros(6))
    assert blown[0] and not blown[1]
    assert dev[0, 2] == 1e12


@pytest.mark.skipif(_compiled is None, reason="extension not built")
def test_backends_bit_identical():
    rng = np.random.default_rng(7)
    X = np.ascontiguousarray(rng.normal(size=(5, 6)) * 3)
    for p, general in [
        (GyrostatParams(3, 2, 1, (1, 0, 0)), False),
        (GyrostatParams(3, 2, 1, (0.3, -1, 2), m=2.0, r_G=(0.1, 0.2, 0.5)), True),
    ]:
        a = _kernels_py.rk4_gyrostat(X, *args(p, general), 1e-3, 2000, 7)
        b = _compiled.rk4_gyrostat(X, *args(p, general), 1e-3, 2000, 7)
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])
        xe = np.zeros(6)
        c = _kernels_py.rk4_max_deviation(X, *args(p, general), 1e-3, 2000, xe)
        d = _compiled.rk4_max_deviation(X, *args(p, general), 1e-3, 2000, xe)
        np.testing.assert_array_equal(c[0], d[0])


def test_env_var_forces_fallback():
    env = dict(os.environ, GYROSTAB_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from gyrostab import numerics; print(numerics.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"
