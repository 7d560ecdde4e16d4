"""Evaluation kernels: the accelerated and plain paths must agree."""

import math
import os
import subprocess
import sys

import numpy as np
import pytest

from hamalg import LatticeConfig, default_binding, discretize, parse_symbol
from hamalg._kernels import active_path, stencil_weights
from hamalg.lattice import random_profile


def P(text):
    return parse_symbol(text)


def test_stencil_rows_differentiate_polynomials():
    """The k-fold iterated central difference is exact: D^k x^k = k!."""
    delta = 0.25
    kmax = 4
    w = stencil_weights(kmax, delta)
    assert w.shape == (kmax + 1, 2 * kmax + 1)
    offsets = delta * np.arange(-kmax, kmax + 1)
    for k in range(1, kmax + 1):
        got = float(np.dot(w[k], offsets ** k))
        assert abs(got - math.factorial(k)) < 1e-9 * math.factorial(k)
    # support of row k stays within |j| <= k
    assert np.all(w[1, : kmax - 1] == 0.0)
    assert np.all(w[1, kmax + 2:] == 0.0)


def test_stencil_zeroth_row_is_identity():
    w = stencil_weights(2, 0.5)
    assert w[0, 2] == 1.0
    assert np.count_nonzero(w[0]) == 1


HAS_NUMBA = active_path() == "numba"


@pytest.mark.skipif(not HAS_NUMBA, reason="accelerated path disabled")
def test_paths_agree_on_values_and_gradients():
    cfg = LatticeConfig(n=128, length=8.0)
    bind = default_binding()
    rng = np.random.default_rng(17)
    exprs = [
        "int[x]( phi(x)^2 )",
        "int[x]( f(x)*phi(x)*D(phi,1)(x)*pi(x) )",
        "int[x]( (m^2/2)*phi(x)^2 + (1/2)*D(phi,2)(x)*g(x) )",
        "int[x]( phi(x)^3*pi(x)^2 )",
    ]
    for text in exprs:
        fn = discretize(P(text), cfg, bind)
        for _ in range(3):
            st = random_profile(rng).realize(cfg)
            va = fn(st, path="numba")
            vb = fn(st, path="numpy")
            assert abs(va - vb) <= 1e-12 * max(1.0, abs(vb))
            ga = fn.gradient(st, path="numba")
            gb = fn.gradient(st, path="numpy")
            # the probe division amplifies last-bit value differences
            # to roughly value-roundoff / eps; 1e-9 sits well above that
            # and far below any real kernel discrepancy
            for xa, xb in zip(ga, gb):
                assert np.abs(xa - xb).max() <= 1e-9 * max(1.0, np.abs(xb).max())


def test_env_flag_selects_the_plain_path():
    code = ("from hamalg._kernels import active_path; "
            "print(active_path())")
    env = dict(os.environ, HAMALG_NO_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


def test_plain_path_still_computes_under_the_flag():
    code = (
        "import numpy as np\n"
        "from hamalg import LatticeConfig, LatticeState, discretize, parse_symbol\n"
        "cfg = LatticeConfig(n=64, length=8.0)\n"
        "x = cfg.x()\n"
        "st = LatticeState(np.exp(-x*x), np.zeros_like(x))\n"
        "fn = discretize(parse_symbol('int[x]( phi(x)^2 )'), cfg)\n"
        "print(abs(fn(st) - np.sqrt(np.pi/2)) < 1e-10)\n")
    env = dict(os.environ, HAMALG_NO_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "True"
