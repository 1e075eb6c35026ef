import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from _gen import random_record
from relsec import kernels
from relsec.regime import evaluate_rate_point

BACKENDS = [kernels.python_backend] + ([kernels.compiled_backend] if kernels.compiled_backend else [])


def test_compiled_backend_is_built():
    # the package ships the extension; a silent fallback would hide build problems
    assert kernels.compiled_backend is not None
    assert kernels.BACKEND == "cython"


def test_env_forces_fallback():
    code = "import relsec.kernels as k; print(k.BACKEND)"
    env = dict(os.environ, RELSEC_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.NAME)
@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_rate_grid_matches_scalar(backend, seed):
    rng = np.random.default_rng(seed)
    q = random_record(rng)
    pts = np.sort(rng.uniform(0, 3, (200, 2)), axis=1)
    # include exact breakpoints, where the strict comparisons matter
    crit = q.as_array()
    pts = np.vstack([pts, np.column_stack([crit, crit + q.wz_eve])])
    got = backend.rate_grid(q.as_array(), pts[:, 0], pts[:, 1], 1e-9)
    want = [evaluate_rate_point(q, a, b).r1 for a, b in pts]
    assert np.array_equal(got, np.array(want))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_typicality_backends_agree(seed):
    if kernels.compiled_backend is None:
        pytest.skip("extension not built")
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 17))
    na, ngf, nb, ntf = (int(v) for v in rng.integers(1, 4, 4))
    cond = rng.dirichlet(np.full(nb * ntf, 0.6), size=na * ngf)
    cond[cond < 0.05] = 0.0
    a = rng.integers(0, na, (int(rng.integers(1, 9)), n))
    b = rng.integers(0, nb, (int(rng.integers(1, 9)), n))
    gf = rng.integers(0, ngf, n)
    tf = rng.integers(0, ntf, n)
    args = (a, b, gf, tf, ngf, ntf, cond)
    assert np.array_equal(kernels.python_backend.cond_typicality(*args),
                          kernels.compiled_backend.cond_typicality(*args))


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.NAME)
def test_typicality_examples(backend):
    cond = np.array([[0.5, 0.5], [0.0, 1.0]])
    a = np.array([[0, 0, 0, 0], [1, 1, 1, 1]])
    b = np.array([[0, 1, 0, 1], [1, 1, 1, 1]])
    zeros = np.zeros(4, np.int64)
    dev = backend.cond_typicality(a, b, zeros, zeros, 1, 1, cond)
    assert dev[0, 0] == 0.0  # exact conditional type
    assert dev[0, 1] == 0.5
    assert dev[1, 0] == np.inf  # forbidden pair (1, 0)
    assert dev[1, 1] == 0.0
