import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from asbim import kernels
from asbim.diagnostics import GRADCHECK_TOL, random_instance, run_gradcheck
from asbim.errors import ConfigurationError
from asbim.model import loss, predict, tape_loss_and_grad

from conftest import make_params, random_dataset


def test_python_backend_always_available():
    assert "python" in kernels.available_backends()
    assert kernels.BACKEND in kernels.available_backends()


def test_unknown_backend():
    ds = random_dataset(0, n_dyads=2)
    params = make_params(dataset=ds)
    with pytest.raises(ConfigurationError):
        kernels.batch_loss(kernels.make_batch(ds, params), params, backend="fortran")


def test_env_var_forces_fallback():
    code = "from asbim import kernels; print(kernels.BACKEND)"
    env = {**os.environ, "ASBIM_BACKEND": "python"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_batch_requires_common_length_and_outcomes():
    a = random_dataset(0, n_dyads=2, max_len=5)
    b = random_dataset(1, n_dyads=1, max_len=6)
    params = make_params(dataset=a)
    with pytest.raises(ConfigurationError):
        kernels.make_batch(a + b, params)
    missing = [type(a[0])(**{**a[0].__dict__, "ext_t2": None})]
    with pytest.raises(ConfigurationError):
        kernels.make_batch(missing, params)
    batch = kernels.make_batch(missing, params, require_y=False)
    assert batch.y is None
    with pytest.raises(ConfigurationError):
        kernels.loss_and_grad(batch, params)


@given(st.integers(0, 10_000), st.sampled_from(["base", "plus_d"]))
def test_backends_agree_with_literal_path(seed, variant):
    ds = random_dataset(seed, n_dyads=3, max_len=7)
    params = make_params(variant, q=5, h=4, seed=seed, dataset=ds, bias_scale=1.0)
    batch = kernels.make_batch(ds, params)
    literal = np.array([predict(d, params) for d in ds])
    _, g_tape = tape_loss_and_grad(ds, params, 1e-3)
    for backend in kernels.available_backends():
        y_hat, alpha = kernels.forward(batch, params, backend=backend)
        np.testing.assert_allclose(y_hat, literal, rtol=1e-12, atol=1e-13)
        l, g = kernels.loss_and_grad(batch, params, 1e-3, backend=backend)
        assert l == pytest.approx(loss(ds, params, l2_coef=1e-3), rel=1e-12)
        for k in g:
            np.testing.assert_allclose(g[k], g_tape[k], rtol=1e-9, atol=1e-12, err_msg=k)


def test_gradcheck_instance_shape():
    ds, params = random_instance(0)
    assert len(ds) == 2 and {d.gender for d in ds} == {0, 1}
    assert ds[0].n_observed != ds[1].n_observed
    assert float(params["b3"]) != 0.0 and float(params["gamma_logit"]) != 0.0


@pytest.mark.parametrize("backend", kernels.available_backends())
@pytest.mark.parametrize("variant", ["base", "plus_d"])
def test_gradcheck_passes(backend, variant):
    for seed in range(3):
        res = run_gradcheck(seed, q=8, h=8, variant=variant, backend=backend)
        assert res.max_relative_error < GRADCHECK_TOL, (seed, res.worst)
        assert all(v < GRADCHECK_TOL for v in res.by_group.values())


def test_gradcheck_corruption_is_caught():
    res = run_gradcheck(0, corrupt=True)
    assert res.max_relative_error >= GRADCHECK_TOL
    assert res.worst[0] == "W1"
