import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from asbim.data import RawDyadObservation, preprocess_dyad
from asbim.model.params import FeatureScaler, Variant, init_params

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def make_raw(dyad_id="D0", maut=(1.0, 2.0, 0.5), cdef=(0.0, 1.0, 2.0), gender=0,
             ext_t1=0.7, ext_t2=0.6, ic=4.5):
    return RawDyadObservation(dyad_id=dyad_id, gender=gender, maut=tuple(maut), cdef=tuple(cdef),
                              ext_t1=ext_t1, ext_t2=ext_t2, inhibitory_control=ic)


def make_dyad(max_len=20, **kw):
    return preprocess_dyad(make_raw(**kw), max_len)


def random_raw(rng, dyad_id, n, gender=None):
    return make_raw(
        dyad_id=dyad_id,
        maut=tuple(float(v) for v in rng.uniform(0, 3, n)),
        cdef=tuple(float(v) for v in rng.choice([0.0, 0.5, 1.0, 2.0], n)),
        gender=int(rng.integers(2)) if gender is None else gender,
        ext_t1=float(rng.uniform(0, 2)), ext_t2=float(rng.uniform(0, 2)),
        ic=float(rng.uniform(1, 7)),
    )


def random_dataset(seed=0, n_dyads=4, max_len=8, min_len=1, max_n=12):
    rng = np.random.default_rng(seed)
    return [preprocess_dyad(random_raw(rng, f"R{j}", int(rng.integers(min_len, max_n + 1))), max_len)
            for j in range(n_dyads)]


def make_params(variant="plus_d", q=4, h=3, seed=0, dataset=None, bias_scale=0.5):
    """Random parameters with nonzero biases; scaler fitted on ``dataset`` if given."""
    variant = Variant.parse(variant)
    rng = np.random.default_rng(seed)
    params = init_params(variant, q, h, rng)
    arrays = params.arrays
    for name in arrays:
        if name.endswith("_b") or name in ("b1", "b2", "b3", "gamma_logit"):
            arrays[name] = arrays[name] + bias_scale * rng.standard_normal(arrays[name].shape)
    params = params.replace_arrays(arrays)
    if dataset is not None:
        params.scaler = FeatureScaler.fit(dataset, variant.numeric_features)
    return params


@pytest.fixture
def toy_dataset():
    return random_dataset(seed=1, n_dyads=3)


ACCEPTANCE_LINES = pytest.StashKey[list]()


@pytest.fixture
def acceptance_log(request):
    """Record one status line per acceptance criterion; printed in the summary."""
    lines = request.config.stash.setdefault(ACCEPTANCE_LINES, [])

    def record(label, ok, detail=""):
        line = f"{label}: {ok if isinstance(ok, str) else ('PASS' if ok else 'FAIL')}"
        line += f" ({detail})" if detail else ""
        lines.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
