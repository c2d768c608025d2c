import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from asbim.data import (
    binarize_defeat,
    impute_intervals,
    pad_or_truncate,
    person_mean,
    preprocess_dyad,
)
from asbim.errors import ConfigurationError, DegenerateInputError, IngestionError

from conftest import make_raw


def test_binarize_examples():
    assert binarize_defeat(0) == 0
    assert binarize_defeat(0.5) == 1
    assert binarize_defeat(3) == 1
    assert binarize_defeat(None) is None
    with pytest.raises(IngestionError):
        binarize_defeat(-0.1)


def test_person_mean_examples():
    assert person_mean([1, 1, 1]) == 1
    assert person_mean([0, None, 2]) == 1
    with pytest.raises(DegenerateInputError):
        person_mean([None, None])


@given(st.lists(st.one_of(st.none(), st.floats(0, 3)), min_size=1, max_size=30))
def test_person_mean_summation_oracle(seq):
    obs = [v for v in seq if v is not None]
    if not obs:
        return
    total = 0.0
    for v in obs:
        total += v
    assert math.isclose(person_mean(seq), total / len(obs), rel_tol=1e-12, abs_tol=1e-15)


@given(st.floats(0, 3), st.integers(1, 40))
def test_person_mean_constant_is_exact(c, n):
    assert person_mean([c] * n) == c


def test_pad_examples():
    seq = list(np.linspace(0, 1, 20))
    v, m = pad_or_truncate(seq, 20)
    np.testing.assert_array_equal(v, seq)
    assert m.all()
    v, m = pad_or_truncate([1.0, 2.0, 3.0], 20)
    assert m.sum() == 3 and not m[3:].any() and np.all(v[3:] == 0)
    v, m = pad_or_truncate(list(range(25)), 20)
    np.testing.assert_array_equal(v, range(20))
    assert m.all()
    with pytest.raises(ConfigurationError):
        pad_or_truncate([1.0], 0)


def test_impute_intervals_examples():
    d = impute_intervals(make_raw(maut=(1, None, 3), cdef=(1, None, 0)))
    assert d.maut == (1.0, 2.0, 3.0)
    assert d.cdef == (1.0, 0.0, 0.0)
    full = make_raw(maut=(1.0, 2.0), cdef=(0.0, 1.0))
    assert impute_intervals(full).maut == full.maut
    with pytest.raises(DegenerateInputError):
        impute_intervals(make_raw(maut=(None, None), cdef=(1, 0)))
    with pytest.raises(DegenerateInputError):
        impute_intervals(make_raw(maut=(1, 2), cdef=(None, None)))


def test_preprocess_invariants():
    d = preprocess_dyad(make_raw(maut=(1.0, None, 2.5, 0.5), cdef=(0, 2, None, 0.5)), max_len=6)
    assert d.n_observed == 4
    np.testing.assert_array_equal(d.mask, [1, 1, 1, 1, 0, 0])
    assert set(np.unique(d.child_seq)) <= {0.0, 1.0}
    assert d.mother_mean == person_mean([1.0, 2.5, 0.5])
    assert d.child_mean == person_mean([0, 1, 1])
    assert np.all(d.mother_seq[4:] == 0) and np.all(d.child_seq[4:] == 0)
    assert d.mother_seq[1] == d.mother_mean
    assert not d.mother_seq.flags.writeable


@given(st.lists(st.floats(0, 3), min_size=1, max_size=40), st.integers(1, 25))
def test_means_computed_before_padding(seq, max_len):
    d = preprocess_dyad(make_raw(maut=seq, cdef=[0.0] * len(seq)), max_len)
    assert d.mother_mean == person_mean(seq[:max_len])
    assert person_mean(d.mother_seq[d.mask]) == pytest.approx(d.mother_mean, rel=1e-12, abs=1e-15)
    assert d.n_observed == min(len(seq), max_len)


@given(st.floats(0, 3), st.integers(1, 30))
def test_constant_sequence_centres_to_zero(c, n):
    d = preprocess_dyad(make_raw(maut=[c] * n, cdef=[1.0] * n))
    assert np.all(d.mother_dev == 0.0) and np.all(d.child_dev == 0.0)
