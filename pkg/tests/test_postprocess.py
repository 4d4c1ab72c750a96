import csv
import io
import json
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lejapce.exceptions import NumericalError
from lejapce.postprocess import mean, sobol_indices, variance


def fake_pce(terms: dict):
    return SimpleNamespace(indices=list(terms), coefficients=np.array(list(terms.values()), dtype=float))


def test_mean_reads_constant_coefficient():
    assert mean(fake_pce({(0,): 3.5})) == 3.5
    assert mean(fake_pce({(1, 0): 2.0, (0, 0): 5.0})) == 5.0


def test_variance_examples():
    assert variance(fake_pce({(0,): 3.0})) == 0.0
    assert variance(fake_pce({(0, 0): 2.0, (1, 0): 3.0, (0, 1): 4.0})) == 25.0


def test_sobol_example():
    r = sobol_indices(fake_pce({(0, 0): 2, (1, 0): 3, (0, 1): 4, (1, 1): 5}))
    assert r.variance == 50.0
    assert r.first_order[0] == pytest.approx(0.18)
    assert r.total_order[0] == pytest.approx(0.68)
    assert r.first_order[1] == pytest.approx(16 / 50)
    assert r.total_order[1] == pytest.approx(41 / 50)


def test_zero_variance_is_an_error():
    with pytest.raises(NumericalError):
        sobol_indices(fake_pce({(0, 0): 1.0, (1, 0): 0.0}))


def test_additive_model_has_equal_first_and_total():
    r = sobol_indices(fake_pce({(0, 0, 0): 1, (1, 0, 0): 2, (3, 0, 0): -1, (0, 2, 0): 0.5, (0, 0, 1): 3}))
    np.testing.assert_allclose(r.first_order, r.total_order, atol=1e-12)
    assert r.first_order.sum() == pytest.approx(1.0)


def test_reports():
    r = sobol_indices(
        fake_pce({(0, 0): 2, (1, 0): 3, (0, 1): 0.01, (1, 1): 5}), interactions=True, names=("a", "b")
    )
    d = json.loads(r.to_json())
    assert [x["name"] for x in d["dimensions"]] == ["a", "b"]
    assert d["negligible"] == []
    shares = {tuple(x["support"]): x["share"] for x in d["interactions"]}
    assert shares[("a", "b")] == pytest.approx(25 / (9 + 1e-4 + 25))
    rows = list(csv.reader(io.StringIO(r.to_csv())))
    assert rows[0] == ["dimension", "S_f", "S_t"]
    assert rows[1][0] == "a" and float(rows[1][1]) == r.first_order[0]


def test_negligible_threshold():
    r = sobol_indices(fake_pce({(0, 0): 0, (1, 0): 1.0, (0, 1): 0.09}))
    assert r.significant() == [0]
    assert r.to_dict()["negligible"] == ["y2"]


terms = st.dictionaries(
    st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(0, 3)),
    st.floats(-10, 10, allow_nan=False),
    min_size=2,
    max_size=30,
)


@settings(max_examples=100, deadline=None)
@given(terms=terms, flips=st.lists(st.booleans(), min_size=30, max_size=30))
def test_sobol_properties(terms, flips):
    terms = {(0, 0, 0): 1.0, **terms}
    p = fake_pce(terms)
    if variance(p) <= 1e-12:
        return
    r = sobol_indices(p, interactions=True)
    assert np.all(r.first_order >= -1e-12)
    assert np.all(r.first_order <= r.total_order + 1e-12)
    assert np.all(r.total_order <= 1 + 1e-12)
    assert r.first_order.sum() <= 1 + 1e-12
    # interaction groups partition the variance
    assert sum(r.interactions.values()) == pytest.approx(1.0, abs=1e-12)
    flipped = fake_pce({k: (-v if f else v) for (k, v), f in zip(terms.items(), flips)})
    r2 = sobol_indices(flipped)
    np.testing.assert_array_equal(r.first_order, r2.first_order)
    np.testing.assert_array_equal(r.total_order, r2.total_order)
