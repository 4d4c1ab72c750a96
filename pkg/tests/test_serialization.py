import json

import numpy as np
import pytest

from lejapce.distributions import sample
from lejapce.exceptions import ConfigurationError
from lejapce.hierarchical import HierSurrogate, adapt_hier
from lejapce.models import get_model
from lejapce.pce import PceSurrogate, adapt_pce, transform_to_pce
from lejapce.serialization import load_surrogate, save_surrogate, surrogate_from_dict, surrogate_to_dict


@pytest.fixture(scope="module")
def steel():
    m = get_model("steel_column")
    return m, adapt_hier(m, m.input_spec, budget=80)


def test_hier_round_trip_is_bitwise(tmp_path, steel):
    m, h = steel
    path = save_surrogate(h, tmp_path / "h.json")
    data = json.loads(path.read_text())
    assert data["format"] == 1 and data["basis"] == "newton-hier"
    back = load_surrogate(path)
    assert isinstance(back, HierSurrogate)
    assert back.indices == h.indices and back.active == h.active
    y = sample(m.input_spec, 200, seed=3)
    assert back(y).tobytes() == h(y).tobytes()


@pytest.mark.parametrize("build", ["transform", "direct"])
def test_pce_round_trip_is_bitwise(tmp_path, steel, build):
    m, h = steel
    p = transform_to_pce(h) if build == "transform" else adapt_pce(m, m.input_spec, budget=60)
    back = load_surrogate(save_surrogate(p, tmp_path / "p.json"))
    assert isinstance(back, PceSurrogate)
    assert back.diagnostics["residual"] == p.diagnostics["residual"]
    assert back.active == p.active
    y = sample(m.input_spec, 200, seed=4)
    assert back(y).tobytes() == p(y).tobytes()
    assert json.loads(json.dumps(surrogate_to_dict(back))) == surrogate_to_dict(p)


def test_bad_files(tmp_path, steel):
    _, h = steel
    d = surrogate_to_dict(h)
    with pytest.raises(ConfigurationError):
        surrogate_from_dict({**d, "format": 2})
    with pytest.raises(ConfigurationError):
        surrogate_from_dict({**d, "basis": "lagrange"})
    del d["surpluses"]
    with pytest.raises(ConfigurationError):
        surrogate_from_dict(d)
    (tmp_path / "x.json").write_text("{not json")
    with pytest.raises(ConfigurationError):
        load_surrogate(tmp_path / "x.json")
    with pytest.raises(TypeError):
        surrogate_to_dict(object())


def test_numpy_arrays_are_plain_lists(steel):
    _, h = steel
    d = surrogate_to_dict(h)
    assert isinstance(d["nodes"][0], list) and isinstance(d["surpluses"][0], float)
    assert np.array(d["indices"]).shape == (len(h.indices), 10)
