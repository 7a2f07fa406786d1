import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from impnet import HistoryFunction, SpecFormatError, dump_spec, fingerprint, load_spec, loads_spec
from impnet.fixtures import FIXTURE_NAMES, fixture_path, load_fixture, random_network
from impnet.io import dumps_report, dumps_spec, spec_to_dict


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_fixture_round_trip(name):
    spec, hist = load_fixture(name)
    again, hist2 = loads_spec(dumps_spec(spec, hist))
    assert fingerprint(again) == fingerprint(spec)
    assert spec_to_dict(again, hist2) == spec_to_dict(spec, hist)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.booleans(), st.sampled_from(["f", "contractive", None]))
def test_random_round_trip(seed, per_entry, impulses):
    rng = np.random.default_rng(seed)
    spec = random_network(rng, n_max=4, impulses=impulses, per_entry=per_entry)
    hist = HistoryFunction.random(rng, spec.n)
    again, hist2 = loads_spec(dumps_spec(spec, hist))
    assert fingerprint(again) == fingerprint(spec)
    np.testing.assert_array_equal(hist2.value, hist.value)
    np.testing.assert_array_equal(again.impulses.strengths, spec.impulses.strengths)


def test_file_round_trip(tmp_path, two_neuron):
    path = tmp_path / "net.json"
    dump_spec(two_neuron, path)
    spec, hist = load_spec(path)
    assert hist is None
    assert fingerprint(spec) == fingerprint(two_neuron)


def test_fingerprint_ignores_key_order_and_tracks_values():
    text = fixture_path("two-neuron").read_text()
    doc = json.loads(text)
    shuffled = json.dumps(dict(reversed(list(doc.items()))))
    assert fingerprint(loads_spec(shuffled)[0]) == fingerprint(loads_spec(text)[0])
    doc["a"][0] += 1e-9
    assert fingerprint(loads_spec(json.dumps(doc))[0]) != fingerprint(loads_spec(text)[0])


def test_unknown_field_is_line_anchored():
    text = '{\n  "a": [1.0],\n  "gama": 3\n}\n'
    with pytest.raises(SpecFormatError) as exc:
        loads_spec(text, source="net.json")
    assert exc.value.line == 3
    assert str(exc.value).startswith("net.json:3:")


def test_bad_matrix_shape_is_line_anchored():
    text = '{\n  "a": [1.0, 2.0],\n  "omega": 1.0,\n  "A": [[1.0, 2.0]]\n}\n'
    with pytest.raises(SpecFormatError) as exc:
        loads_spec(text)
    assert exc.value.line == 4


def test_json_syntax_error_reports_line():
    with pytest.raises(SpecFormatError) as exc:
        loads_spec('{\n  "a": [1.0,\n}\n')
    assert exc.value.line == 3


def test_missing_decay_vector():
    with pytest.raises(SpecFormatError, match="'a'"):
        loads_spec('{"A": [[1.0]]}')


def test_history_size_checked():
    with pytest.raises(SpecFormatError) as exc:
        loads_spec('{"a": [1.0, 1.0],\n "history": {"value": [1, 2, 3]}}')
    assert exc.value.line == 2


def test_missing_file(tmp_path):
    with pytest.raises(SpecFormatError):
        load_spec(tmp_path / "absent.json")


def test_report_serialisation_is_strict_json():
    text = dumps_report({"b": float("nan"), "a": np.array([1.0, np.inf]), "c": np.int64(3)})
    assert json.loads(text) == {"a": [1.0, None], "b": None, "c": 3}
    assert text.index('"a"') < text.index('"b"')
