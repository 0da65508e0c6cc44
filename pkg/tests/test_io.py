import json

import numpy as np
import pytest

from hodgelab import FourierOneForm, FourierSymTensor, MetricField, spectrum
from hodgelab import io
from hodgelab.errors import InputError


def test_tensor_roundtrip(rng):
    h = FourierSymTensor.random(2, rng)
    back = io.tensor_from_json(json.loads(io.to_json_text(io.tensor_to_json(h))))
    assert np.array_equal(back.data, h.data)


def test_one_form_roundtrip(rng):
    u = FourierOneForm.random(2, rng)
    back = io.one_form_from_json(json.loads(io.to_json_text(io.one_form_to_json(u))))
    assert np.array_equal(back.data, u.data)


def test_scale_applies():
    obj = {"truncation": 1, "scale": 0.5,
           "entries": [{"k": [1, 0, 0], "ij": [1, 2], "re": 2.0, "im": 1.0}]}
    h = io.tensor_from_json(obj)
    assert h.data[1, 2, 1, 1] == pytest.approx(1.0 + 0.5j)
    assert h.data[1, 0, 1, 1] == pytest.approx(1.0 - 0.5j)


def test_save_load_metric(tmp_path, rng):
    g = MetricField.random(rng, 1, 0.1)
    io.save_metric(g, tmp_path / "m.json")
    back = io.load_metric(tmp_path / "m.json")
    assert np.array_equal(back.deviation.data, g.deviation.data)


@pytest.mark.parametrize("text,msg", [
    ("", "empty"),
    ("{not json", "not valid JSON"),
    ("[1, 2]", "JSON object"),
    ('{"entries": []}', "truncation"),
    ('{"truncation": 1}', "entries"),
    ('{"truncation": -1, "entries": []}', "nonnegative"),
    ('{"truncation": 1, "entries": [{"k": [0,0,0], "ij": [2,1], "re": 1}]}', "ij"),
    ('{"truncation": 1, "entries": [{"k": [2,0,0], "ij": [1,1], "re": 1}]}', "outside"),
    ('{"truncation": 1, "entries": [{"k": [0,0,0], "ij": [1,1], "im": 1}]}', "real"),
    ('{"truncation": 1, "entries": [{"k": [1,0,0], "ij": [1,1], "re": 1},'
     ' {"k": [-1,0,0], "ij": [1,1], "re": 1}]}', "conjugate"),
    ('{"truncation": 1, "entries": [{"k": [0,0,0], "ij": [1,1], "re": "x"}]}', "finite number"),
    ('{"truncation": 1, "entries": [{"k": [0,0], "ij": [1,1], "re": 1}]}', "three integers"),
])
def test_malformed_metric(tmp_path, text, msg):
    p = tmp_path / "m.json"
    p.write_text(text)
    with pytest.raises(InputError, match=msg):
        io.load_metric(p)


def test_missing_file(tmp_path):
    with pytest.raises(InputError, match="cannot read"):
        io.load_metric(tmp_path / "absent.json")


def test_bad_component():
    with pytest.raises(InputError, match="component"):
        io.one_form_from_json({"truncation": 1, "entries": [{"k": [0, 0, 0], "component": 4}]})


def test_json_text_deterministic():
    obj = {"b": [0.1, 1 / 3], "a": {"y": None, "x": True}, "c": float("nan")}
    text = io.to_json_text(obj)
    assert text == io.to_json_text(dict(reversed(list(obj.items()))))
    assert text.index('"a"') < text.index('"b"')
    assert "0.10000000000000001" in text and "0.33333333333333331" in text
    assert json.loads(text)["c"] is None


def test_stamped_isolates_timestamp():
    s = io.stamped({"v": 1})
    assert set(s) == {"timestamp", "report"}


def test_matrix_roundtrip(tmp_path, rng):
    A = rng.standard_normal((5, 3))
    io.write_matrix(tmp_path / "a.bin", A)
    assert (tmp_path / "a.bin").stat().st_size == 16 + 8 * 15
    assert np.array_equal(io.read_matrix(tmp_path / "a.bin"), A)


def test_matrix_corrupt(tmp_path):
    (tmp_path / "a.bin").write_bytes(b"\x01\x00")
    with pytest.raises(InputError, match="header"):
        io.read_matrix(tmp_path / "a.bin")
    io.write_matrix(tmp_path / "b.bin", np.eye(2))
    (tmp_path / "b.bin").write_bytes((tmp_path / "b.bin").read_bytes()[:-8])
    with pytest.raises(InputError, match="size"):
        io.read_matrix(tmp_path / "b.bin")


def test_spectrum_csv(flat):
    res = spectrum(flat, 1, "curl", count=8)
    lines = io.spectrum_csv(res).strip().splitlines()
    assert lines[0] == "index,value,cluster_id,cluster_size,residual"
    assert len(lines) == 9
    assert lines[1].split(",")[3] == "6"
