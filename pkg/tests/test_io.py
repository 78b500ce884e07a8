import json
import struct
import zipfile

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import array_shapes, arrays

from textspot.io import (
    FormatError,
    decode_tensor,
    encode_tensor,
    load_annotations,
    load_predictions,
    load_proposals,
    load_weights,
    parse_annotations,
    parse_predictions,
    parse_proposals,
    read_tensor,
    save_weights,
    write_tensor,
)
from textspot.sam import SamConfig, random_weights

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)
tensors = arrays(np.float64, array_shapes(min_dims=1, max_dims=4, max_side=5), elements=finite)


class TestTensorFile:
    def test_header_layout(self):
        buf = encode_tensor(np.arange(6.0).reshape(2, 3))
        assert buf[:4] == b"TSPT"
        assert struct.unpack_from("<HBB2I", buf, 4) == (1, 1, 2, 2, 3)
        assert len(buf) == 4 + 2 + 1 + 1 + 8 + 6 * 8

    @given(tensors)
    def test_f64_round_trip_exact(self, x):
        t = decode_tensor(encode_tensor(x))
        assert t.dtype == "f64"
        np.testing.assert_array_equal(t.data, x)

    @given(tensors)
    def test_rewrite_is_byte_identical(self, x):
        buf = encode_tensor(x)
        t = decode_tensor(buf)
        assert encode_tensor(t.data, t.dtype) == buf

    @given(arrays(np.float64, (3, 4), elements=st.floats(-1e6, 1e6)))
    def test_f32_round_trip(self, x):
        t = decode_tensor(encode_tensor(x, "f32"))
        assert t.dtype == "f32" and t.data.dtype == np.float64
        np.testing.assert_array_equal(t.data, x.astype(np.float32).astype(np.float64))
        buf = encode_tensor(x, "f32")
        assert encode_tensor(decode_tensor(buf).data, "f32") == buf

    def test_file_round_trip(self, tmp_path):
        x = np.random.default_rng(0).normal(size=(37, 4, 5))
        write_tensor(tmp_path / "x.tspt", x)
        np.testing.assert_array_equal(read_tensor(tmp_path / "x.tspt"), x)

    @pytest.mark.parametrize("mutate, message", [
        (lambda b: b"NOPE" + b[4:], "magic"),
        (lambda b: b[:4] + struct.pack("<H", 2) + b[6:], "version"),
        (lambda b: b[:6] + b"\x07" + b[7:], "dtype"),
        (lambda b: b[:7] + b"\x05" + b[8:], "ndim"),
        (lambda b: b[:-1], "payload"),
        (lambda b: b + b"\x00", "payload"),
        (lambda b: b[:5], "header"),
        (lambda b: b[:10], "shape"),
    ])
    def test_malformed(self, mutate, message):
        buf = encode_tensor(np.ones((2, 3)))
        with pytest.raises(FormatError, match=message):
            decode_tensor(mutate(buf))

    def test_non_finite_rejected(self):
        buf = bytearray(encode_tensor(np.ones(2)))
        buf[-8:] = struct.pack("<d", float("nan"))
        with pytest.raises(FormatError):
            decode_tensor(bytes(buf))

    def test_missing_file(self, tmp_path):
        with pytest.raises(FormatError):
            read_tensor(tmp_path / "absent.tspt")

    def test_encode_validation(self):
        with pytest.raises(ValueError):
            encode_tensor(np.ones((1, 1, 1, 1, 1)))
        with pytest.raises(ValueError):
            encode_tensor(np.ones(2), "f16")


class TestWeightBundle:
    CFG = SamConfig(H_p=2, W_p=4, C=3, V=5, N_c=5, T_max=4, in_channels=2)

    def test_directory_round_trip(self, tmp_path):
        w = random_weights(self.CFG, 7)
        save_weights(tmp_path / "w", w)
        got = load_weights(tmp_path / "w")
        assert got.cfg == self.CFG
        for name in w.params:
            np.testing.assert_array_equal(got[name], w[name])
        manifest = json.loads((tmp_path / "w" / "manifest.json").read_text())
        assert manifest["params"]["attn.W_t"] == "attn.W_t.tspt"

    def test_zip_round_trip(self, tmp_path):
        w = random_weights(self.CFG, 3)
        save_weights(tmp_path / "w", w, dtype="f32")
        with zipfile.ZipFile(tmp_path / "w.zip", "w") as zf:
            for f in (tmp_path / "w").iterdir():
                zf.write(f, f.name)
        got = load_weights(tmp_path / "w.zip")
        np.testing.assert_allclose(got["out.W_o"], w["out.W_o"], rtol=1e-7)

    def test_missing_parameter(self, tmp_path):
        save_weights(tmp_path / "w", random_weights(self.CFG, 0))
        m = json.loads((tmp_path / "w" / "manifest.json").read_text())
        del m["params"]["rnn.b_hh"]
        (tmp_path / "w" / "manifest.json").write_text(json.dumps(m))
        with pytest.raises(FormatError, match="rnn.b_hh"):
            load_weights(tmp_path / "w")

    def test_shape_mismatch(self, tmp_path):
        save_weights(tmp_path / "w", random_weights(self.CFG, 0))
        write_tensor(tmp_path / "w" / "out.b_o.tspt", np.zeros(9))
        with pytest.raises(FormatError):
            load_weights(tmp_path / "w")

    def test_not_a_bundle(self, tmp_path):
        (tmp_path / "f.txt").write_text("hi")
        with pytest.raises(FormatError):
            load_weights(tmp_path / "f.txt")


class TestAnnotations:
    def test_parse(self):
        data = {"im": [
            {"polygon": [[0, 0], [4, 0], [4, 2]], "transcription": "Hi!", "ignore": False,
             "chars": [{"cls": 18, "box": [0, 0, 2, 2]}]},
            {"polygon": [[0, 0], [4, 0], [4, 2]], "transcription": "###", "ignore": False},
        ]}
        words = parse_annotations(data)["im"]
        assert words[0].gt.transcription == "hi" and words[0].chars[0].cls == 18
        assert words[1].chars is None and words[1].gt.ignore

    @pytest.mark.parametrize("bad", [
        [],
        {"im": {"polygon": []}},
        {"im": [{"transcription": "a"}]},
        {"im": [{"polygon": [[0, 0], [1, 1]]}]},
        {"im": [{"polygon": [[0, 0], [1, 1], ["x", 2]]}]},
        {"im": [{"polygon": [[0, 0], [4, 0], [4, 2]], "transcription": 5}]},
        {"im": [{"polygon": [[0, 0], [4, 0], [4, 2]], "chars": [{"cls": 40, "box": [0, 0, 1, 1]}]}]},
        {"im": [{"polygon": [[0, 0], [4, 0], [4, 2]], "chars": [{"cls": 3}]}]},
    ])
    def test_schema_errors(self, bad):
        with pytest.raises(FormatError):
            parse_annotations(bad)

    def test_bad_json_file(self, tmp_path):
        (tmp_path / "a.json").write_text("{not json")
        with pytest.raises(FormatError):
            load_annotations(tmp_path / "a.json")
        with pytest.raises(FormatError):
            load_annotations(tmp_path / "missing.json")

    def test_predictions(self, tmp_path):
        data = {"im": [{"polygon": [[0, 0], [4, 0], [4, 2]], "text": "ab", "score": 0.5}]}
        (tmp_path / "p.json").write_text(json.dumps(data))
        assert load_predictions(tmp_path / "p.json")["im"][0].score == 0.5
        with pytest.raises(FormatError):
            parse_predictions({"im": [{"polygon": [[0, 0], [4, 0], [4, 2]], "score": 3}]})

    def test_proposals(self, tmp_path):
        data = {"im": [[0, 0, 4, 2], {"box": [1, 1, 3, 3], "instance": 0}]}
        (tmp_path / "r.json").write_text(json.dumps(data))
        props = load_proposals(tmp_path / "r.json")["im"]
        assert props[0].instance is None and props[1].instance == 0
        for bad in ({"im": [[0, 0, 4]]}, {"im": [{"instance": 1}]}, {"im": [{"box": [0, 0, 1, 1], "instance": "x"}]},
                    {"im": [[4, 0, 0, 2]]}):
            with pytest.raises(FormatError):
                parse_proposals(bad)
