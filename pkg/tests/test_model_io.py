import json
import struct

import numpy as np
import pytest

from spantag.config import TrainConfig
from spantag.corpus import build_vocab, parse_corpus
from spantag.model import SegTagModel
from spantag.model_io import (
    FORMAT_VERSION,
    MAGIC,
    ModelFormatError,
    ModelShapeError,
    ModelTruncatedError,
    ModelVersionError,
    artifact_from_model,
    expected_parameter_shapes,
    load_model,
    model_from_artifact,
    save_model,
)

TEXT = "ab_NN c_VV\nxy_NR zd_NN ab_NN\n"


def _make_model(seed=0, dtype=np.float32):
    corpus = parse_corpus(TEXT)
    config = TrainConfig(embedding_dim=4, hidden_size=4, mlp_size=3, seed=seed)
    return SegTagModel(build_vocab(corpus), corpus.tagset, config, dtype=dtype)


@pytest.fixture
def saved(tmp_path):
    model = _make_model()
    path = tmp_path / "m.model"
    save_model(str(path), artifact_from_model(model))
    return model, path


class TestRoundTrip:
    def test_tensors_bit_identical(self, saved):
        model, path = saved
        artifact = load_model(str(path))
        for name, node in model.store.items():
            np.testing.assert_array_equal(artifact.tensors[name], node.value)
            assert artifact.tensors[name].dtype == node.value.dtype

    def test_header_round_trips(self, saved):
        model, path = saved
        artifact = load_model(str(path))
        assert artifact.config == model.config
        assert artifact.vocab == model.vocab
        assert artifact.tagset == model.tagset

    def test_save_load_save_is_byte_identical(self, saved, tmp_path):
        _, path = saved
        again = tmp_path / "again.model"
        save_model(str(again), load_model(str(path)))
        assert again.read_bytes() == path.read_bytes()

    def test_predictions_survive_reload(self, saved):
        model, path = saved
        reloaded = model_from_artifact(load_model(str(path)))
        for chars in ("abc", "xyzdab", "q"):
            assert reloaded.predict_sentence(chars) == model.predict_sentence(chars)

    def test_float64_round_trip(self, tmp_path):
        model = _make_model(dtype=np.float64)
        path = tmp_path / "m64.model"
        save_model(str(path), artifact_from_model(model))
        artifact = load_model(str(path))
        assert artifact.tensors["embedding"].dtype == np.float64


class TestCorruptFiles:
    def test_truncated_header(self, saved):
        _, path = saved
        path.write_bytes(path.read_bytes()[:10])
        with pytest.raises(ModelTruncatedError):
            load_model(str(path))

    def test_truncated_tensor(self, saved):
        _, path = saved
        data = path.read_bytes()
        path.write_bytes(data[: len(data) - 7])
        with pytest.raises(ModelTruncatedError, match="tensor"):
            load_model(str(path))

    def test_bad_magic(self, saved):
        _, path = saved
        data = path.read_bytes()
        path.write_bytes(b"XXXX" + data[4:])
        with pytest.raises(ModelFormatError, match="magic"):
            load_model(str(path))

    def test_version_tamper(self, saved):
        _, path = saved
        data = bytearray(path.read_bytes())
        data[4:8] = struct.pack("<I", FORMAT_VERSION + 1)
        path.write_bytes(bytes(data))
        with pytest.raises(ModelVersionError, match="version"):
            load_model(str(path))

    def test_trailing_data(self, saved):
        _, path = saved
        path.write_bytes(path.read_bytes() + b"\x00")
        with pytest.raises(ModelFormatError, match="trailing"):
            load_model(str(path))

    def test_shape_tamper(self, saved):
        # shrink a declared tensor shape in the header; the loader must
        # reject it against the config-derived expectation
        _, path = saved
        data = path.read_bytes()
        (header_len,) = struct.unpack("<Q", data[8:16])
        header = json.loads(data[16 : 16 + header_len])
        header["tensors"][0]["shape"][0] -= 1
        new_header = json.dumps(header, separators=(",", ":")).encode()
        path.write_bytes(
            data[:8] + struct.pack("<Q", len(new_header)) + new_header + data[16 + header_len :]
        )
        with pytest.raises(ModelShapeError, match="shape"):
            load_model(str(path))

    def test_unknown_tensor_name(self, saved):
        _, path = saved
        data = path.read_bytes()
        (header_len,) = struct.unpack("<Q", data[8:16])
        header = json.loads(data[16 : 16 + header_len])
        header["tensors"][0]["name"] = "mystery"
        new_header = json.dumps(header, separators=(",", ":")).encode()
        path.write_bytes(
            data[:8] + struct.pack("<Q", len(new_header)) + new_header + data[16 + header_len :]
        )
        with pytest.raises(ModelShapeError, match="names"):
            load_model(str(path))

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.model"
        path.write_bytes(b"")
        with pytest.raises(ModelFormatError):
            load_model(str(path))


def test_expected_shapes_match_real_model():
    model = _make_model()
    expected = expected_parameter_shapes(
        model.config, model.vocab.size, model.tagset.n_total
    )
    actual = {name: node.value.shape for name, node in model.store.items()}
    assert expected == actual
