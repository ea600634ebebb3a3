"""Self-describing binary model container.

Layout: 4-byte magic, u32 little-endian format version, u64 little-endian
header length, a UTF-8 JSON header (config, vocabulary characters, POS
tags, tensor specs), then each tensor's raw little-endian values in
header order. Loading validates the magic, the version, every tensor
shape against the shapes implied by the header, and that the file ends
exactly where the last tensor does.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from io import BufferedReader
from typing import BinaryIO

import numpy as np

from .config import TrainConfig
from .corpus import TagSet, Vocab
from .model import SegTagModel

MAGIC = b"SGTM"
FORMAT_VERSION = 1
_DTYPES = {"<f4", "<f8"}


class ModelFormatError(Exception):
    """The file is not a valid model container."""


class ModelVersionError(ModelFormatError):
    """The container declares an unsupported format version."""


class ModelTruncatedError(ModelFormatError):
    """The file ends before the declared content does."""


class ModelShapeError(ModelFormatError):
    """A tensor's shape disagrees with the header's configuration."""


@dataclass
class ModelArtifact:
    config: TrainConfig
    vocab: Vocab
    tagset: TagSet
    tensors: dict[str, np.ndarray]


def expected_parameter_shapes(
    config: TrainConfig, vocab_size: int, n_tags: int
) -> dict[str, tuple[int, ...]]:
    """Parameter name -> shape for a model with the given dimensions."""
    e, h, d = config.embedding_dim, config.hidden_size, config.mlp_size
    shapes: dict[str, tuple[int, ...]] = {
        "embedding": (vocab_size, e),
        "lstm_fw.weight": (4 * h, e + h),
        "lstm_fw.bias": (4 * h,),
        "lstm_bw.weight": (4 * h, e + h),
        "lstm_bw.bias": (4 * h,),
    }
    for name in ("mlp_seg_left", "mlp_seg_right", "mlp_tag_left", "mlp_tag_right"):
        shapes[f"{name}.weight"] = (d, 2 * h)
        shapes[f"{name}.bias"] = (d,)
    shapes["seg_biaffine"] = (d + 1, d)
    shapes["tag_biaffine"] = (n_tags, d + 1, d + 1)
    return shapes


def artifact_from_model(model: SegTagModel) -> ModelArtifact:
    return ModelArtifact(
        config=model.config,
        vocab=model.vocab,
        tagset=model.tagset,
        tensors=model.store.values(),
    )


def model_from_artifact(artifact: ModelArtifact, dtype=None) -> SegTagModel:
    if dtype is None:
        dtypes = {t.dtype for t in artifact.tensors.values()}
        dtype = dtypes.pop() if len(dtypes) == 1 else np.float32
    model = SegTagModel(artifact.vocab, artifact.tagset, artifact.config, dtype=dtype)
    model.store.load_values(artifact.tensors)
    return model


def save_model(path: str, artifact: ModelArtifact) -> None:
    tensor_specs = [
        {"name": name, "dtype": arr.dtype.newbyteorder("<").str, "shape": list(arr.shape)}
        for name, arr in artifact.tensors.items()
    ]
    header = {
        "config": artifact.config.to_dict(),
        "vocab_chars": list(artifact.vocab.chars),
        "pos_tags": list(artifact.tagset.pos_tags),
        "tensors": tensor_specs,
    }
    header_bytes = json.dumps(header, ensure_ascii=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as handle:
        handle.write(MAGIC)
        handle.write(struct.pack("<I", FORMAT_VERSION))
        handle.write(struct.pack("<Q", len(header_bytes)))
        handle.write(header_bytes)
        for name, arr in artifact.tensors.items():
            handle.write(np.ascontiguousarray(arr).astype(arr.dtype.newbyteorder("<")).tobytes())


def _read_exact(handle: BinaryIO, size: int, what: str) -> bytes:
    data = handle.read(size)
    if len(data) != size:
        raise ModelTruncatedError(f"file ends inside {what} ({len(data)}/{size} bytes)")
    return data


def load_model(path: str) -> ModelArtifact:
    with open(path, "rb") as handle:
        magic = handle.read(len(MAGIC))
        if len(magic) < len(MAGIC) or magic != MAGIC:
            raise ModelFormatError(f"{path!r} is not a model file (bad magic)")
        (version,) = struct.unpack("<I", _read_exact(handle, 4, "version field"))
        if version != FORMAT_VERSION:
            raise ModelVersionError(
                f"unsupported model format version {version} (expected {FORMAT_VERSION})"
            )
        (header_len,) = struct.unpack("<Q", _read_exact(handle, 8, "header length"))
        try:
            header = json.loads(_read_exact(handle, header_len, "header"))
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"corrupt model header: {exc}") from None
        try:
            config = TrainConfig(**header["config"])
            vocab = Vocab(header["vocab_chars"])
            tagset = TagSet(header["pos_tags"])
            tensor_specs = header["tensors"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelFormatError(f"invalid model header: {exc}") from None

        expected = expected_parameter_shapes(config, vocab.size, tagset.n_total)
        declared_names = [spec["name"] for spec in tensor_specs]
        if sorted(declared_names) != sorted(expected):
            raise ModelShapeError(
                f"tensor names {sorted(declared_names)} do not match the configuration"
            )
        tensors: dict[str, np.ndarray] = {}
        for spec in tensor_specs:
            name, shape = spec["name"], tuple(spec["shape"])
            if spec["dtype"] not in _DTYPES:
                raise ModelFormatError(f"unsupported tensor dtype {spec['dtype']!r}")
            if shape != expected[name]:
                raise ModelShapeError(
                    f"tensor {name!r} has shape {shape}, expected {expected[name]}"
                )
            dtype = np.dtype(spec["dtype"])
            count = int(np.prod(shape, dtype=np.int64)) if shape else 1
            raw = _read_exact(handle, count * dtype.itemsize, f"tensor {name!r}")
            tensors[name] = np.frombuffer(raw, dtype=dtype).reshape(shape).copy()
        if handle.read(1):
            raise ModelFormatError("trailing data after the last tensor")
    return ModelArtifact(config=config, vocab=vocab, tagset=tagset, tensors=tensors)
