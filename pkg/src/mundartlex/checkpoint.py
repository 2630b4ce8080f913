"""Binary model checkpoints.

Layout: magic ``SGDICT``, format version (u32 LE), header length (u32 LE),
UTF-8 JSON header (config, direction, both vocabularies, tensor manifest,
training metadata), then the raw little-endian float64 tensor data in
manifest order. Loading reproduces forward outputs bit-identically.
"""
from __future__ import annotations

import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .model import ModelConfig, Transformer
from .vocab import Vocab

MAGIC = b"SGDICT"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(model: Transformer, path: str | Path) -> None:
    path = Path(path)
    manifest = [[name, list(tensor.shape)] for name, tensor in model.params.items()]
    header = {
        "config": model.config.to_dict(),
        "direction": model.direction,
        "src_vocab": list(model.src_vocab.tokens),
        "tgt_vocab": list(model.tgt_vocab.tokens),
        "manifest": manifest,
        "meta": model.meta,
    }
    header_bytes = json.dumps(header, ensure_ascii=False).encode("utf-8")
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<I", FORMAT_VERSION))
            fh.write(struct.pack("<I", len(header_bytes)))
            fh.write(header_bytes)
            for name, _ in manifest:
                fh.write(np.ascontiguousarray(model.params[name], dtype="<f8").tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_checkpoint(path: str | Path) -> Transformer:
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < len(MAGIC) + 8:
        raise CheckpointError(f"{path}: truncated checkpoint")
    if blob[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path}: bad magic, not a checkpoint file")
    offset = len(MAGIC)
    (version,) = struct.unpack_from("<I", blob, offset)
    offset += 4
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported format version {version}")
    (header_len,) = struct.unpack_from("<I", blob, offset)
    offset += 4
    if len(blob) < offset + header_len:
        raise CheckpointError(f"{path}: truncated header")
    try:
        header = json.loads(blob[offset : offset + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt header ({exc})") from exc
    offset += header_len

    try:
        config = ModelConfig.from_dict(header["config"])
        direction = header["direction"]
        src_vocab = Vocab(tuple(header["src_vocab"]))
        tgt_vocab = Vocab(tuple(header["tgt_vocab"]))
        manifest = header["manifest"]
        meta = header.get("meta", {})
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"{path}: invalid header ({exc})") from exc

    params: dict[str, np.ndarray] = {}
    for name, shape in manifest:
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 8
        if len(blob) < offset + nbytes:
            raise CheckpointError(f"{path}: truncated tensor data for {name!r}")
        params[name] = (
            np.frombuffer(blob, dtype="<f8", count=count, offset=offset)
            .reshape(shape)
            .copy()
        )
        offset += nbytes
    if offset != len(blob):
        raise CheckpointError(f"{path}: {len(blob) - offset} trailing bytes")

    expected = Transformer(config, src_vocab, tgt_vocab, direction=direction).params
    if set(expected) != set(params):
        raise CheckpointError(f"{path}: tensor manifest does not match the configuration")
    for name, tensor in params.items():
        if tensor.shape != expected[name].shape:
            raise CheckpointError(
                f"{path}: tensor {name!r} has shape {tensor.shape},"
                f" config implies {expected[name].shape}"
            )
    return Transformer.from_parts(config, src_vocab, tgt_vocab, direction, params, meta)
