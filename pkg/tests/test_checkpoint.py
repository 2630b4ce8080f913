from __future__ import annotations

import numpy as np
import pytest

from mundartlex.checkpoint import MAGIC, CheckpointError, load_checkpoint, save_checkpoint
from mundartlex.model import ModelConfig, Transformer, pad_batch
from mundartlex.vocab import BOS, SPECIALS, Vocab

CFG = ModelConfig(
    n_layers=1, n_heads=2, d_k=4, d_v=4, d_model=12, d_word_vec=12,
    d_inner_hid=24, dropout=0.2, max_len=18,
)


def make_model(direction="p2g"):
    src_vocab = Vocab(SPECIALS + ("l", "i", "@", "b"))
    tgt_vocab = Vocab(SPECIALS + tuple("liebz"))
    model = Transformer(CFG, src_vocab, tgt_vocab, direction=direction, seed=13)
    model.meta = {"epochs": 55, "seed": 13, "final_loss": 0.5}
    return model


def random_inputs(model, n=10, seed=0):
    rng = np.random.Generator(np.random.PCG64(seed))
    cases = []
    for _ in range(n):
        ls = int(rng.integers(1, 6))
        lt = int(rng.integers(1, 6))
        src = rng.integers(4, len(model.src_vocab), size=(1, ls))
        tgt = np.concatenate([[[BOS]], rng.integers(4, len(model.tgt_vocab), size=(1, lt))], axis=1)
        cases.append((src, tgt))
    return cases


def test_round_trip_bit_identical(tmp_path):
    model = make_model()
    path = tmp_path / "model.ckpt"
    save_checkpoint(model, path)
    loaded = load_checkpoint(path)
    assert loaded.direction == "p2g"
    assert loaded.config == model.config
    assert loaded.src_vocab == model.src_vocab and loaded.tgt_vocab == model.tgt_vocab
    assert loaded.meta["epochs"] == 55
    for src, tgt in random_inputs(model):
        assert np.array_equal(model.forward(src, tgt), loaded.forward(src, tgt))


def test_records_direction_and_vocab_sizes(tmp_path):
    model = make_model(direction="g2p")
    path = tmp_path / "g2p.ckpt"
    save_checkpoint(model, path)
    loaded = load_checkpoint(path)
    assert loaded.direction == "g2p"
    assert len(loaded.src_vocab) == 8 and len(loaded.tgt_vocab) == 9


def test_truncated_rejected(tmp_path):
    model = make_model()
    path = tmp_path / "model.ckpt"
    save_checkpoint(model, path)
    blob = path.read_bytes()
    for cut in (3, 8, len(blob) // 2, len(blob) - 1):
        (tmp_path / "cut.ckpt").write_bytes(blob[:cut])
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "cut.ckpt")


def test_bad_magic_rejected(tmp_path):
    model = make_model()
    path = tmp_path / "model.ckpt"
    save_checkpoint(model, path)
    blob = bytearray(path.read_bytes())
    blob[:6] = b"NOTMAG"
    path.write_bytes(bytes(blob))
    with pytest.raises(CheckpointError, match="magic"):
        load_checkpoint(path)


def test_bad_version_rejected(tmp_path):
    model = make_model()
    path = tmp_path / "model.ckpt"
    save_checkpoint(model, path)
    blob = bytearray(path.read_bytes())
    blob[len(MAGIC)] = 99
    path.write_bytes(bytes(blob))
    with pytest.raises(CheckpointError, match="version"):
        load_checkpoint(path)


def test_trailing_bytes_rejected(tmp_path):
    model = make_model()
    path = tmp_path / "model.ckpt"
    save_checkpoint(model, path)
    path.write_bytes(path.read_bytes() + b"xx")
    with pytest.raises(CheckpointError, match="trailing"):
        load_checkpoint(path)
