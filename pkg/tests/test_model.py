from __future__ import annotations

import math

import numpy as np
import pytest

from mundartlex.model import ModelConfig, ModelError, Transformer, cross_entropy, pad_batch
from mundartlex.vocab import BOS, EOS, PAD, SPECIALS, Vocab

from .oracles import central_difference_grads

TINY = ModelConfig(
    n_layers=1, n_heads=1, d_k=4, d_v=4, d_model=8, d_word_vec=8,
    d_inner_hid=16, dropout=0.0, max_len=16,
)


def tiny_model(n_src=2, n_tgt=3, seed=3, config=TINY):
    src_vocab = Vocab(SPECIALS + tuple(f"s{i}" for i in range(n_src)))
    tgt_vocab = Vocab(SPECIALS + tuple(f"t{i}" for i in range(n_tgt)))
    return Transformer(config, src_vocab, tgt_vocab, seed=seed)


class TestConfig:
    def test_paper_scale_defaults(self):
        cfg = ModelConfig()
        assert (cfg.n_layers, cfg.n_heads) == (2, 2)
        assert (cfg.d_k, cfg.d_v) == (32, 32)
        assert cfg.d_model == cfg.d_word_vec == 50
        assert cfg.d_inner_hid == 400
        assert cfg.dropout == 0.2
        # attention width is decoupled from the model width
        assert cfg.n_heads * cfg.d_v == 64 != cfg.d_model

    def test_word_vec_must_match_model(self):
        with pytest.raises(ModelError):
            ModelConfig(d_word_vec=32)

    def test_positive_dims(self):
        with pytest.raises(ModelError):
            ModelConfig(n_layers=0)


class TestForward:
    def test_logits_shape(self):
        model = tiny_model(n_src=4, n_tgt=26)  # 26 + 4 specials = vocab of 30
        logits = model.logits_for_prefix([4, 5, 6, 7], [BOS, 4, 5])
        assert logits.shape == (3, 30)

    def test_zero_weights_give_uniform_rows(self):
        model = tiny_model(n_src=4, n_tgt=26)
        for k in model.params:
            model.params[k][:] = 0.0
        src = pad_batch([[4, 5]])
        tgt_in = pad_batch([[BOS, 4, 5]])
        tgt_out = pad_batch([[4, 5, EOS]])
        logits = model.forward(src, tgt_in)
        assert np.allclose(logits, 0.0)
        loss, _, _ = cross_entropy(logits, np.asarray(tgt_out), np.asarray(tgt_out) != PAD)
        assert math.isclose(loss, math.log(30), rel_tol=1e-12)

    def test_causal_masking(self):
        model = tiny_model(n_src=3, n_tgt=5, seed=11)
        src = [4, 5, 6]
        base = model.logits_for_prefix(src, [BOS, 4, 5, 6, 4])
        for t in range(1, 5):
            prefix = [BOS, 4, 5, 6, 4]
            prefix[t] = 7 if prefix[t] != 7 else 8
            perturbed = model.logits_for_prefix(src, prefix)
            assert np.array_equal(base[:t], perturbed[:t])
            assert not np.array_equal(base[t], perturbed[t])

    def test_pad_invariance_on_src(self):
        model = tiny_model(n_src=4, n_tgt=4, seed=5)
        tgt_in = pad_batch([[BOS, 4, 5]])
        plain = model.forward(pad_batch([[4, 5, 6]]), tgt_in)
        padded = model.forward(pad_batch([[4, 5, 6, PAD, PAD]]), tgt_in)
        assert np.array_equal(plain, padded)

    def test_rejects_overlong_and_bad_ids(self):
        model = tiny_model()
        with pytest.raises(ModelError, match="max_len"):
            model.forward(pad_batch([[4] * 17]), pad_batch([[BOS]]))
        with pytest.raises(ModelError, match="out of range"):
            model.forward(pad_batch([[99]]), pad_batch([[BOS]]))
        with pytest.raises(ModelError, match="BOS"):
            model.logits_for_prefix([4], [4])

    def test_loss_all_pad_rejected(self):
        logits = np.zeros((1, 2, 7))
        targets = np.full((1, 2), PAD)
        with pytest.raises(ModelError):
            cross_entropy(logits, targets, targets != PAD)

    def test_one_hot_logits_near_zero_loss(self):
        targets = np.array([[4, 5, EOS]])
        logits = np.full((1, 3, 7), -1e3)
        for i, t in enumerate(targets[0]):
            logits[0, i, t] = 1e3
        loss, _, _ = cross_entropy(logits, targets, targets != PAD)
        assert loss < 1e-12


class TestGradients:
    def test_matches_finite_differences(self):
        model = tiny_model(n_src=2, n_tgt=3, seed=3)
        src = pad_batch([[4, 5, 4], [5, 4]])
        tgt_in = pad_batch([[BOS, 4, 5], [BOS, 6]])
        tgt_out = pad_batch([[4, 5, EOS], [6, EOS]])
        _, grads, _ = model.loss_and_grads(src, tgt_in, tgt_out)
        fd = central_difference_grads(model, src, tgt_in, tgt_out)
        for name in model.params:
            a = grads[name].reshape(-1)
            b = fd[name].reshape(-1)
            denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-8)
            rel = np.abs(a - b) / denom
            rel[np.maximum(np.abs(a), np.abs(b)) < 1e-8] = 0.0
            assert rel.max() < 1e-4, f"{name}: rel err {rel.max():.2e}"

    def test_dropout_draws_are_deterministic(self):
        model = tiny_model(seed=1)
        src = pad_batch([[4, 5]])
        tgt_in = pad_batch([[BOS, 4]])
        a = model.forward(src, tgt_in, dropout=0.3, rng=np.random.Generator(np.random.PCG64(9)))
        b = model.forward(src, tgt_in, dropout=0.3, rng=np.random.Generator(np.random.PCG64(9)))
        assert np.array_equal(a, b)

    def test_eval_mode_ignores_rng(self):
        model = tiny_model(seed=1)
        src = pad_batch([[4, 5]])
        tgt_in = pad_batch([[BOS, 4]])
        a = model.forward(src, tgt_in)
        b = model.forward(src, tgt_in, dropout=0.0, rng=np.random.Generator(np.random.PCG64(1)))
        assert np.array_equal(a, b)


def test_step_log_probs_normalized():
    model = tiny_model(n_src=3, n_tgt=4, seed=2)
    rows = model.step_log_probs([4, 5], [[4], [5]])
    assert rows.shape == (2, 8)
    assert np.allclose(np.exp(rows).sum(axis=-1), 1.0)


def test_vocab_swap_symmetry():
    """One constructor serves both directions with vocabularies exchanged."""
    src_vocab = Vocab(SPECIALS + ("l", "i"))
    tgt_vocab = Vocab(SPECIALS + ("a", "b", "c"))
    p2g = Transformer(TINY, src_vocab, tgt_vocab, direction="p2g", seed=0)
    g2p = Transformer(TINY, tgt_vocab, src_vocab, direction="g2p", seed=0)
    assert p2g.params["src_emb"].shape == g2p.params["tgt_emb"].shape
    assert p2g.params["out.w"].shape[1] == len(tgt_vocab)
    assert g2p.params["out.w"].shape[1] == len(src_vocab)
