import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import assert_grads_close, finite_difference_grads
from freqtimenet.models import (AttentionBlock, FreqTimeConfig, FreqTimeNet,
                                TimeBlock, attention_block_eval,
                                complexity_report, load_model, save_model)

SMALL = FreqTimeConfig(n_p_t=2, n_p_f=4, n_t=3, n_f=8, l_group=4)


def reference_forward(net, obs, snr_linear=None):
    """Independent hand-indexed forward pass with explicit loops."""
    cfg = net.config

    def dense(layer, vec):
        out = []
        for o in range(layer.out_dim):
            acc = layer.biases[o]
            for i in range(layer.in_dim):
                acc += vec[i] * layer.weights[i, o]
            if layer.activation == "relu":
                acc = max(acc, 0.0)
            elif layer.activation == "sigmoid":
                acc = 1.0 / (1.0 + math.exp(-acc))
            out.append(acc)
        return out

    results = []
    for b in range(obs.shape[0]):
        feat = [[None] * (cfg.n_f * 2) for _ in range(cfg.n_p_t)]
        for p in range(cfg.n_p_t):
            vec = [obs[b, p, i, c] for i in range(cfg.n_p_f)
                   for c in range(2)]
            for layer in net.freq_blocks[p].layers:
                vec = dense(layer, vec)
            if net.with_attention:
                block = net.atten_blocks[p]
                emb = [snr_linear[b]]
                for layer in block.embed_layers:
                    emb = dense(layer, emb)
                ctx = emb + list(vec)
                scale = ctx
                for layer in block.factor_layers:
                    scale = dense(layer, scale)
                vec = [v * s for v, s in zip(vec, scale)]
            feat[p] = vec
        est = np.zeros((cfg.n_t, cfg.n_f, 2))
        for g in range(cfg.n_groups):
            vec = [feat[p][2 * (g * cfg.l_group + l) + c]
                   for p in range(cfg.n_p_t)
                   for l in range(cfg.l_group)
                   for c in range(2)]
            for layer in net.time_blocks[g].layers:
                vec = dense(layer, vec)
            for t in range(cfg.n_t):
                for l in range(cfg.l_group):
                    for c in range(2):
                        est[t, g * cfg.l_group + l, c] = \
                            vec[(t * cfg.l_group + l) * 2 + c]
        results.append(est)
    return np.stack(results)


class TestConfig:
    def test_defaults(self):
        cfg = FreqTimeConfig()
        assert cfg.n_groups == 8

    def test_invalid(self):
        with pytest.raises(ValueError):
            FreqTimeConfig(n_f=96, l_group=10)
        with pytest.raises(ValueError):
            FreqTimeConfig(n_p_t=0)


class TestForwardShape:
    @pytest.mark.parametrize("with_attention", [False, True])
    def test_default_shapes(self, with_attention, rng):
        net = FreqTimeNet(with_attention=with_attention, seed=1)
        obs = rng.normal(size=(3, 2, 48, 2))
        out = net.predict(obs, np.full(3, 4.0) if with_attention else None)
        assert out.shape == (3, 14, 96, 2)

    @settings(max_examples=25, deadline=None)
    @given(n_p_t=st.integers(1, 3), l_group=st.integers(1, 4),
           groups=st.integers(1, 3), n_t=st.integers(1, 5),
           n_p_f=st.integers(1, 6), seed=st.integers(0, 10),
           with_attention=st.booleans())
    def test_shape_contract_property(self, n_p_t, l_group, groups, n_t,
                                     n_p_f, seed, with_attention):
        cfg = FreqTimeConfig(n_p_t=n_p_t, n_p_f=n_p_f, n_t=n_t,
                             n_f=l_group * groups, l_group=l_group)
        net = FreqTimeNet(cfg, with_attention=with_attention, seed=seed)
        obs = np.random.default_rng(seed).normal(size=(2, n_p_t, n_p_f, 2))
        out = net.predict(obs, np.array([1.0, 9.0]) if with_attention else None)
        assert out.shape == (2, n_t, cfg.n_f, 2)

    def test_dimension_mismatch_rejected(self):
        net = FreqTimeNet(SMALL)
        with pytest.raises(ValueError):
            net.predict(np.zeros((1, 2, 5, 2)))

    def test_attention_requires_snr(self):
        net = FreqTimeNet(SMALL, with_attention=True)
        with pytest.raises(ValueError):
            net.predict(np.zeros((1, 2, 4, 2)))


class TestForwardValues:
    def test_zero_input_zero_biases_gives_zero(self):
        net = FreqTimeNet(SMALL, seed=2)
        for p in net.parameters():
            if p.ndim == 1:
                p[:] = 0.0
        out = net.predict(np.zeros((2, 2, 4, 2)))
        assert not out.any()

    @pytest.mark.parametrize("with_attention", [False, True])
    def test_matches_straight_line_oracle(self, with_attention, rng):
        net = FreqTimeNet(SMALL, with_attention=with_attention, seed=3)
        obs = rng.normal(size=(2, 2, 4, 2))
        snr = np.array([0.5, 30.0]) if with_attention else None
        fast = net.predict(obs, snr)
        slow = reference_forward(net, obs, snr)
        assert np.max(np.abs(fast - slow)) <= 1e-12

    def test_swapped_freq_blocks_against_oracle(self, rng):
        # separate freq blocks: exchanging their parameters must match the
        # independent evaluation of the exchanged weights
        net = FreqTimeNet(SMALL, seed=4)
        b0, b1 = net.freq_blocks
        for l0, l1 in zip(b0.layers, b1.layers):
            l0.weights, l1.weights = l1.weights, l0.weights
            l0.biases, l1.biases = l1.biases, l0.biases
        obs = rng.normal(size=(1, 2, 4, 2))
        assert np.max(np.abs(net.predict(obs) -
                             reference_forward(net, obs))) <= 1e-12

    def test_shared_time_block_group_equivariance(self, rng):
        cfg = SMALL
        block = TimeBlock(cfg, np.random.default_rng(5))
        groups = rng.normal(size=(cfg.n_groups, cfg.n_p_t * cfg.l_group * 2))
        outs = np.stack([block.layers[1].forward(
            block.layers[0].forward(g[None])[0])[0][0] for g in groups])
        perm = np.array([1, 0])
        outs_perm = np.stack([block.layers[1].forward(
            block.layers[0].forward(g[None])[0])[0][0] for g in groups[perm]])
        assert np.array_equal(outs[perm], outs_perm)


class TestAttention:
    @pytest.fixture
    def block(self):
        return AttentionBlock(SMALL, np.random.default_rng(6))

    def test_scale_strictly_in_unit_interval(self, block, rng):
        f_g = rng.normal(size=(4, SMALL.n_f * 2))
        _, (_, scale, _, _) = block.forward(f_g, np.array([0.1, 1.0, 10.0, 99.0]))
        assert np.all(scale > 0.0) and np.all(scale < 1.0)

    def test_attenuation(self, block, rng):
        f_g = rng.normal(size=(1, SMALL.n_f, 2))
        f_a = attention_block_eval(block, f_g[0], snr_linear=3.0)
        assert np.all(np.abs(f_a) <= np.abs(f_g[0]))

    def test_zero_feature_stays_zero(self, block):
        f_a = attention_block_eval(block, np.zeros((1, SMALL.n_f, 2)), 5.0)
        assert not f_a.any()

    def test_nonpositive_snr_rejected(self, block):
        with pytest.raises(ValueError):
            block.forward(np.zeros((1, SMALL.n_f * 2)), np.array([0.0]))
        with pytest.raises(ValueError):
            block.forward(np.zeros((1, SMALL.n_f * 2)), np.array([-1.0]))

    def test_snr_changes_scale(self, block, rng):
        f_g = rng.normal(size=(1, SMALL.n_f * 2))
        _, (_, s1, _, _) = block.forward(f_g, np.array([1.0]))
        _, (_, s2, _, _) = block.forward(f_g, np.array([100.0]))
        assert not np.allclose(s1, s2)

    def test_identity_gate_reduces_to_backbone(self, rng):
        net_a = FreqTimeNet(SMALL, with_attention=True, seed=7)
        net_f = FreqTimeNet(SMALL, with_attention=False, seed=8)
        for src, dst in zip(net_a._unique_freq + net_a._unique_time,
                            net_f._unique_freq + net_f._unique_time):
            for ls, ld in zip(src.layers, dst.layers):
                ld.weights = ls.weights.copy()
                ld.biases = ls.biases.copy()

        class UnitGate:
            def forward(self, f_g, snr):
                return f_g, None
        net_a.atten_blocks = [UnitGate() for _ in net_a.atten_blocks]
        obs = rng.normal(size=(2, 2, 4, 2))
        assert np.allclose(net_a.predict(obs, np.array([1.0, 2.0])),
                           net_f.predict(obs), atol=0.0)

    def test_zero_gate_with_zero_biases_annihilates(self, rng):
        net = FreqTimeNet(SMALL, with_attention=True, seed=9)
        for block in net._unique_time:
            for layer in block.layers:
                layer.biases[:] = 0.0

        class ZeroGate:
            def forward(self, f_g, snr):
                return np.zeros_like(f_g), None
        net.atten_blocks = [ZeroGate() for _ in net.atten_blocks]
        out = net.predict(rng.normal(size=(1, 2, 4, 2)), np.array([5.0]))
        assert not out.any()


class TestGradients:
    @pytest.mark.parametrize("with_attention", [False, True])
    def test_end_to_end_subset(self, with_attention, rng):
        net = FreqTimeNet(SMALL, with_attention=with_attention, seed=10)
        obs = rng.normal(size=(2, 2, 4, 2))
        snr = np.array([2.0, 8.0]) if with_attention else None
        tgt = rng.normal(size=(2, SMALL.n_t, SMALL.n_f, 2))
        analytic, numeric = finite_difference_grads(net, obs, tgt, snr,
                                                    coords=300, rng=rng)
        assert_grads_close(analytic, numeric)

    def test_backward_shape_mismatch(self, rng):
        net = FreqTimeNet(SMALL)
        obs = rng.normal(size=(1, 2, 4, 2))
        _, caches = net.forward(obs)
        with pytest.raises(ValueError):
            net.backward(caches, np.zeros((1, 2, 2, 2)))


class TestComplexity:
    def test_freqtime_default_counts(self):
        rep = complexity_report(FreqTimeNet())
        assert rep["params"]["total"] == 102_432
        assert rep["params"]["per_freq_block"] == 41_808
        assert rep["params"]["per_time_block"] == 18_816

    def test_shared_freq_blocks(self):
        net = FreqTimeNet(FreqTimeConfig(share_freq_blocks=True))
        assert complexity_report(net)["params"]["total"] == 60_624

    def test_atten_adds_two_attention_blocks(self):
        rep = complexity_report(FreqTimeNet(with_attention=True))
        per = rep["params"]["per_attention_block"]
        assert rep["params"]["total"] == 102_432 + 2 * per
        assert rep["params"]["attention_blocks"] == 2 * per


class TestModelIo:
    @pytest.mark.parametrize("with_attention", [False, True])
    def test_round_trip_preserves_outputs(self, with_attention, tmp_path, rng):
        net = FreqTimeNet(SMALL, with_attention=with_attention, seed=11)
        # snap to f32 so the checkpoint round trip is exact
        for p in net.parameters():
            p[...] = p.astype(np.float32)
        path = tmp_path / "m.ftnn"
        save_model(net, path)
        back = load_model(path)
        obs = rng.normal(size=(2, 2, 4, 2))
        snr = np.array([1.0, 4.0]) if with_attention else None
        assert np.array_equal(net.predict(obs, snr), back.predict(obs, snr))

    def test_rejects_foreign_checkpoint(self, tmp_path):
        from freqtimenet.nn import save_checkpoint
        path = tmp_path / "other.ftnn"
        save_checkpoint(path, {"kind": "something-else"}, [np.zeros(2)])
        with pytest.raises(ValueError):
            load_model(path)
