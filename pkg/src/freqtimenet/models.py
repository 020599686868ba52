"""Frequency-time division estimator networks.

The network first splits the pilot observation along time: each pilot
symbol's (1, n_p_f, 2) slice is flattened (C order, so real/imag interleave
per subcarrier) and run through a frequency block, producing a (1, n_f, 2)
feature map.  With attention enabled, the feature map is rescaled
elementwise by an SNR-conditioned sigmoid gate before time processing.
The stacked (n_p_t, n_f, 2) map is then split along frequency into groups
of ``l_group`` subcarriers; each group is flattened and run through a time
block, producing (n_t, l_group, 2).  Concatenating the groups along
frequency yields the (n_t, n_f, 2) channel estimate.

All forward/backward code is batched over a leading sample axis.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .nn import (DenseLayer, count_flops, count_params, load_checkpoint,
                 save_checkpoint)


@dataclass(frozen=True)
class FreqTimeConfig:
    """Dimensions and parameter-sharing flags for both network variants."""

    n_p_t: int = 2
    n_p_f: int = 48
    n_t: int = 14
    n_f: int = 96
    l_group: int = 12
    share_time_blocks: bool = True
    share_freq_blocks: bool = False

    def __post_init__(self):
        for name in ("n_p_t", "n_p_f", "n_t", "n_f", "l_group"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.n_f % self.l_group != 0:
            raise ValueError("n_f must be divisible by l_group")

    @property
    def n_groups(self) -> int:
        return self.n_f // self.l_group


def _chain_forward(layers, x):
    caches = []
    for layer in layers:
        x, cache = layer.forward(x)
        caches.append(cache)
    return x, caches


def _chain_backward(layers, caches, grad_out, grad_acc):
    for layer, cache in zip(reversed(layers), reversed(caches)):
        grad_out, grad_w, grad_b = layer.backward(cache, grad_out)
        acc = grad_acc[id(layer)]
        acc[0] += grad_w
        acc[1] += grad_b
    return grad_out


class FreqBlock:
    """Per-pilot-symbol interpolator: (n_p_f*2) -> hidden (n_p_f*3) -> (n_f*2)."""

    def __init__(self, config: FreqTimeConfig, rng):
        self.layers = [
            DenseLayer(config.n_p_f * 2, config.n_p_f * 3, "relu", rng),
            DenseLayer(config.n_p_f * 3, config.n_f * 2, "identity", rng),
        ]


class TimeBlock:
    """Per-subcarrier-group extender: (n_p_t*L*2) -> same -> (n_t*L*2)."""

    def __init__(self, config: FreqTimeConfig, rng):
        width = config.n_p_t * config.l_group * 2
        self.layers = [
            DenseLayer(width, width, "relu", rng),
            DenseLayer(width, config.n_t * config.l_group * 2, "identity", rng),
        ]


class AttentionBlock:
    """SNR-conditioned sigmoid gate applied to one frequency block's output.

    Context = concat(SNR embedding (1 -> 50 relu -> 10), flattened feature
    map); the factor net (-> n_f relu -> n_f*2 sigmoid) predicts a scaling
    in (0, 1) per feature entry.
    """

    def __init__(self, config: FreqTimeConfig, rng):
        feat = config.n_f * 2
        self.embed_layers = [
            DenseLayer(1, 50, "relu", rng),
            DenseLayer(50, 10, "identity", rng),
        ]
        self.factor_layers = [
            DenseLayer(10 + feat, config.n_f, "relu", rng),
            DenseLayer(config.n_f, feat, "sigmoid", rng),
        ]
        self.layers = self.embed_layers + self.factor_layers

    def forward(self, f_g: np.ndarray, snr_linear: np.ndarray):
        snr_linear = np.asarray(snr_linear, dtype=float).reshape(-1, 1)
        if snr_linear.shape[0] != f_g.shape[0]:
            raise ValueError("snr_linear batch size mismatch")
        if np.any(snr_linear <= 0) or not np.all(np.isfinite(snr_linear)):
            raise ValueError("snr_linear must be positive and finite")
        embed, embed_caches = _chain_forward(self.embed_layers, snr_linear)
        context = np.concatenate([embed, f_g], axis=1)
        scale, factor_caches = _chain_forward(self.factor_layers, context)
        return f_g * scale, (f_g, scale, embed_caches, factor_caches)

    def backward(self, cache, grad_out, grad_acc):
        f_g, scale, embed_caches, factor_caches = cache
        grad_fg = grad_out * scale
        grad_scale = grad_out * f_g
        grad_ctx = _chain_backward(self.factor_layers, factor_caches,
                                   grad_scale, grad_acc)
        n_embed = self.embed_layers[-1].out_dim
        grad_fg = grad_fg + grad_ctx[:, n_embed:]
        _chain_backward(self.embed_layers, embed_caches,
                        grad_ctx[:, :n_embed], grad_acc)
        return grad_fg


def attention_block_eval(block: AttentionBlock, f_g: np.ndarray,
                         snr_linear: float) -> np.ndarray:
    """Gate a single (1, n_f, 2) feature map; returns the same shape."""
    flat = np.asarray(f_g, dtype=float).reshape(1, -1)
    out, _ = block.forward(flat, np.asarray([snr_linear]))
    return out.reshape(np.asarray(f_g).shape)


class FreqTimeNet:
    """FreqTimeNet / AttenFreqTimeNet forward-backward implementation."""

    def __init__(self, config: FreqTimeConfig | None = None,
                 with_attention: bool = False, seed: int = 0):
        self.config = config or FreqTimeConfig()
        self.with_attention = with_attention
        rng = np.random.default_rng(seed)
        cfg = self.config

        n_unique_freq = 1 if cfg.share_freq_blocks else cfg.n_p_t
        self._unique_freq = [FreqBlock(cfg, rng) for _ in range(n_unique_freq)]
        self.freq_blocks = [self._unique_freq[0 if cfg.share_freq_blocks else p]
                            for p in range(cfg.n_p_t)]
        # Attention blocks always use separate parameters
        self._unique_atten = ([AttentionBlock(cfg, rng) for _ in range(cfg.n_p_t)]
                              if with_attention else [])
        self.atten_blocks = list(self._unique_atten)

        n_unique_time = 1 if cfg.share_time_blocks else cfg.n_groups
        self._unique_time = [TimeBlock(cfg, rng) for _ in range(n_unique_time)]
        self.time_blocks = [self._unique_time[0 if cfg.share_time_blocks else g]
                            for g in range(cfg.n_groups)]

    @property
    def variant(self) -> str:
        return "atten" if self.with_attention else "freqtime"

    def _unique_layers(self):
        layers = []
        for block in self._unique_freq + self._unique_atten + self._unique_time:
            layers.extend(block.layers)
        return layers

    def parameters(self) -> list[np.ndarray]:
        """Weight/bias arrays in declaration order; shared blocks once."""
        params = []
        for layer in self._unique_layers():
            params.append(layer.weights)
            params.append(layer.biases)
        return params

    def _check_obs(self, obs):
        cfg = self.config
        obs = np.asarray(obs, dtype=float)
        if obs.ndim == 3:
            obs = obs[None]
        if obs.shape[1:] != (cfg.n_p_t, cfg.n_p_f, 2):
            raise ValueError(
                f"observation shape {obs.shape[1:]} does not match "
                f"({cfg.n_p_t}, {cfg.n_p_f}, 2)")
        return obs

    def forward(self, obs: np.ndarray, snr_linear: np.ndarray | None = None):
        """Batched forward; returns ((B, n_t, n_f, 2), caches)."""
        cfg = self.config
        obs = self._check_obs(obs)
        batch = obs.shape[0]
        if self.with_attention:
            if snr_linear is None:
                raise ValueError("attention variant requires snr_linear")
            snr_linear = np.broadcast_to(
                np.asarray(snr_linear, dtype=float).reshape(-1), (batch,))

        freq_caches, atten_caches, feat_parts = [], [], []
        for p, block in enumerate(self.freq_blocks):
            x = obs[:, p].reshape(batch, cfg.n_p_f * 2)
            out, caches = _chain_forward(block.layers, x)
            freq_caches.append(caches)
            if self.with_attention:
                out, cache = self.atten_blocks[p].forward(out, snr_linear)
                atten_caches.append(cache)
            feat_parts.append(out.reshape(batch, 1, cfg.n_f, 2))
        feat = np.concatenate(feat_parts, axis=1)

        time_caches, out_parts = [], []
        width = cfg.n_p_t * cfg.l_group * 2
        for g, block in enumerate(self.time_blocks):
            x = feat[:, :, g * cfg.l_group:(g + 1) * cfg.l_group, :]
            out, caches = _chain_forward(block.layers,
                                         x.reshape(batch, width))
            time_caches.append(caches)
            out_parts.append(out.reshape(batch, cfg.n_t, cfg.l_group, 2))
        out = np.concatenate(out_parts, axis=2)
        return out, (batch, freq_caches, atten_caches, time_caches)

    def predict(self, obs: np.ndarray,
                snr_linear: np.ndarray | None = None) -> np.ndarray:
        out, _ = self.forward(obs, snr_linear)
        return out

    def backward(self, caches, grad_out: np.ndarray) -> list[np.ndarray]:
        """Gradients wrt parameters(), accumulated over shared applications."""
        cfg = self.config
        batch, freq_caches, atten_caches, time_caches = caches
        grad_out = np.asarray(grad_out, dtype=float)
        if grad_out.shape != (batch, cfg.n_t, cfg.n_f, 2):
            raise ValueError("output gradient shape mismatch")

        grad_acc = {id(layer): [np.zeros_like(layer.weights),
                                np.zeros_like(layer.biases)]
                    for layer in self._unique_layers()}

        width = cfg.n_p_t * cfg.l_group * 2
        grad_feat = np.zeros((batch, cfg.n_p_t, cfg.n_f, 2))
        for g, block in enumerate(self.time_blocks):
            go = grad_out[:, :, g * cfg.l_group:(g + 1) * cfg.l_group, :]
            gx = _chain_backward(block.layers, time_caches[g],
                                 go.reshape(batch, -1), grad_acc)
            grad_feat[:, :, g * cfg.l_group:(g + 1) * cfg.l_group, :] = \
                gx.reshape(batch, cfg.n_p_t, cfg.l_group, 2)

        for p, block in enumerate(self.freq_blocks):
            gfg = grad_feat[:, p].reshape(batch, cfg.n_f * 2)
            if self.with_attention:
                gfg = self.atten_blocks[p].backward(atten_caches[p], gfg,
                                                    grad_acc)
            _chain_backward(block.layers, freq_caches[p], gfg, grad_acc)

        grads = []
        for layer in self._unique_layers():
            grads.extend(grad_acc[id(layer)])
        return grads


def complexity_report(net: FreqTimeNet) -> dict:
    """Parameter and FLOP totals with per-block-type subtotals.

    FLOPs count 2 per multiply-accumulate in every dense application
    (shared blocks counted once per application; biases and activations
    excluded).
    """
    cfg = net.config
    per_freq = count_params(net._unique_freq[0].layers)
    per_time = count_params(net._unique_time[0].layers)
    freq_params = per_freq * len(net._unique_freq)
    time_params = per_time * len(net._unique_time)
    atten_params = sum(count_params(b.layers) for b in net._unique_atten)
    per_atten = (count_params(net._unique_atten[0].layers)
                 if net._unique_atten else 0)

    applications = []
    for block in net.freq_blocks + net.atten_blocks + net.time_blocks:
        applications.extend(block.layers)
    flops_freq = count_flops(layer for b in net.freq_blocks for layer in b.layers)
    flops_atten = count_flops(layer for b in net.atten_blocks for layer in b.layers)
    flops_time = count_flops(layer for b in net.time_blocks for layer in b.layers)

    return {
        "variant": net.variant,
        "config": asdict(cfg),
        "params": {
            "total": freq_params + atten_params + time_params,
            "freq_blocks": freq_params,
            "time_blocks": time_params,
            "attention_blocks": atten_params,
            "per_freq_block": per_freq,
            "per_time_block": per_time,
            "per_attention_block": per_atten,
        },
        "flops": {
            "total": flops_freq + flops_atten + flops_time,
            "freq_blocks": flops_freq,
            "time_blocks": flops_time,
            "attention_blocks": flops_atten,
            "convention": "2 flops per multiply-accumulate, dense matmuls "
                          "only, shared blocks counted per application",
        },
    }


def save_model(net: FreqTimeNet, path) -> None:
    descriptor = {
        "kind": "freqtimenet-estimator",
        "variant": net.variant,
        "config": asdict(net.config),
    }
    save_checkpoint(path, descriptor, net.parameters())


def load_model(path) -> FreqTimeNet:
    descriptor, params = load_checkpoint(path)
    if descriptor.get("kind") != "freqtimenet-estimator":
        raise ValueError("checkpoint does not contain an estimator model")
    net = FreqTimeNet(FreqTimeConfig(**descriptor["config"]),
                      with_attention=descriptor["variant"] == "atten")
    targets = net.parameters()
    if len(targets) != len(params):
        raise ValueError("checkpoint tensor count mismatch")
    for tgt, src in zip(targets, params):
        if tgt.shape != src.shape:
            raise ValueError("checkpoint tensor shape mismatch")
        tgt[...] = src
    return net
