"""Gated two-branch sequence classifier.

Per-residue embeddings are fused with a broadcast descriptor vector; a
convolutional branch and a bidirectional LSTM branch each end in additive
attention pooling; a learned scalar gate blends the two pooled vectors
into the final embedding that feeds a small MLP classifier.

Sequences are processed one sample at a time (no padding inside the
network); batching is a loop owned by the trainer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor, concat, conv1d, parameter
from .errors import ConfigError

GATE_EPS = 1e-12


@dataclass(frozen=True)
class ModelConfig:
    """Architecture dimensions; all configurable, defaults sized for CPU."""

    embed_dim: int = 32
    descriptor_dim: int = 3914
    conv_kernels: int = 64
    conv_width: int = 3
    lstm_hidden: int = 64
    attention_dim: int = 32
    gate_hidden: int = 32
    mlp_hidden: tuple[int, ...] = (128,)
    n_classes: int = 2
    dropout: float = 0.2

    def __post_init__(self):
        dims = (self.embed_dim, self.descriptor_dim, self.conv_kernels,
                self.conv_width, self.lstm_hidden, self.attention_dim,
                self.gate_hidden, self.n_classes, *self.mlp_hidden)
        if any(d < 1 for d in dims):
            raise ConfigError("all model dimensions must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must be in [0, 1)")
        if not self.mlp_hidden:
            raise ConfigError("mlp_hidden must name at least one layer")


@dataclass
class ForwardResult:
    """Everything a single-sample forward exposes."""

    logits: Tensor
    probs: Tensor
    e_final: Tensor
    gate: Tensor
    attn_cnn: Tensor
    attn_bilstm: Tensor


def _xavier(rng: np.random.Generator, shape: tuple[int, ...],
            fan_in: int, fan_out: int) -> Tensor:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return parameter(rng.uniform(-limit, limit, size=shape))


def init_params(cfg: ModelConfig, seed: int = 0) -> dict[str, Tensor]:
    """Fresh parameter set; a flat dict keyed by layer path."""
    rng = np.random.default_rng([seed, 11])
    d_in = cfg.embed_dim + cfg.descriptor_dim
    d_h = cfg.lstm_hidden
    params: dict[str, Tensor] = {}

    params["conv/W"] = _xavier(
        rng, (cfg.conv_kernels, cfg.conv_width, d_in),
        cfg.conv_width * d_in, cfg.conv_kernels)
    params["conv/b"] = parameter(np.zeros(cfg.conv_kernels))

    for direction in ("fwd", "bwd"):
        for gate in ("f", "i", "c", "o"):
            params[f"lstm/{direction}/W_{gate}"] = _xavier(
                rng, (d_h, d_h + d_in), d_h + d_in, d_h)
            params[f"lstm/{direction}/b_{gate}"] = parameter(np.zeros(d_h))

    params["attn/cnn/W"] = _xavier(
        rng, (cfg.attention_dim, cfg.conv_kernels),
        cfg.conv_kernels, cfg.attention_dim)
    params["attn/cnn/u"] = _xavier(
        rng, (cfg.attention_dim,), cfg.attention_dim, 1)
    params["attn/bilstm/W"] = _xavier(
        rng, (cfg.attention_dim, 2 * d_h), 2 * d_h, cfg.attention_dim)
    params["attn/bilstm/u"] = _xavier(
        rng, (cfg.attention_dim,), cfg.attention_dim, 1)

    params["match/W"] = _xavier(
        rng, (2 * d_h, cfg.conv_kernels), cfg.conv_kernels, 2 * d_h)
    params["match/b"] = parameter(np.zeros(2 * d_h))

    gate_in = cfg.conv_kernels + 2 * d_h
    params["gate/W1"] = _xavier(
        rng, (cfg.gate_hidden, gate_in), gate_in, cfg.gate_hidden)
    params["gate/b1"] = parameter(np.zeros(cfg.gate_hidden))
    params["gate/w2"] = _xavier(rng, (cfg.gate_hidden,), cfg.gate_hidden, 1)
    params["gate/b2"] = parameter(0.0)

    widths = [2 * d_h, *cfg.mlp_hidden, cfg.n_classes]
    for i in range(len(widths) - 1):
        params[f"mlp/{i}/W"] = _xavier(
            rng, (widths[i + 1], widths[i]), widths[i], widths[i + 1])
        params[f"mlp/{i}/b"] = parameter(np.zeros(widths[i + 1]))
    return params


def mlp_param_names(cfg: ModelConfig) -> tuple[str, ...]:
    """Names of the classifier-head parameters (re-initialized on transfer)."""
    n_layers = len(cfg.mlp_hidden) + 1
    names = []
    for i in range(n_layers):
        names.extend([f"mlp/{i}/W", f"mlp/{i}/b"])
    return tuple(names)


def fuse_inputs(emb: np.ndarray, feat: np.ndarray) -> Tensor:
    """Rows: per-residue embedding ++ the (broadcast) descriptor vector."""
    emb = np.asarray(emb, dtype=float)
    feat = np.asarray(feat, dtype=float)
    if emb.ndim != 2 or feat.ndim != 1:
        raise ConfigError(
            f"fuse_inputs: need (L, d_e) and (d_f,), got {emb.shape} "
            f"and {feat.shape}")
    if emb.shape[0] < 1:
        raise ConfigError("fuse_inputs: empty sequence")
    tiled = np.broadcast_to(feat, (emb.shape[0], feat.shape[0]))
    return Tensor(np.concatenate([emb, tiled], axis=1))


def lstm_step(x_t: Tensor, h_prev: Tensor, c_prev: Tensor,
              params: dict[str, Tensor], prefix: str
              ) -> tuple[Tensor, Tensor]:
    """One LSTM cell update (forget/input/candidate/output gating)."""
    z = concat([h_prev, x_t], axis=0)
    f_t = (params[f"{prefix}/W_f"] @ z + params[f"{prefix}/b_f"]).sigmoid()
    i_t = (params[f"{prefix}/W_i"] @ z + params[f"{prefix}/b_i"]).sigmoid()
    c_hat = (params[f"{prefix}/W_c"] @ z + params[f"{prefix}/b_c"]).tanh()
    c_t = f_t * c_prev + i_t * c_hat
    o_t = (params[f"{prefix}/W_o"] @ z + params[f"{prefix}/b_o"]).sigmoid()
    h_t = o_t * c_t.tanh()
    return h_t, c_t


def bilstm(seq: Tensor, params: dict[str, Tensor], d_h: int) -> Tensor:
    """Concatenate forward and (re-reversed) backward hidden states."""
    length = seq.shape[0]

    def run(prefix: str, order):
        h = Tensor(np.zeros(d_h))
        c = Tensor(np.zeros(d_h))
        states = []
        for t in order:
            h, c = lstm_step(seq[t], h, c, params, prefix)
            states.append(h)
        return states

    fwd = run("lstm/fwd", range(length))
    bwd = run("lstm/bwd", range(length - 1, -1, -1))
    bwd.reverse()
    rows = [concat([fwd[t], bwd[t]], axis=0).reshape(1, 2 * d_h)
            for t in range(length)]
    return concat(rows, axis=0)


def _transpose(t: Tensor) -> Tensor:
    out = Tensor(t.data.T, _prev=(t,), _op="transpose")

    def back():
        if t.requires_grad:
            t.grad += out.grad.T
    out._backward = back
    return out


def attention_pool(seq: Tensor, w: Tensor, u: Tensor
                   ) -> tuple[Tensor, Tensor]:
    """Additive attention: weights softmax(u . tanh(W h_i)); returns
    (pooled vector, weights)."""
    scores = (seq @ _transpose(w)).tanh() @ u
    alpha = scores.softmax(axis=0)
    pooled = alpha @ seq
    return pooled, alpha


def gated_fusion(v_cnn: Tensor, v_bilstm: Tensor,
                 params: dict[str, Tensor]) -> tuple[Tensor, Tensor]:
    """Blend branches with a per-sample scalar gate in (0, 1)."""
    z = concat([v_cnn, v_bilstm], axis=0)
    hidden = (params["gate/W1"] @ z + params["gate/b1"]).tanh()
    lam = (params["gate/w2"] @ hidden + params["gate/b2"]).sigmoid()
    matched = params["match/W"] @ v_cnn + params["match/b"]
    e_final = lam * matched + (1.0 - lam) * v_bilstm
    return e_final, lam


def mlp_head(x: Tensor, params: dict[str, Tensor],
             cfg: ModelConfig) -> Tensor:
    out = x
    n_layers = len(cfg.mlp_hidden) + 1
    for i in range(n_layers):
        out = params[f"mlp/{i}/W"] @ out + params[f"mlp/{i}/b"]
        if i < n_layers - 1:
            out = out.relu()
    return out


def forward(fused: Tensor, params: dict[str, Tensor], cfg: ModelConfig,
            train: bool = False,
            rng: np.random.Generator | None = None) -> ForwardResult:
    """Full single-sample forward pass."""
    length = fused.shape[0]
    if length < cfg.conv_width:
        raise ConfigError(
            f"sequence length {length} shorter than conv width "
            f"{cfg.conv_width}")
    conv_out = conv1d(fused, params["conv/W"], params["conv/b"]).relu()
    v_cnn, attn_cnn = attention_pool(
        conv_out, params["attn/cnn/W"], params["attn/cnn/u"])
    lstm_out = bilstm(fused, params, cfg.lstm_hidden)
    v_bilstm, attn_bilstm = attention_pool(
        lstm_out, params["attn/bilstm/W"], params["attn/bilstm/u"])
    e_final, lam = gated_fusion(v_cnn, v_bilstm, params)
    if train and cfg.dropout > 0.0:
        if rng is None:
            raise ConfigError("training-mode forward needs an rng for dropout")
        keep = (rng.random(e_final.shape) >= cfg.dropout).astype(float)
        e_final = e_final * Tensor(keep / (1.0 - cfg.dropout))
    logits = mlp_head(e_final, params, cfg)
    probs = logits.softmax(axis=0)
    return ForwardResult(logits, probs, e_final, lam, attn_cnn, attn_bilstm)


@dataclass
class FusionModel:
    """Config + parameters, with convenience forward."""

    config: ModelConfig
    params: dict[str, Tensor] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if not self.params:
            self.params = init_params(self.config, self.seed)

    def forward(self, emb: np.ndarray, feat: np.ndarray,
                train: bool = False,
                rng: np.random.Generator | None = None) -> ForwardResult:
        if emb.shape[1] != self.config.embed_dim:
            raise ConfigError(
                f"embedding dim {emb.shape[1]} != config "
                f"{self.config.embed_dim}")
        if feat.shape[0] != self.config.descriptor_dim:
            raise ConfigError(
                f"descriptor dim {feat.shape[0]} != config "
                f"{self.config.descriptor_dim}")
        return forward(fuse_inputs(emb, feat), self.params, self.config,
                       train=train, rng=rng)
