"""Flat key=value configuration: schema, parsing, canonical dump, digest.

One namespace covers every stage (descriptors, augmentation, embeddings,
model, loss, training) so a single file pins a whole run. Precedence is
defaults < config file < explicit overrides; the canonical dump (sorted
keys) is what gets digested and embedded into checkpoints and manifests.
"""

from __future__ import annotations

import hashlib

from .errors import ConfigError


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_int_tuple(text: str) -> tuple[int, ...]:
    parts = [p.strip() for p in str(text).split(",") if p.strip()]
    if not parts:
        raise ValueError("empty list")
    return tuple(int(p) for p in parts)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


# key -> (parser, default)
SCHEMA: dict[str, tuple] = {
    "descriptors.cksaagp_max_gap": (int, 3),
    "descriptors.distancepair_max_distance": (int, 2),
    "descriptors.paac_lambda": (int, 2),
    "descriptors.paac_weight": (float, 0.05),
    "descriptors.qso_nlag": (int, 2),
    "descriptors.qso_weight": (float, 0.1),
    "descriptors.binary_pad_len": (int, 100),
    "augment.n_segments": (int, 3),
    "augment.n_steps": (int, 2),
    "augment.p_insert": (float, 0.1),
    "augment.p_delete": (float, 0.1),
    "augment.min_len_after": (int, 5),
    "embed.dim": (int, 32),
    "embed.seed": (int, 0),
    "model.conv_kernels": (int, 64),
    "model.conv_width": (int, 3),
    "model.lstm_hidden": (int, 64),
    "model.attention_dim": (int, 32),
    "model.gate_hidden": (int, 32),
    "model.mlp_hidden": (_parse_int_tuple, (128,)),
    "model.n_classes": (int, 2),
    "model.dropout": (float, 0.2),
    "loss.lam_contrastive": (float, 0.5),
    "loss.lam_consistency": (float, 0.2),
    "loss.gamma": (float, 2.0),
    "loss.tau_init": (float, 0.1),
    "loss.tau_sample": (float, 0.1),
    "loss.k_hard": (int, 8),
    "loss.q_pos_capacity": (int, 512),
    "loss.q_neg_capacity": (int, 512),
    "train.lr": (float, 1.2e-4),
    "train.weight_decay": (float, 1e-2),
    "train.warmup_epochs": (int, 5),
    "train.max_epochs": (int, 100),
    "train.batch_size": (int, 32),
    "train.accumulation_steps": (int, 2),
    "train.patience": (int, 10),
    "train.seed": (int, 0),
    "train.stage": (str, "pretrain"),
    "train.val_fraction": (float, 0.1),
    "train.lr_min_ratio": (float, 0.01),
    "train.val_metric": (str, "mcc"),
}

# Second-stage overrides (applied when fine-tuning unless the user sets
# the keys explicitly).
FINETUNE_OVERRIDES = {
    "train.lr": 8.0e-5,
    "train.weight_decay": 0.0,
    "train.warmup_epochs": 0,
    "train.stage": "finetune",
}


def defaults() -> dict:
    return {key: default for key, (_, default) in SCHEMA.items()}


def coerce(key: str, raw) -> object:
    if key not in SCHEMA:
        raise ConfigError(f"unknown config key {key!r}")
    parser, _ = SCHEMA[key]
    if not isinstance(raw, str):
        return raw
    try:
        return parser(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from exc


def parse_config_text(text: str) -> dict:
    """Parse key = value lines; '#' starts a comment; keys must be known."""
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line or line.startswith("["):
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip()
        out[key] = coerce(key, value.strip())
    return out


def merge(*layers: dict) -> dict:
    """Later layers override earlier ones; result covers the full schema."""
    cfg = defaults()
    for layer in layers:
        for key, value in layer.items():
            cfg[key] = coerce(key, value)
    return cfg


def dump_config(cfg: dict) -> str:
    """Canonical text: every schema key, sorted, one per line."""
    unknown = set(cfg) - set(SCHEMA)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    lines = []
    for key in sorted(SCHEMA):
        value = cfg.get(key, SCHEMA[key][1])
        lines.append(f"{key} = {_fmt(value)}")
    return "\n".join(lines) + "\n"


def config_digest(cfg: dict) -> str:
    return hashlib.sha256(dump_config(cfg).encode("utf-8")).hexdigest()


def section(cfg: dict, prefix: str) -> dict:
    """Fields of one namespace, keyed by bare name."""
    out = {}
    full = merge(cfg)
    for key, value in full.items():
        head, _, field = key.partition(".")
        if head == prefix:
            out[field] = value
    if not out:
        raise ConfigError(f"no config section {prefix!r}")
    return out
