"""Two-stage training: optimizer, schedule, loop, checkpointing, TTA.

Stage 1 pretrains on the broad binary task with the composite objective;
stage 2 reloads a checkpoint, re-initializes only the classifier head,
and fine-tunes end-to-end with the second-stage hyperparameters. Both
stages share one inner loop.

Determinism: every stochastic choice (batch order, augmentation, dropout,
negative mining) draws from its own generator seeded from the config
seed, and the loop is single-threaded, so same-seed runs are bitwise
reproducible.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import checkpoint as ckpt_io
from . import config as config_mod
from .augment import AugmentConfig, augment, tta_batch
from .autodiff import Tensor, backward, parameter, zero_grad
from .descriptors import DescriptorConfig, encode_all, encode_dim
from .embedstore import HashEmbeddingProvider
from .errors import CheckpointError, ConfigError, NonFiniteError
from .metrics import classification_metrics, confusion_from_scores
from .network import (FusionModel, ModelConfig, forward, fuse_inputs,
                      init_params, mlp_param_names)
from .objective import (LossWeights, OhemState, consistency_loss,
                        contrastive_loss, focal_loss,
                        inverse_frequency_alpha, mine_hard_negatives,
                        total_loss, update_queues)
from .sequences import LabeledDataset, Peptide, split_train_test

log = logging.getLogger(__name__)

BETA1, BETA2, ADAM_EPS = 0.9, 0.999, 1e-8

# scale on the re-initialized classifier head at the stage-2 handoff
HEAD_RESCALE = 0.1


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer and loop hyperparameters for one stage."""

    lr: float = 1.2e-4
    weight_decay: float = 1e-2
    warmup_epochs: int = 5
    max_epochs: int = 100
    batch_size: int = 32
    accumulation_steps: int = 2
    patience: int = 10
    seed: int = 0
    stage: str = "pretrain"
    val_fraction: float = 0.1
    lr_min_ratio: float = 0.01
    val_metric: str = "mcc"

    def __post_init__(self):
        if self.lr <= 0:
            raise ConfigError("lr must be > 0")
        if self.weight_decay < 0:
            raise ConfigError("weight_decay must be >= 0")
        if self.warmup_epochs < 0 or self.max_epochs < 1:
            raise ConfigError("epoch counts out of range")
        if self.batch_size < 1 or self.accumulation_steps < 1:
            raise ConfigError("batch settings must be >= 1")
        if self.patience < 1:
            raise ConfigError("patience must be >= 1")
        if self.stage not in ("pretrain", "finetune"):
            raise ConfigError(f"unknown stage {self.stage!r}")
        if not 0.0 < self.val_fraction < 1.0:
            raise ConfigError("val_fraction must be in (0, 1)")
        if not 0.0 < self.lr_min_ratio <= 1.0:
            raise ConfigError("lr_min_ratio must be in (0, 1]")
        if self.val_metric not in ("mcc", "acc"):
            raise ConfigError("val_metric must be 'mcc' or 'acc'")


@dataclass
class AdamState:
    """First/second moments plus the shared step counter."""

    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0

    @classmethod
    def for_params(cls, params: dict[str, Tensor]) -> "AdamState":
        return cls(m={k: np.zeros_like(t.data) for k, t in params.items()},
                   v={k: np.zeros_like(t.data) for k, t in params.items()})


def adamw_step(params: dict[str, Tensor], grads: dict[str, np.ndarray],
               state: AdamState, lr_t: float, weight_decay: float) -> bool:
    """Decoupled-decay Adam update; returns False (skipping the step and
    leaving all state untouched) when any gradient is non-finite."""
    for name in params:
        if not np.all(np.isfinite(grads[name])):
            log.warning("adamw: non-finite gradient in %s, step skipped",
                        name)
            return False
    state.step += 1
    bc1 = 1.0 - BETA1 ** state.step
    bc2 = 1.0 - BETA2 ** state.step
    for name, p in params.items():
        g = grads[name]
        state.m[name] = BETA1 * state.m[name] + (1.0 - BETA1) * g
        state.v[name] = BETA2 * state.v[name] + (1.0 - BETA2) * g * g
        if weight_decay and name != "loss/log_tau":
            # decay is off for the temperature: it is a scale, not a weight
            p.data *= 1.0 - lr_t * weight_decay
        m_hat = state.m[name] / bc1
        v_hat = state.v[name] / bc2
        p.data -= lr_t * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
    return True


def lr_schedule(epoch: int, cfg: TrainConfig) -> float:
    """Linear warmup to lr, then cosine annealing to lr * lr_min_ratio."""
    if epoch < 0:
        raise ConfigError("epoch must be >= 0")
    lr_min = cfg.lr * cfg.lr_min_ratio
    if cfg.warmup_epochs > 0 and epoch < cfg.warmup_epochs:
        return cfg.lr * (epoch + 1) / cfg.warmup_epochs
    span = max(cfg.max_epochs - cfg.warmup_epochs, 1)
    progress = min((epoch - cfg.warmup_epochs) / span, 1.0)
    return lr_min + 0.5 * (cfg.lr - lr_min) * (1.0 + math.cos(
        math.pi * progress))


@dataclass
class TrainSetup:
    """Everything the loop needs besides data and stage hyperparameters."""

    model: ModelConfig
    loss: LossWeights
    augment_cfg: AugmentConfig
    descriptors: DescriptorConfig
    embeddings: object
    pair_embeddings: object
    config_text: str


def build_setup(cfg: dict | None = None, embeddings=None) -> TrainSetup:
    """Construct a TrainSetup from a flat config mapping.

    ``embeddings`` may be any provider (store- or hash-backed); omitted,
    a hash provider is built from the embed.* keys. The pair channel used
    for contrastive/consistency comparisons is always hash-backed so both
    members of a pair come from the same generator.
    """
    full = config_mod.merge(cfg or {})
    descriptors = DescriptorConfig(**config_mod.section(full, "descriptors"))
    augment_cfg = AugmentConfig(**config_mod.section(full, "augment"))
    loss = LossWeights(**config_mod.section(full, "loss"))
    if embeddings is None:
        embeddings = HashEmbeddingProvider(full["embed.dim"],
                                           full["embed.seed"])
    full["embed.dim"] = embeddings.d_e
    if isinstance(embeddings, HashEmbeddingProvider):
        pair = embeddings
        full["embed.seed"] = embeddings.seed
    else:
        pair = HashEmbeddingProvider(embeddings.d_e, full["embed.seed"])
    model = ModelConfig(embed_dim=embeddings.d_e,
                        descriptor_dim=encode_dim(descriptors),
                        **config_mod.section(full, "model"))
    return TrainSetup(model=model, loss=loss, augment_cfg=augment_cfg,
                      descriptors=descriptors, embeddings=embeddings,
                      pair_embeddings=pair,
                      config_text=config_mod.dump_config(full))


def train_config_from(cfg: dict | None = None) -> TrainConfig:
    full = config_mod.merge(cfg or {})
    return TrainConfig(**config_mod.section(full, "train"))


@dataclass
class TrainResult:
    checkpoint: ckpt_io.Checkpoint
    history: list[dict]


def _np_cos(x: np.ndarray, y: np.ndarray) -> float:
    d = np.linalg.norm(x) * np.linalg.norm(y)
    return float(np.dot(x, y) / d) if d else 0.0


class _Cache:
    """Per-peptide embedding/descriptor memo for the originals."""

    def __init__(self, setup: TrainSetup):
        self.setup = setup
        self.emb: dict[str, np.ndarray] = {}
        self.pair_emb: dict[str, np.ndarray] = {}
        self.feat: dict[str, np.ndarray] = {}

    def features(self, p: Peptide) -> np.ndarray:
        if p.id not in self.feat:
            self.feat[p.id] = encode_all(p, self.setup.descriptors).values
        return self.feat[p.id]

    def embedding(self, p: Peptide) -> np.ndarray:
        if p.id not in self.emb:
            self.emb[p.id] = self.setup.embeddings.get(p)
        return self.emb[p.id]

    def pair_embedding(self, p: Peptide) -> np.ndarray:
        if self.setup.pair_embeddings is self.setup.embeddings:
            return self.embedding(p)
        if p.id not in self.pair_emb:
            self.pair_emb[p.id] = self.setup.pair_embeddings.get(p)
        return self.pair_emb[p.id]


def _evaluate(params: dict[str, Tensor], setup: TrainSetup,
              ds: LabeledDataset, cache: _Cache) -> dict[str, float]:
    scores = []
    for p, _ in ds.records:
        fused = fuse_inputs(cache.embedding(p), cache.features(p))
        res = forward(fused, params, setup.model, train=False)
        scores.append(float(res.probs.data[1]))
    labels = ds.require_labels()
    counts = confusion_from_scores(np.array(scores), np.array(labels))
    m = classification_metrics(counts)
    return {"acc": m["acc"], "mcc": m["mcc"]}


def _queues_to_arrays(state: OhemState, dim: int
                      ) -> tuple[np.ndarray, np.ndarray]:
    def pack(q):
        return (np.stack(list(q)) if len(q)
                else np.zeros((0, dim)))
    return pack(state.q_pos), pack(state.q_neg)


def _snapshot(params, adam, state, epoch, metric, dim):
    q_pos, q_neg = _queues_to_arrays(state, dim)
    return {
        "params": {k: t.data.copy() for k, t in params.items()},
        "adam_m": {k: v.copy() for k, v in adam.m.items()},
        "adam_v": {k: v.copy() for k, v in adam.v.items()},
        "adam_step": adam.step,
        "queue_pos": q_pos,
        "queue_neg": q_neg,
        "epoch": epoch,
        "metric": metric,
    }


def _checkpoint_from(snapshot: dict, setup: TrainSetup,
                     stage: str) -> ckpt_io.Checkpoint:
    tensors: dict[str, np.ndarray] = {}
    for name in sorted(snapshot["params"]):
        tensors[f"param/{name}"] = snapshot["params"][name]
    for name in sorted(snapshot["adam_m"]):
        tensors[f"adam/m/{name}"] = snapshot["adam_m"][name]
        tensors[f"adam/v/{name}"] = snapshot["adam_v"][name]
    tensors["adam/step"] = np.int64(snapshot["adam_step"])
    tensors["queue/pos"] = snapshot["queue_pos"]
    tensors["queue/neg"] = snapshot["queue_neg"]
    return ckpt_io.Checkpoint(
        config_text=setup.config_text,
        epoch=snapshot["epoch"],
        best_metric=snapshot["metric"],
        stage=stage,
        tensors=tensors,
    )


def _run_training(train_ds: LabeledDataset, val_ds: LabeledDataset,
                  cfg: TrainConfig, setup: TrainSetup,
                  params: dict[str, Tensor], state: OhemState,
                  adam: AdamState) -> TrainResult:
    labels_all = train_ds.require_labels()
    counts = train_ds.class_counts()
    if len(counts) < 2:
        raise ConfigError("training data must contain both classes")
    alpha = inverse_frequency_alpha(labels_all, setup.model.n_classes)
    cache = _Cache(setup)
    reuse_pair = setup.pair_embeddings is setup.embeddings

    rng_order = np.random.default_rng([cfg.seed, 101])
    rng_aug = np.random.default_rng([cfg.seed, 202])
    rng_drop = np.random.default_rng([cfg.seed, 303])
    rng_mine = np.random.default_rng([cfg.seed, 404])

    history: list[dict] = []
    best: dict | None = None
    best_metric = -math.inf
    stall = 0
    dim = 2 * setup.model.lstm_hidden
    records = train_ds.records

    for epoch in range(cfg.max_epochs):
        lr_t = lr_schedule(epoch, cfg)
        order = np.arange(len(records))
        rng_order.shuffle(order)
        batches = [order[i:i + cfg.batch_size]
                   for i in range(0, len(order), cfg.batch_size)]
        sums = {"con": 0.0, "cls": 0.0, "cons": 0.0, "total": 0.0}
        pos_sims: list[float] = []
        neg_sims: list[float] = []
        n_micro = 0
        skipped = 0
        bad_streak = 0
        step = cfg.accumulation_steps
        for g0 in range(0, len(batches), step):
            group = batches[g0:g0 + step]
            pending_emb: list[np.ndarray] = []
            pending_lab: list[int] = []
            for batch in group:
                tau = params["loss/log_tau"].exp()
                negatives = mine_hard_negatives(state, setup.loss.k_hard,
                                                rng_mine)
                try:
                    probs_cls: list[Tensor] = []
                    labels: list[int] = []
                    anchors: list[Tensor] = []
                    anchor_probs: list[Tensor] = []
                    aug_embs: list[Tensor] = []
                    aug_probs: list[Tensor] = []
                    for idx in batch:
                        pep, label = records[idx]
                        fused = fuse_inputs(cache.embedding(pep),
                                            cache.features(pep))
                        res = forward(fused, params, setup.model,
                                      train=True, rng=rng_drop)
                        probs_cls.append(res.probs)
                        labels.append(label)
                        if reuse_pair:
                            pres = res
                        else:
                            pres = forward(
                                fuse_inputs(cache.pair_embedding(pep),
                                            cache.features(pep)),
                                params, setup.model, train=True,
                                rng=rng_drop)
                        pending_emb.append(pres.e_final.detach())
                        pending_lab.append(label)
                        if label == 1:
                            variant = augment(pep, setup.augment_cfg,
                                              rng_aug)
                            vfused = fuse_inputs(
                                setup.pair_embeddings.get(variant),
                                encode_all(variant,
                                           setup.descriptors).values)
                            vres = forward(vfused, params, setup.model,
                                           train=True, rng=rng_drop)
                            anchors.append(pres.e_final)
                            anchor_probs.append(pres.probs)
                            aug_embs.append(vres.e_final)
                            aug_probs.append(vres.probs)
                    l_cls = focal_loss(probs_cls, labels,
                                       setup.loss.gamma, alpha)
                    if anchors and negatives:
                        l_con = contrastive_loss(
                            anchors, aug_embs,
                            [negatives] * len(anchors), tau)
                    else:
                        l_con = Tensor(0.0)
                    if anchors:
                        cons_terms = [consistency_loss(pa, qa) for pa, qa
                                      in zip(anchor_probs, aug_probs)]
                        l_cons = sum(cons_terms[1:], cons_terms[0]) * (
                            1.0 / len(cons_terms))
                    else:
                        l_cons = Tensor(0.0)
                    loss = total_loss(l_con, l_cls, l_cons, setup.loss)
                    backward(loss * (1.0 / cfg.accumulation_steps))
                except NonFiniteError as exc:
                    bad_streak += 1
                    log.warning("non-finite loss (%s), micro-batch dropped",
                                exc)
                    if bad_streak >= 2:
                        raise RuntimeError(
                            "training aborted: non-finite loss in two "
                            f"consecutive micro-batches (epoch {epoch + 1}, "
                            f"last failure: {exc})") from exc
                    continue
                bad_streak = 0
                n_micro += 1
                sums["con"] += float(l_con.data)
                sums["cls"] += float(l_cls.data)
                sums["cons"] += float(l_cons.data)
                sums["total"] += float(loss.data)
                for a, v in zip(anchors, aug_embs):
                    pos_sims.append(_np_cos(a.data, v.data))
                    for n in negatives:
                        neg_sims.append(_np_cos(a.data, n))
            grads = {k: (t.grad if t.grad is not None
                         else np.zeros_like(t.data))
                     for k, t in params.items()}
            if not adamw_step(params, grads, adam, lr_t, cfg.weight_decay):
                skipped += 1
            zero_grad(params)
            update_queues(state, pending_emb, pending_lab)

        val = _evaluate(params, setup, val_ds, cache)
        denom = max(n_micro, 1)
        history.append({
            "epoch": epoch + 1,
            "lr": lr_t,
            "loss_total": sums["total"] / denom,
            "loss_contrastive": sums["con"] / denom,
            "loss_classification": sums["cls"] / denom,
            "loss_consistency": sums["cons"] / denom,
            "pos_pair_sim": (float(np.mean(pos_sims))
                             if pos_sims else 0.0),
            "hard_neg_sim": (float(np.mean(neg_sims))
                             if neg_sims else 0.0),
            "tau": float(params["loss/log_tau"].exp().data),
            "val_acc": val["acc"],
            "val_mcc": val["mcc"],
            "skipped_steps": skipped,
        })
        metric = val[cfg.val_metric]
        if metric > best_metric:
            best_metric = metric
            best = _snapshot(params, adam, state, epoch + 1, metric, dim)
            stall = 0
        else:
            stall += 1
            if stall >= cfg.patience:
                break
    if best is None:
        raise RuntimeError("training produced no evaluable epoch")
    return TrainResult(_checkpoint_from(best, setup, cfg.stage), history)


def _carve_validation(train_ds: LabeledDataset, val_ds, cfg: TrainConfig
                      ) -> tuple[LabeledDataset, LabeledDataset]:
    if val_ds is not None:
        return train_ds, val_ds
    return split_train_test(train_ds, 1.0 - cfg.val_fraction,
                            seed=cfg.seed + 7919)


def train_stage1(train_ds: LabeledDataset, val_ds: LabeledDataset | None,
                 cfg: TrainConfig, setup: TrainSetup) -> TrainResult:
    """Pretrain from scratch; returns the best-validation checkpoint."""
    if cfg.stage != "pretrain":
        raise ConfigError("train_stage1 requires stage='pretrain'")
    train_part, val_part = _carve_validation(train_ds, val_ds, cfg)
    params = init_params(setup.model, cfg.seed)
    params["loss/log_tau"] = parameter(math.log(setup.loss.tau_init))
    state = OhemState(setup.loss.q_pos_capacity,
                      setup.loss.q_neg_capacity,
                      setup.loss.tau_sample)
    adam = AdamState.for_params(params)
    return _run_training(train_part, val_part, cfg, setup, params, state,
                         adam)


def finetune_stage2(base: ckpt_io.Checkpoint, subclass_ds: LabeledDataset,
                    cfg: TrainConfig, embeddings=None,
                    val_ds: LabeledDataset | None = None) -> TrainResult:
    """Fine-tune from a stage-1 checkpoint with a fresh classifier head."""
    if base.stage != "pretrain":
        raise CheckpointError("finetune needs a stage-1 (pretrain) base")
    if cfg.stage != "finetune":
        raise ConfigError("finetune_stage2 requires stage='finetune'")
    base_cfg = config_mod.parse_config_text(base.config_text)
    for key, value in {f"train.{k}": v for k, v in
                       (("lr", cfg.lr), ("weight_decay", cfg.weight_decay),
                        ("warmup_epochs", cfg.warmup_epochs),
                        ("max_epochs", cfg.max_epochs),
                        ("batch_size", cfg.batch_size),
                        ("accumulation_steps", cfg.accumulation_steps),
                        ("patience", cfg.patience), ("seed", cfg.seed),
                        ("stage", cfg.stage),
                        ("val_fraction", cfg.val_fraction),
                        ("lr_min_ratio", cfg.lr_min_ratio),
                        ("val_metric", cfg.val_metric))}.items():
        base_cfg[key] = value
    setup = build_setup(base_cfg, embeddings=embeddings)
    base_params = base.params()
    fresh = init_params(setup.model, cfg.seed)
    if set(base_params) != set(fresh) | {"loss/log_tau"}:
        raise CheckpointError(
            "checkpoint parameters do not match the configured architecture")
    for name, arr in base_params.items():
        if name != "loss/log_tau" and arr.shape != fresh[name].shape:
            raise CheckpointError(
                f"checkpoint tensor {name} has shape {arr.shape}, "
                f"architecture expects {fresh[name].shape}")
    head = set(mlp_param_names(setup.model))
    params: dict[str, Tensor] = {}
    for name in base_params:
        if name in head:
            # damp the fresh head 10x: at full Xavier scale an unlucky
            # draw emits confidently wrong logits on the warm features
            # and the gradient churn destroys the pretrained backbone
            params[name] = parameter(fresh[name].data * HEAD_RESCALE)
        else:
            # copy: the optimizer updates in place and must not write
            # through to the caller's checkpoint arrays
            params[name] = parameter(base_params[name].copy())
    train_part, val_part = _carve_validation(subclass_ds, val_ds, cfg)
    state = OhemState(setup.loss.q_pos_capacity,
                      setup.loss.q_neg_capacity,
                      setup.loss.tau_sample)
    adam = AdamState.for_params(params)
    return _run_training(train_part, val_part, cfg, setup, params, state,
                         adam)


@dataclass
class LoadedModel:
    """A checkpoint rebuilt into a runnable model."""

    model: FusionModel
    descriptors: DescriptorConfig
    full_config: dict
    stage: str
    epoch: int
    best_metric: float


def load_model(ckpt: ckpt_io.Checkpoint) -> LoadedModel:
    full = config_mod.merge(config_mod.parse_config_text(ckpt.config_text))
    descriptors = DescriptorConfig(**config_mod.section(full, "descriptors"))
    model_cfg = ModelConfig(embed_dim=full["embed.dim"],
                            descriptor_dim=encode_dim(descriptors),
                            **config_mod.section(full, "model"))
    params = {name: parameter(arr)
              for name, arr in ckpt.params().items()}
    if not params:
        raise CheckpointError("checkpoint holds no parameters")
    model = FusionModel(config=model_cfg, params=params)
    return LoadedModel(model=model, descriptors=descriptors,
                       full_config=full, stage=ckpt.stage,
                       epoch=ckpt.epoch, best_metric=ckpt.best_metric)


def default_provider(lm: LoadedModel) -> HashEmbeddingProvider:
    return HashEmbeddingProvider(lm.full_config["embed.dim"],
                                 lm.full_config["embed.seed"])


def predict_detail(lm: LoadedModel, p: Peptide, provider):
    """Eval-mode forward with attention/gate values exposed."""
    feat = encode_all(p, lm.descriptors).values
    return lm.model.forward(provider.get(p), feat, train=False)


def predict_probs(lm: LoadedModel, peptides: list[Peptide],
                  provider) -> np.ndarray:
    return np.stack([predict_detail(lm, p, provider).probs.data
                     for p in peptides])


def predict_tta(lm: LoadedModel, p: Peptide, provider, n_aug: int,
                rng: np.random.Generator) -> np.ndarray:
    """Mean class distribution over the sample and its TTA variants."""
    variants = tta_batch(p, n_aug, rng)
    probs = [predict_detail(lm, v, provider).probs.data for v in variants]
    return np.mean(np.stack(probs), axis=0)
