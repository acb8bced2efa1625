"""Antiviral peptide classification toolkit.

Multimodal descriptor encoding, substitution-guided augmentation, a
CNN/BiLSTM gated-fusion network on a small numpy autodiff core, two-stage
training (pretrain, then subclass fine-tuning), test-time augmentation,
and residue composition statistics. Ships as a library plus the
``pepfuse`` batch CLI.
"""

__version__ = "0.1.0"

from .augment import AugmentConfig, augment, second_best, segment, tta_batch
from .checkpoint import Checkpoint
from .checkpoint import load as load_checkpoint
from .checkpoint import save as save_checkpoint
from .composition import (CompositionReport, composition_compare,
                          fold_change_matrix, welch_t_test)
from .config import (FINETUNE_OVERRIDES, config_digest, defaults,
                     dump_config, merge, parse_config_text)
from .descriptors import (DescriptorConfig, FeatureVector, encode_all,
                          encode_dataset, encode_dim)
from .embedstore import (HashEmbeddingProvider, Store,
                         StoreEmbeddingProvider, hash_embed, open_store,
                         sequence_digest, write_store)
from .errors import (CheckpointError, ConfigError, DigestMismatchError,
                     FastaError, MissingEmbeddingError, NonFiniteError,
                     PepfuseError, SequenceError, StoreError)
from .metrics import (auprc, auroc, classification_metrics,
                      confusion_from_scores, evaluate_scores)
from .network import FusionModel, ModelConfig, forward, init_params
from .objective import LossWeights, OhemState, total_loss
from .sequences import (ALPHABET, LabeledDataset, Peptide, parse_fasta,
                        split_train_test, write_fasta)
from .trainer import (LoadedModel, TrainConfig, TrainResult, build_setup,
                      finetune_stage2, load_model, predict_detail,
                      predict_probs, predict_tta, train_config_from,
                      train_stage1)

__all__ = [
    "__version__",
    "ALPHABET", "Peptide", "LabeledDataset", "parse_fasta", "write_fasta",
    "split_train_test",
    "DescriptorConfig", "FeatureVector", "encode_all", "encode_dataset",
    "encode_dim",
    "AugmentConfig", "augment", "segment", "second_best", "tta_batch",
    "ModelConfig", "FusionModel", "init_params", "forward",
    "LossWeights", "OhemState", "total_loss",
    "TrainConfig", "TrainResult", "build_setup", "train_config_from",
    "train_stage1", "finetune_stage2", "LoadedModel", "load_model",
    "predict_detail", "predict_probs", "predict_tta",
    "Checkpoint", "save_checkpoint", "load_checkpoint",
    "confusion_from_scores", "classification_metrics", "auroc", "auprc",
    "evaluate_scores",
    "Store", "open_store", "write_store", "sequence_digest", "hash_embed",
    "HashEmbeddingProvider", "StoreEmbeddingProvider",
    "CompositionReport", "composition_compare", "fold_change_matrix",
    "welch_t_test",
    "defaults", "merge", "parse_config_text", "dump_config",
    "config_digest", "FINETUNE_OVERRIDES",
    "PepfuseError", "SequenceError", "FastaError", "ConfigError",
    "StoreError", "MissingEmbeddingError", "DigestMismatchError",
    "CheckpointError", "NonFiniteError",
]
