"""Embedding backends.

``EsmEmbedder`` wraps a pretrained transformer checkpoint and extracts
last-layer hidden states. ``StubEmbedder`` is a deterministic offline
substitute with the same interface, selected through the model-name
grammar ``stub[:d_e[:seed]]``; it exists so pipelines and tests run
without model downloads.
"""

from __future__ import annotations

from typing import Protocol

import numpy as np

from .errors import InputError, ModelUnavailableError

DEFAULT_MODEL = "facebook/esm2_t30_150M_UR50D"
STUB_D_E = 640  # hidden width of the default checkpoint
# the default checkpoint is trained with a 1024-token context window;
# two positions go to the boundary tokens
DEFAULT_MAX_LEN = 1022


class Embedder(Protocol):
    d_e: int
    max_len: int

    def embed_batch(self, sequences: list[str]) -> list[np.ndarray]:
        """One float32 (len(seq), d_e) matrix per input sequence."""
        ...


def strip_boundary_rows(hidden: np.ndarray, seq_len: int) -> np.ndarray:
    """Drop the leading start token, the trailing end token, and any
    padding rows, leaving exactly one row per residue.

    ``hidden`` is the token-axis slice for one sequence, shape
    (n_tokens, d_e) with n_tokens >= seq_len + 2.
    """
    if hidden.ndim != 2 or hidden.shape[0] < seq_len + 2:
        raise InputError(
            f"got {hidden.shape[0]} token rows for a {seq_len}-residue "
            "sequence; expected at least length + 2")
    return hidden[1:1 + seq_len]


class StubEmbedder:
    """Deterministic pseudo-embeddings keyed by (seed, position, residue).

    Rows do not depend on batch composition, so any batch size yields
    bitwise-identical output.
    """

    def __init__(self, d_e: int = STUB_D_E, seed: int = 0,
                 max_len: int = DEFAULT_MAX_LEN):
        if d_e < 1:
            raise InputError("stub d_e must be >= 1")
        self.d_e = d_e
        self.seed = seed
        self.max_len = max_len

    def embed_batch(self, sequences: list[str]) -> list[np.ndarray]:
        out = []
        for seq in sequences:
            rows = [np.random.default_rng([self.seed, pos, ord(res)])
                    .standard_normal(self.d_e)
                    for pos, res in enumerate(seq)]
            out.append(np.stack(rows).astype("<f4"))
        return out


class EsmEmbedder:
    """Last-layer per-residue states from a transformers checkpoint."""

    def __init__(self, model_name: str = DEFAULT_MODEL,
                 device: str = "cpu"):
        try:
            import torch
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:
            raise ModelUnavailableError(
                "torch and transformers are required for real model "
                "export; install the [model] extra") from exc
        try:
            self._tokenizer = AutoTokenizer.from_pretrained(model_name)
            self._model = AutoModel.from_pretrained(model_name)
        except OSError as exc:
            raise ModelUnavailableError(
                f"could not load {model_name!r}: {exc}") from exc
        self._torch = torch
        self._model.eval()
        self._model.to(device)
        self._device = device
        self.d_e = int(self._model.config.hidden_size)
        # the position table carries a 2-slot padding offset on top of
        # the two boundary tokens, so usable residues = limit - 4
        limit = getattr(self._model.config, "max_position_embeddings", None)
        self.max_len = (limit - 4) if limit else DEFAULT_MAX_LEN

    def embed_batch(self, sequences: list[str]) -> list[np.ndarray]:
        enc = self._tokenizer(sequences, return_tensors="pt", padding=True)
        enc = {k: v.to(self._device) for k, v in enc.items()}
        with self._torch.no_grad():
            hidden = self._model(**enc).last_hidden_state
        hidden = hidden.cpu().numpy()
        return [strip_boundary_rows(hidden[i], len(seq)).astype("<f4")
                for i, seq in enumerate(sequences)]


def make_embedder(model: str, device: str = "cpu") -> Embedder:
    """Resolve a model name: ``stub[:d_e[:seed]]`` or a checkpoint id."""
    if model == "stub" or model.startswith("stub:"):
        parts = model.split(":")
        if len(parts) > 3:
            raise InputError(f"bad stub spec {model!r}")
        try:
            d_e = int(parts[1]) if len(parts) > 1 else STUB_D_E
            seed = int(parts[2]) if len(parts) > 2 else 0
        except ValueError as exc:
            raise InputError(f"bad stub spec {model!r}") from exc
        return StubEmbedder(d_e=d_e, seed=seed)
    return EsmEmbedder(model, device=device)
