"""Offline exporter: protein language-model embeddings to PEMB stores."""

__version__ = "0.1.0"
