"""Language-model probe speaking the colorlang wire formats.

Two operations: extract one embedding per description (EMBV1 output) and rank
the candidate labels of masked-comparative prompts (predictions JSONL).  A
deterministic hashed-token backend stands in for FastText-style static
vectors and works offline; a transformers backend covers real masked LMs.
"""

from .probe import ProbeConfig, extract_embeddings, fill_comparatives

__version__ = "0.1.0"

__all__ = ["ProbeConfig", "extract_embeddings", "fill_comparatives", "__version__"]
