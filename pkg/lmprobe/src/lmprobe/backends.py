"""Model backends: deterministic static vectors, and masked transformer LMs.

Every backend offers two primitives:

- ``encode(texts) -> (n, d) float32``: one pooled vector per text.
- ``score_fill(shots, query, mask_token, candidate) -> float``: a score for
  substituting ``candidate`` into the masked slot of ``query``; larger is
  better.  Scores are comparable within one prompt only.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _tokens(text: str) -> list[str]:
    return text.lower().split()


class StaticHashBackend:
    """FastText-style control: a fixed random vector per token, mean-pooled.

    The vector for a token is drawn from a generator seeded by the token's
    SHA-256, so every process on every machine produces identical embeddings
    with no model download.  Texts are scored against a prompt by cosine
    similarity between the candidate-filled query and the mean of the shots,
    which makes a verbatim-repeat query prefer the comparative its shots used.
    """

    def __init__(self, dim: int = 300):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = dim
        self._cache: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        vec = self._cache.get(token)
        if vec is None:
            seed = int.from_bytes(
                hashlib.sha256(token.encode("utf-8")).digest()[:8], "little"
            )
            vec = np.random.default_rng(seed).standard_normal(self.dim)
            self._cache[token] = vec
        return vec

    def _pool(self, text: str) -> np.ndarray:
        toks = _tokens(text)
        if not toks:
            return np.zeros(self.dim)
        return np.mean([self._token_vector(t) for t in toks], axis=0)

    def encode(self, texts: list[str]) -> np.ndarray:
        return np.stack([self._pool(t) for t in texts]).astype(np.float32)

    def score_fill(self, shots, query: str, mask_token: str, candidate: str) -> float:
        filled = self._pool(query.replace(mask_token, candidate.lower()))
        context = (
            np.mean([self._pool(s) for s in shots], axis=0)
            if shots
            else np.zeros(self.dim)
        )
        denom = np.linalg.norm(filled) * np.linalg.norm(context)
        if denom == 0.0:
            return 0.0
        return float(filled @ context / denom)


class TransformersBackend:
    """Masked-LM backend over ``transformers``; imported lazily so the static
    path has no torch dependency.

    Candidates are scored by mean log-probability across their subword mask
    positions; multi-token comparatives therefore stay comparable to
    single-token ones.  The model runs in eval mode with gradients off, so
    repeated runs are deterministic.
    """

    def __init__(self, model_name: str, layer: int = -1, device: str = "cpu"):
        import torch
        from transformers import AutoModelForMaskedLM, AutoTokenizer

        self._torch = torch
        self.tokenizer = AutoTokenizer.from_pretrained(model_name)
        self.model = AutoModelForMaskedLM.from_pretrained(
            model_name, output_hidden_states=True
        )
        self.model.to(device).eval()
        self.layer = layer
        self.device = device
        self.dim = int(self.model.config.hidden_size)
        self.max_tokens = int(self.tokenizer.model_max_length)

    def encode(self, texts: list[str]) -> np.ndarray:
        torch = self._torch
        out = []
        with torch.no_grad():
            for text in texts:
                enc = self.tokenizer(
                    text, return_tensors="pt", truncation=True
                ).to(self.device)
                hidden = self.model(**enc).hidden_states[self.layer][0]
                mask = enc["attention_mask"][0].bool()
                out.append(hidden[mask].mean(dim=0).cpu().numpy())
        return np.stack(out).astype(np.float32)

    def score_fill(self, shots, query: str, mask_token: str, candidate: str) -> float:
        torch = self._torch
        sub_ids = self.tokenizer(
            candidate.lower(), add_special_tokens=False
        )["input_ids"]
        if not sub_ids:
            return float("-inf")
        masks = " ".join([self.tokenizer.mask_token] * len(sub_ids))
        text = " ".join(shots + [query.replace(mask_token, masks)])
        enc = self.tokenizer(text, return_tensors="pt", truncation=True).to(
            self.device
        )
        mask_pos = (
            enc["input_ids"][0] == self.tokenizer.mask_token_id
        ).nonzero(as_tuple=True)[0]
        if mask_pos.numel() != len(sub_ids):
            return float("-inf")  # truncation swallowed the masked slot
        with torch.no_grad():
            logits = self.model(**enc).logits[0]
        logprobs = torch.log_softmax(logits[mask_pos], dim=-1)
        scores = [logprobs[i, tid].item() for i, tid in enumerate(sub_ids)]
        return float(np.mean(scores))


def make_backend(model: str, layer: int = -1, dim: int = 300,
                 device: str = "cpu"):
    """``static`` or ``static:<dim>`` map to hashed vectors; anything else is
    treated as a hub model name for the transformers backend."""
    if model == "static":
        return StaticHashBackend(dim)
    if model.startswith("static:"):
        return StaticHashBackend(int(model.split(":", 1)[1]))
    return TransformersBackend(model, layer=layer, device=device)
