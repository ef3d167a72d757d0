"""Frozen sentence encoders.

An encoder turns a batch of texts (optionally sentence pairs) into one
fixed-width float32 vector per instance.  The default is a pre-trained
transformer's first-token (sequence-level) hidden state with the encoder
weights frozen; pair tasks are encoded jointly so the tokenizer inserts
its separator between the two sides.
"""

from __future__ import annotations

import numpy as np


class TransformerClsEncoder:
    """Sequence-level embeddings from a frozen pre-trained transformer.

    Lazily imports torch/transformers so the package works offline when
    only stub encoders are used.
    """

    def __init__(self, model_id: str = "distilbert-base-uncased", max_length: int = 512,
                 batch_size: int = 32, device: str = "cpu"):
        import torch
        from transformers import AutoModel, AutoTokenizer

        self._torch = torch
        self.model_id = model_id
        self.max_length = max_length
        self.batch_size = batch_size
        self.device = device
        self.tokenizer = AutoTokenizer.from_pretrained(model_id)
        self.model = AutoModel.from_pretrained(model_id).to(device)
        self.model.eval()

    def encode(self, texts, pairs=None) -> np.ndarray:
        torch = self._torch
        chunks = []
        with torch.no_grad():
            for lo in range(0, len(texts), self.batch_size):
                batch_texts = list(texts[lo : lo + self.batch_size])
                batch_pairs = list(pairs[lo : lo + self.batch_size]) if pairs is not None else None
                tokens = self.tokenizer(
                    batch_texts,
                    batch_pairs,
                    padding=True,
                    truncation=True,
                    max_length=self.max_length,
                    return_tensors="pt",
                ).to(self.device)
                hidden = self.model(**tokens).last_hidden_state[:, 0, :]
                chunks.append(hidden.cpu().numpy().astype(np.float32))
        return np.concatenate(chunks, axis=0)


class HashedStubEncoder:
    """Deterministic offline stand-in: hash-seeded pseudo-embeddings.

    Produces the same vector for the same text on every platform; used by
    tests and dry runs where no model weights are available.
    """

    def __init__(self, dim: int = 32):
        self.dim = dim

    def _vector(self, text: str) -> np.ndarray:
        import hashlib

        seed = int.from_bytes(
            hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest(), "little"
        )
        rng = np.random.Generator(np.random.Philox(key=seed))
        return rng.standard_normal(self.dim).astype(np.float32)

    def encode(self, texts, pairs=None) -> np.ndarray:
        joined = (
            texts
            if pairs is None
            else [f"{a} \x1f {b}" for a, b in zip(texts, pairs)]
        )
        return np.stack([self._vector(t) for t in joined])
