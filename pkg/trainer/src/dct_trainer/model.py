"""A tiny self-contained causal transformer used as the base model.

Base weights are randomly initialized from the identifier's seed and frozen;
only the low-rank adapters train. Byte-level vocabulary, so the model works
on any text with no external files.
"""

from __future__ import annotations

import math
import re

import torch
from torch import nn

from .data import PAD, VOCAB_SIZE

_TINY_RE = re.compile(r"^tiny-(\d+)x(\d+)$")


class CausalSelfAttention(nn.Module):
    def __init__(self, d_model: int, n_heads: int):
        super().__init__()
        assert d_model % n_heads == 0
        self.n_heads = n_heads
        self.head_dim = d_model // n_heads
        self.q_proj = nn.Linear(d_model, d_model)
        self.k_proj = nn.Linear(d_model, d_model)
        self.v_proj = nn.Linear(d_model, d_model)
        self.o_proj = nn.Linear(d_model, d_model)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        batch, length, d_model = x.shape

        def split(t):
            return t.view(batch, length, self.n_heads, self.head_dim).transpose(1, 2)

        q, k, v = split(self.q_proj(x)), split(self.k_proj(x)), split(self.v_proj(x))
        scores = q @ k.transpose(-2, -1) / math.sqrt(self.head_dim)
        mask = torch.triu(torch.ones(length, length, dtype=torch.bool, device=x.device),
                          diagonal=1)
        scores = scores.masked_fill(mask, float("-inf"))
        out = torch.softmax(scores, dim=-1) @ v
        out = out.transpose(1, 2).reshape(batch, length, d_model)
        return self.o_proj(out)


class Block(nn.Module):
    def __init__(self, d_model: int, n_heads: int):
        super().__init__()
        self.ln1 = nn.LayerNorm(d_model)
        self.attn = CausalSelfAttention(d_model, n_heads)
        self.ln2 = nn.LayerNorm(d_model)
        self.fc1 = nn.Linear(d_model, 4 * d_model)
        self.fc2 = nn.Linear(4 * d_model, d_model)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = x + self.attn(self.ln1(x))
        x = x + self.fc2(torch.nn.functional.gelu(self.fc1(self.ln2(x))))
        return x


class TinyCausalLM(nn.Module):
    def __init__(self, d_model: int = 64, n_layers: int = 2, n_heads: int = 2,
                 max_len: int = 512, vocab_size: int = VOCAB_SIZE):
        super().__init__()
        self.max_len = max_len
        self.tok_emb = nn.Embedding(vocab_size, d_model)
        self.pos_emb = nn.Embedding(max_len, d_model)
        self.blocks = nn.ModuleList(Block(d_model, n_heads) for _ in range(n_layers))
        self.ln_f = nn.LayerNorm(d_model)
        self.head = nn.Linear(d_model, vocab_size)

    def forward(self, input_ids: torch.Tensor) -> torch.Tensor:
        length = input_ids.shape[1]
        positions = torch.arange(length, device=input_ids.device)
        x = self.tok_emb(input_ids) + self.pos_emb(positions)[None]
        for block in self.blocks:
            x = block(x)
        return self.head(self.ln_f(x))

    def loss(self, input_ids: torch.Tensor) -> torch.Tensor:
        """Next-token cross entropy over non-pad positions."""
        logits = self.forward(input_ids[:, :-1])
        targets = input_ids[:, 1:]
        return nn.functional.cross_entropy(
            logits.reshape(-1, logits.shape[-1]), targets.reshape(-1),
            ignore_index=PAD,
        )


def build_base(identifier: str, seed: int) -> TinyCausalLM:
    """Base model from a "tiny-<d_model>x<n_layers>" identifier or a
    checkpoint path produced by :func:`save_base`.
    """
    match = _TINY_RE.match(identifier)
    if match:
        d_model, n_layers = int(match.group(1)), int(match.group(2))
        generator_state = torch.random.get_rng_state()
        torch.manual_seed(seed)
        model = TinyCausalLM(d_model=d_model, n_layers=n_layers,
                             n_heads=2 if d_model % 2 == 0 else 1)
        torch.random.set_rng_state(generator_state)
        return model
    checkpoint = torch.load(identifier, map_location="cpu", weights_only=True)
    model = TinyCausalLM(**checkpoint["dims"])
    model.load_state_dict(checkpoint["state_dict"])
    return model


def save_base(model: TinyCausalLM, path: str) -> None:
    d_model = model.tok_emb.embedding_dim
    torch.save({
        "dims": {
            "d_model": d_model,
            "n_layers": len(model.blocks),
            "n_heads": model.blocks[0].attn.n_heads,
            "max_len": model.max_len,
        },
        "state_dict": model.state_dict(),
    }, path)
