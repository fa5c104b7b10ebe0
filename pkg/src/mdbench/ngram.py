"""Order-k token n-gram reference model with backoff.

A deterministic, desk-scale model under test: greedy next-token choice from
the highest order whose context was observed, ties broken by the request
seed. Token ids come from a trained BPE vocabulary; token id 0 (the 0x00
byte) is reserved as the end-of-sample sentinel and is never emitted.
"""
from __future__ import annotations

import random
import struct
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from . import bpe
from .adapter import GenerationRequest, InProcessAdapter
from .datasets import TaskSample

SENTINEL = 0  # byte 0x00: delimits samples during training, never generated


@dataclass
class NgramModel:
    order: int
    vocab: bpe.Vocabulary
    # counts[j] maps a (j-1)-token context tuple to Counter(next token id).
    counts: Dict[int, Dict[Tuple[int, ...], Counter]] = field(default_factory=dict)

    def continuations(self, context: Sequence[int]) -> Optional[Counter]:
        """Highest-order observed continuation counts for `context`."""
        ctx = tuple(context)
        for j in range(self.order, 0, -1):
            sub = ctx[len(ctx) - (j - 1):] if j > 1 else ()
            if len(sub) != j - 1:
                continue
            table = self.counts.get(j, {})
            if sub in table:
                return table[sub]
        return None


def train_ngram(
    samples: Sequence[TaskSample], order: int, vocab: bpe.Vocabulary
) -> NgramModel:
    """Count n-grams over each sample's concatenated input+target stream."""
    if order < 1:
        raise ValueError("order must be >= 1")
    if not samples:
        raise ValueError("empty training corpus")
    counts: Dict[int, Dict[Tuple[int, ...], Counter]] = {
        j: defaultdict(Counter) for j in range(1, order + 1)
    }
    for sample in samples:
        text = sample.input + sample.target if sample.input else sample.target
        ids = bpe.encode(vocab, text) + [SENTINEL]
        for i, tok in enumerate(ids):
            for j in range(1, order + 1):
                if i - (j - 1) < 0:
                    continue
                ctx = tuple(ids[i - (j - 1) : i])
                counts[j][ctx][tok] += 1
    model = NgramModel(order, vocab)
    model.counts = {j: dict(table) for j, table in counts.items()}
    return model


def generate(
    model: NgramModel,
    prompt: str,
    max_new_tokens: int,
    seed: Optional[int] = None,
) -> str:
    """Greedy generation with seeded tie-breaks; pure given (prompt, seed)."""
    if max_new_tokens < 1:
        raise ValueError("max_new_tokens must be >= 1")
    rng = random.Random(seed) if seed is not None else random.Random()
    ids = bpe.encode(model.vocab, prompt)
    new_ids: List[int] = []
    for _ in range(max_new_tokens):
        cont = model.continuations(ids)
        if cont is None:
            break
        best = max(cont.values())
        tied = sorted(tok for tok, c in cont.items() if c == best)
        tok = tied[0] if len(tied) == 1 else rng.choice(tied)
        if tok == SENTINEL:
            break
        ids.append(tok)
        new_ids.append(tok)
    return bpe.decode_text(model.vocab, new_ids)


def serve_adapter(model: NgramModel, name: str = "refmodel") -> InProcessAdapter:
    """In-process adapter session backed by this model."""

    def fn(req: GenerationRequest) -> str:
        return generate(model, req.prompt, req.max_new_tokens, req.seed)

    return InProcessAdapter(fn, name=name)


_MAGIC = b"MDBNGRM1"


def save(model: NgramModel, path) -> None:
    """Binary count-table dump with a versioned header.

    The vocabulary rides along (as its merge list) so a model file is
    self-contained.
    """
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", model.order, len(model.vocab.merges)))
        for left, right in model.vocab.merges:
            fh.write(struct.pack("<II", left, right))
        for j in range(1, model.order + 1):
            table = model.counts.get(j, {})
            fh.write(struct.pack("<I", len(table)))
            for ctx in sorted(table):
                nexts = table[ctx]
                fh.write(struct.pack(f"<{j - 1}I", *ctx) if j > 1 else b"")
                fh.write(struct.pack("<I", len(nexts)))
                for tok in sorted(nexts):
                    fh.write(struct.pack("<IQ", tok, nexts[tok]))


def load(path) -> NgramModel:
    with open(path, "rb") as fh:
        if fh.read(len(_MAGIC)) != _MAGIC:
            raise ValueError(f"{path}: not an mdbench n-gram model file")
        order, n_merges = struct.unpack("<II", fh.read(8))
        vocab = bpe.Vocabulary()
        for _ in range(n_merges):
            left, right = struct.unpack("<II", fh.read(8))
            vocab.add_merge(left, right)
        counts: Dict[int, Dict[Tuple[int, ...], Counter]] = {}
        for j in range(1, order + 1):
            (n_ctx,) = struct.unpack("<I", fh.read(4))
            table: Dict[Tuple[int, ...], Counter] = {}
            for _ in range(n_ctx):
                ctx = struct.unpack(f"<{j - 1}I", fh.read(4 * (j - 1))) if j > 1 else ()
                (n_next,) = struct.unpack("<I", fh.read(4))
                nexts = Counter()
                for _ in range(n_next):
                    tok, count = struct.unpack("<IQ", fh.read(12))
                    nexts[tok] = count
                table[ctx] = nexts
            counts[j] = table
        return NgramModel(order, vocab, counts)
