"""Byte-level byte-pair encoding: training, encode/decode, save/load.

The first 256 token ids are the raw bytes; each merge rule appends one new
id. Encoding applies merges in training order, so decode(encode(x)) == x for
any byte string.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, List, Sequence, Tuple, Union

MIN_VOCAB = 257
_MIN_PAIR_COUNT = 2  # pairs seen once are never worth a merge rule


@dataclass
class Vocabulary:
    merges: List[Tuple[int, int]] = field(default_factory=list)
    token_bytes: List[bytes] = field(
        default_factory=lambda: [bytes([b]) for b in range(256)]
    )

    def __post_init__(self):
        self._ranks = {pair: i for i, pair in enumerate(self.merges)}

    @property
    def size(self) -> int:
        return len(self.token_bytes)

    def add_merge(self, left: int, right: int) -> int:
        new_id = len(self.token_bytes)
        self.merges.append((left, right))
        self.token_bytes.append(self.token_bytes[left] + self.token_bytes[right])
        self._ranks[(left, right)] = len(self.merges) - 1
        return new_id

    def merge_rank(self, pair: Tuple[int, int]):
        return self._ranks.get(pair)


def _merge_sequence(ids: List[int], pair: Tuple[int, int], new_id: int) -> List[int]:
    out = []
    i, n = 0, len(ids)
    left, right = pair
    while i < n:
        if i + 1 < n and ids[i] == left and ids[i + 1] == right:
            out.append(new_id)
            i += 2
        else:
            out.append(ids[i])
            i += 1
    return out


def train(corpus: Iterable[Union[str, bytes]], vocab_size: int) -> Vocabulary:
    """Greedy BPE training.

    `corpus` is an iterable of text chunks (lines work well); pairs never
    merge across chunk boundaries. The most frequent adjacent pair is merged
    until `vocab_size` is reached or no pair occurs at least twice. Frequency
    ties break on the lexicographically smaller (left bytes, right bytes).
    """
    if vocab_size < MIN_VOCAB:
        raise ValueError(f"vocab size must be >= {MIN_VOCAB}")
    sequences = []
    for chunk in corpus:
        data = chunk.encode("utf-8") if isinstance(chunk, str) else chunk
        if data:
            sequences.append(list(data))
    if not sequences:
        raise ValueError("empty corpus")
    vocab = Vocabulary()
    while vocab.size < vocab_size:
        counts: Counter = Counter()
        for seq in sequences:
            for i in range(len(seq) - 1):
                counts[(seq[i], seq[i + 1])] += 1
        if not counts:
            break
        best_count = max(counts.values())
        if best_count < _MIN_PAIR_COUNT:
            break
        best = min(
            (pair for pair, c in counts.items() if c == best_count),
            key=lambda p: (vocab.token_bytes[p[0]], vocab.token_bytes[p[1]]),
        )
        new_id = vocab.add_merge(*best)
        sequences = [
            _merge_sequence(seq, best, new_id) if _pair_in(seq, best) else seq
            for seq in sequences
        ]
    return vocab


def _pair_in(seq: List[int], pair: Tuple[int, int]) -> bool:
    left, right = pair
    return any(
        seq[i] == left and seq[i + 1] == right for i in range(len(seq) - 1)
    )


def encode(vocab: Vocabulary, text: Union[str, bytes]) -> List[int]:
    """Token ids for `text`, applying merges in training order."""
    data = text.encode("utf-8") if isinstance(text, str) else text
    ids = list(data)
    while len(ids) >= 2:
        best_rank, best_pair = None, None
        for i in range(len(ids) - 1):
            rank = vocab.merge_rank((ids[i], ids[i + 1]))
            if rank is not None and (best_rank is None or rank < best_rank):
                best_rank, best_pair = rank, (ids[i], ids[i + 1])
        if best_pair is None:
            break
        ids = _merge_sequence(ids, best_pair, 256 + best_rank)
    return ids


def decode(vocab: Vocabulary, ids: Sequence[int]) -> bytes:
    """Byte string for a token id sequence."""
    out = []
    for tid in ids:
        if not 0 <= tid < vocab.size:
            raise KeyError(f"unknown token id: {tid}")
        out.append(vocab.token_bytes[tid])
    return b"".join(out)


def decode_text(vocab: Vocabulary, ids: Sequence[int]) -> str:
    return decode(vocab, ids).decode("utf-8", errors="replace")


_HEADER = "mdbench-bpe v1"


def save(vocab: Vocabulary, path) -> None:
    """One merge per line, in training order, after a version header."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_HEADER + "\n")
        for left, right in vocab.merges:
            fh.write(f"{left} {right}\n")


def load(path) -> Vocabulary:
    vocab = Vocabulary()
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != _HEADER:
            raise ValueError(f"{path}:1: bad vocabulary header {header!r}")
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: malformed merge line {line!r}")
            try:
                left, right = int(parts[0]), int(parts[1])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: malformed merge line {line!r}") from exc
            if not (0 <= left < vocab.size and 0 <= right < vocab.size):
                raise ValueError(f"{path}:{lineno}: merge references undefined id")
            vocab.add_merge(left, right)
    return vocab
