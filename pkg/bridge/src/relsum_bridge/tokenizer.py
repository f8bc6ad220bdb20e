"""Word-level tokenizer for checkpoints trained inside this repo.

Splits on whitespace, no normalization of any kind. Four special ids sit
at the bottom of the vocabulary; encode() never emits them for real
words (unknown words map to <unk>).
"""

from __future__ import annotations

import json
from collections import Counter
from pathlib import Path

from .errors import BridgeError

PAD, BOS, EOS, UNK = "<pad>", "<s>", "</s>", "<unk>"
SPECIALS = (PAD, BOS, EOS, UNK)

VOCAB_FILE = "vocab.json"


class WordTokenizer:
    """A frozen word -> id table with the four specials pinned at 0..3."""

    def __init__(self, vocab: dict[str, int]):
        for index, token in enumerate(SPECIALS):
            if vocab.get(token) != index:
                raise BridgeError(f"vocab must map {token!r} to {index}")
        ids = sorted(vocab.values())
        if ids != list(range(len(vocab))):
            raise BridgeError("vocab ids must be 0..N-1 without gaps")
        self.vocab = dict(vocab)
        self._by_id = {i: w for w, i in self.vocab.items()}

    pad_id = 0
    bos_id = 1
    eos_id = 2
    unk_id = 3

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    def encode(self, text: str) -> list[int]:
        return [self.vocab.get(word, self.unk_id) for word in text.split()]

    def decode(self, ids: list[int]) -> str:
        words = []
        for i in ids:
            word = self._by_id.get(int(i))
            if word is None:
                raise BridgeError(f"id {i} outside the vocabulary")
            if word in SPECIALS:
                continue
            words.append(word)
        return " ".join(words)

    @classmethod
    def from_texts(cls, texts, max_size: int = 8000) -> "WordTokenizer":
        """Most frequent words first, alphabetical among ties."""
        if max_size <= len(SPECIALS):
            raise BridgeError("max_size leaves no room for real words")
        counts = Counter(word for text in texts for word in text.split())
        ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        vocab = {token: i for i, token in enumerate(SPECIALS)}
        for word, _ in ranked[:max_size - len(SPECIALS)]:
            vocab[word] = len(vocab)
        return cls(vocab)

    def save(self, directory: str | Path) -> None:
        path = Path(directory) / VOCAB_FILE
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.vocab, fh, ensure_ascii=False, indent=0)
            fh.write("\n")

    @classmethod
    def load(cls, directory: str | Path) -> "WordTokenizer":
        path = Path(directory) / VOCAB_FILE
        try:
            with open(path, encoding="utf-8") as fh:
                return cls(json.load(fh))
        except OSError as exc:
            raise BridgeError(f"{path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise BridgeError(f"{path}: invalid JSON ({exc})") from exc
