"""Scorer backends and template scoring.

ScorerBackend is the only thing the rest of the package knows about a
probability model: tokenize text, report next-token probabilities for
candidate ids given a source and a decoder prefix, and optionally generate
a summary string. MockScorer implements the contract deterministically
from a seed so every scoring path has an exact, desk-checkable oracle.

trie_score walks a token trie depth-first, multiplying the probability of
the chosen child at every forky node; single-child chains cost nothing.
Each forky node triggers exactly one backend query per source, so the
query budget equals the number of forky nodes regardless of how many
relations share them. Raw mode multiplies backend probabilities as
returned; renormalized mode divides each child's probability by the
sibling mass first, which makes the leaf scores a distribution over the
trie's relations.

Raw probabilities below a floor (default 1e-12) are clamped before any
multiplication so a single degenerate zero cannot erase ranking
information; pass prob_floor=None to disable the clamp.
"""

from __future__ import annotations

import hashlib
import math
import threading
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import BackendError, CapabilityError, DegenerateDistributionError, ValidationError
from .trie import TokenTrie

SCORE_MODES = ("raw", "renormalized")
DEFAULT_PROB_FLOOR = 1e-12


class ScorerBackend:
    """Contract for probability providers.

    tokenize must be deterministic; next_token must return one probability
    in [0,1] per requested candidate id, in request order. Subclasses
    advertise what they support through `caps`.
    """

    caps: frozenset[str] = frozenset()
    vocab_size: int = 0
    eos_id: int = 0

    def tokenize(self, text: str) -> list[int]:
        raise CapabilityError("backend does not support tokenize")

    def next_token(self, source: str, prefix: Sequence[int],
                   cands: Sequence[int]) -> list[float]:
        raise CapabilityError("backend does not support next_token")

    def generate(self, source: str, max_len: int = 64) -> str:
        raise CapabilityError("backend does not support generate")

    def close(self) -> None:
        pass

    def __enter__(self) -> "ScorerBackend":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


class MockScorer(ScorerBackend):
    """Deterministic in-process backend for exact desk-scale verification.

    Distributions come from an explicit table when provided; otherwise the
    table is materialized lazily per (source, prefix): seeded construction
    draws the full-vocabulary distribution from a generator seeded with
    SHA-256(seed, source, prefix) so runs and platforms agree, and
    seed=None falls back to the uniform distribution. Tokenization is
    whitespace splitting with ids assigned in first-seen order; id 0 is
    the end-of-sequence token.
    """

    caps = frozenset({"tokenize", "next_token", "generate"})

    def __init__(self, seed: int | None = None, vocab_size: int = 512,
                 table: Mapping[tuple[str, tuple[int, ...]], object] | None = None,
                 canned_summary: str = ""):
        if vocab_size < 2:
            raise ValidationError("mock vocab_size must be at least 2")
        self.seed = seed
        self.vocab_size = vocab_size
        self.eos_id = 0
        self.canned_summary = canned_summary
        self._table: dict[tuple[str, tuple[int, ...]], np.ndarray] = {}
        self._word_ids: dict[str, int] = {}
        self._lock = threading.Lock()
        if table:
            for (source, prefix), dist in table.items():
                self._set_entry(source, tuple(prefix), dist)

    def _set_entry(self, source: str, prefix: tuple[int, ...], dist: object) -> None:
        arr = np.zeros(self.vocab_size)
        if isinstance(dist, Mapping):
            for token, p in dist.items():
                arr[token] = p
        else:
            values = np.asarray(dist, dtype=float)
            if values.shape != (self.vocab_size,):
                raise ValidationError(
                    f"table distribution for prefix {prefix} must have length {self.vocab_size}")
            arr[:] = values
        if (arr < 0).any() or (arr > 1).any():
            raise ValidationError("mock probabilities must lie in [0,1]")
        if abs(float(arr.sum()) - 1.0) > 1e-9:
            raise ValidationError("mock distribution must sum to 1 within 1e-9")
        self._table[(source, prefix)] = arr

    def tokenize(self, text: str) -> list[int]:
        ids: list[int] = []
        with self._lock:
            for word in text.split():
                wid = self._word_ids.get(word)
                if wid is None:
                    wid = len(self._word_ids) + 1  # 0 is reserved for EOS
                    if wid >= self.vocab_size:
                        raise BackendError(
                            f"mock vocabulary overflow (vocab_size={self.vocab_size})")
                    self._word_ids[word] = wid
                ids.append(wid)
        return ids

    def _distribution(self, source: str, prefix: tuple[int, ...]) -> np.ndarray:
        key = (source, prefix)
        with self._lock:
            dist = self._table.get(key)
            if dist is None:
                if self.seed is None:
                    dist = np.full(self.vocab_size, 1.0 / self.vocab_size)
                else:
                    digest = hashlib.sha256(repr((self.seed, source, prefix)).encode()).digest()
                    rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
                    weights = rng.random(self.vocab_size) + 1e-9
                    dist = weights / weights.sum()
                self._table[key] = dist
            return dist

    def next_token(self, source: str, prefix: Sequence[int],
                   cands: Sequence[int]) -> list[float]:
        for c in cands:
            if not 0 <= c < self.vocab_size:
                raise BackendError(
                    f"candidate id {c} outside vocabulary of size {self.vocab_size}")
        dist = self._distribution(source, tuple(int(t) for t in prefix))
        return [float(dist[c]) for c in cands]

    def generate(self, source: str, max_len: int = 64) -> str:
        return " ".join(self.canned_summary.split()[:max_len])


class CountingBackend(ScorerBackend):
    """Wrapper counting calls to each operation, for query-budget assertions."""

    def __init__(self, inner: ScorerBackend):
        self.inner = inner
        self.tokenize_calls = 0
        self.next_token_calls = 0
        self.generate_calls = 0

    @property
    def caps(self) -> frozenset[str]:  # type: ignore[override]
        return self.inner.caps

    @property
    def vocab_size(self) -> int:  # type: ignore[override]
        return self.inner.vocab_size

    @property
    def eos_id(self) -> int:  # type: ignore[override]
        return self.inner.eos_id

    def tokenize(self, text: str) -> list[int]:
        self.tokenize_calls += 1
        return self.inner.tokenize(text)

    def next_token(self, source, prefix, cands) -> list[float]:
        self.next_token_calls += 1
        return self.inner.next_token(source, prefix, cands)

    def generate(self, source: str, max_len: int = 64) -> str:
        self.generate_calls += 1
        return self.inner.generate(source, max_len)

    def close(self) -> None:
        self.inner.close()


@dataclass(frozen=True)
class ScoreVector:
    """Relation label -> non-negative score, tagged with the scoring mode."""

    scores: dict[str, float]
    mode: str = "raw"

    def __post_init__(self) -> None:
        if self.mode not in SCORE_MODES:
            raise ValidationError(f"unknown score mode {self.mode!r}")
        if not self.scores:
            raise ValidationError("a score vector needs at least one relation")
        if any(p < 0 for p in self.scores.values()):
            raise ValidationError("scores must be non-negative")
        if self.mode == "renormalized":
            total = math.fsum(self.scores.values())
            if abs(total - 1.0) > 1e-9:
                raise ValidationError(
                    f"renormalized scores must sum to 1 within 1e-9 (got {total!r})")

    def argmax(self) -> str:
        best_label, best_score = None, -1.0
        for label, score in self.scores.items():
            if score > best_score:
                best_label, best_score = label, score
        return best_label


def _checked_probs(backend: ScorerBackend, source: str, prefix: list[int],
                   cands: list[int]) -> list[float]:
    try:
        probs = backend.next_token(source, list(prefix), cands)
    except BackendError as exc:
        raise type(exc)(f"next-token query failed at prefix {prefix}: {exc}") from exc
    if len(probs) != len(cands):
        raise BackendError(
            f"backend returned {len(probs)} probabilities for {len(cands)} candidates "
            f"at prefix {prefix}")
    out = []
    for p in probs:
        p = float(p)
        if not (0.0 <= p <= 1.0 + 1e-9) or math.isnan(p):
            raise BackendError(f"probability {p!r} out of [0,1] at prefix {prefix}")
        out.append(min(p, 1.0))
    return out


def trie_score(backend: ScorerBackend, source: str, trie: TokenTrie,
               mode: str = "raw",
               prob_floor: float | None = DEFAULT_PROB_FLOOR) -> ScoreVector:
    """Path-probability score of every leaf relation in the trie.

    One backend query per forky node; the result is shared by every
    relation passing through that node. Scores come back keyed in the
    trie's relation insertion order.
    """
    if mode not in SCORE_MODES:
        raise ValidationError(f"unknown score mode {mode!r}")
    scores: dict[str, float] = {}

    def descend(node: int, prefix: list[int], acc: float) -> None:
        relation = trie.relation_at_leaf[node]
        if relation is not None:
            scores[relation] = acc
            return
        kids = trie.children[node]
        if len(kids) == 1:
            ((token, child),) = kids.items()
            descend(child, prefix + [token], acc)
            return
        cands = sorted(kids)
        probs = _checked_probs(backend, source, prefix, cands)
        if prob_floor is not None:
            probs = [max(p, prob_floor) for p in probs]
        if mode == "renormalized":
            total = math.fsum(probs)
            if total <= 0.0:
                raise DegenerateDistributionError(
                    f"sibling probability mass is zero at node {node} (prefix {prefix})")
            factors = [p / total for p in probs]
        else:
            factors = probs
        for token, factor in zip(cands, factors):
            descend(kids[token], prefix + [token], acc * factor)

    descend(trie.root, [], 1.0)
    return ScoreVector(scores={r: scores[r] for r in trie.relations}, mode=mode)


def full_sequence_loglik(backend: ScorerBackend, source: str,
                         token_ids: Sequence[int]) -> float:
    """Sum of log p(token | prefix, source) over the sequence, EOS included.

    This is the brute-force ranking baseline trie scoring avoids: one query
    per position, no sharing. A zero probability anywhere yields -inf.
    """
    total = 0.0
    prefix: list[int] = []
    for token in list(token_ids) + [backend.eos_id]:
        (p,) = _checked_probs(backend, source, prefix, [int(token)])
        if p <= 0.0:
            return float("-inf")
        total += math.log(p)
        prefix.append(int(token))
    return total


def _lcs_len(a: Sequence[str], b: Sequence[str]) -> int:
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(candidate: str, reference: str) -> float:
    """Word-level longest-common-subsequence F-measure (beta=1)."""
    cand, ref = candidate.split(), reference.split()
    if not cand or not ref:
        return 0.0
    lcs = _lcs_len(cand, ref)
    precision, recall = lcs / len(cand), lcs / len(ref)
    if precision + recall == 0.0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def rouge_rank(backend: ScorerBackend, source: str,
               filled_templates: Mapping[str, str], max_len: int = 64) -> ScoreVector:
    """Generate one summary, then score each template by ROUGE-L against it."""
    if "generate" not in backend.caps:
        raise CapabilityError("backend does not support generate")
    summary = backend.generate(source, max_len)
    return ScoreVector(
        scores={r: rouge_l(summary, t) for r, t in filled_templates.items()},
        mode="raw")
