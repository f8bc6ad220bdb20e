"""Token prefix tree over tokenized, mention-filled templates.

Nodes live in a flat arena: parallel lists of children maps (token id ->
node index) and optional leaf relation labels. An end-of-sequence token is
appended to every template before insertion so that no template can sit on
a strict prefix of another; every root-to-leaf path therefore ends with
eos_id, and every relation owns exactly one leaf.

Scoring only ever consults "forky" nodes, the ones with two or more
children; they are derived from the structure on demand, never stored.
Tries are immutable after build and safe to share across threads; prune
returns a new trie.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import ValidationError


@dataclass(frozen=True)
class PathDecision:
    """One scoring decision: at `node`, after `prefix_ids`, pick `chosen`
    among the node's children (`siblings`)."""

    node: int
    prefix_ids: tuple[int, ...]
    chosen: int
    siblings: frozenset[int]

    def __post_init__(self) -> None:
        if self.chosen not in self.siblings:
            raise ValidationError(f"chosen token {self.chosen} not among siblings")
        if len(self.siblings) < 2:
            raise ValidationError("a decision needs at least two siblings")


class TokenTrie:
    __slots__ = ("children", "relation_at_leaf", "root", "eos_id", "_sequences")

    def __init__(self, eos_id: int):
        self.children: list[dict[int, int]] = [{}]
        self.relation_at_leaf: list[str | None] = [None]
        self.root = 0
        self.eos_id = eos_id
        self._sequences: dict[str, tuple[int, ...]] = {}

    def _insert(self, relation: str, ids: tuple[int, ...]) -> None:
        node = self.root
        for token in ids + (self.eos_id,):
            child = self.children[node].get(token)
            if child is None:
                child = len(self.children)
                self.children[node][token] = child
                self.children.append({})
                self.relation_at_leaf.append(None)
            node = child
        self.relation_at_leaf[node] = relation
        self._sequences[relation] = ids

    @property
    def num_nodes(self) -> int:
        return len(self.children)

    @property
    def relations(self) -> tuple[str, ...]:
        """Leaf relations in insertion order."""
        return tuple(self._sequences)

    def sequence_for(self, relation: str) -> tuple[int, ...]:
        """The inserted token ids for a relation, without the trailing EOS."""
        try:
            return self._sequences[relation]
        except KeyError:
            raise ValidationError(f"relation {relation!r} is not a leaf of this trie") from None

    def forky_nodes(self) -> list[int]:
        return [i for i, kids in enumerate(self.children) if len(kids) >= 2]

    def decisions_for(self, relation: str) -> list[PathDecision]:
        """The relation's forky-node decisions in root-to-leaf order."""
        out: list[PathDecision] = []
        node = self.root
        prefix: list[int] = []
        for token in self.sequence_for(relation) + (self.eos_id,):
            kids = self.children[node]
            if len(kids) >= 2:
                out.append(PathDecision(node=node, prefix_ids=tuple(prefix),
                                        chosen=token, siblings=frozenset(kids)))
            node = kids[token]
            prefix.append(token)
        return out


def build_trie(filled: Mapping[str, Sequence[int]], eos_id: int) -> TokenTrie:
    """Insert every relation's token sequence (with EOS appended) into a fresh trie."""
    if not filled:
        raise ValidationError("cannot build a trie from an empty template map")
    trie = TokenTrie(eos_id)
    seen: dict[tuple[int, ...], str] = {}
    for relation, seq in filled.items():
        ids = tuple(int(t) for t in seq)
        if not ids:
            raise ValidationError(f"relation {relation!r}: empty token sequence")
        if eos_id in ids:
            raise ValidationError(
                f"relation {relation!r}: eos id {eos_id} occurs inside the sequence")
        if ids in seen:
            raise ValidationError(
                f"relations {seen[ids]!r} and {relation!r} fill to identical token sequences")
        seen[ids] = relation
        trie._insert(relation, ids)
    return trie


def prune(trie: TokenTrie, allowed: Iterable[str]) -> TokenTrie:
    """A new trie containing exactly the root-to-leaf paths of `allowed`."""
    allowed_set = set(allowed)
    if not allowed_set:
        raise ValidationError("allowed set is empty")
    unknown = allowed_set - set(trie.relations)
    if unknown:
        raise ValidationError(f"labels not in trie: {sorted(unknown)}")

    keep = [False] * trie.num_nodes

    def mark(node: int) -> bool:
        ok = trie.relation_at_leaf[node] in allowed_set
        for child in trie.children[node].values():
            ok |= mark(child)
        keep[node] = ok
        return ok

    mark(trie.root)
    out = TokenTrie(trie.eos_id)

    def copy(src: int, dst: int) -> None:
        out.relation_at_leaf[dst] = trie.relation_at_leaf[src]
        for token, child in trie.children[src].items():
            if not keep[child]:
                continue
            new = len(out.children)
            out.children[dst][token] = new
            out.children.append({})
            out.relation_at_leaf.append(None)
            copy(child, new)

    copy(trie.root, out.root)
    # preserve the original insertion order of the surviving relations
    out._sequences = {r: trie._sequences[r] for r in trie.relations if r in allowed_set}
    return out


def trie_equal(a: TokenTrie, b: TokenTrie) -> bool:
    """Structural equality: same edges and leaf labels, arena indices ignored."""
    if a.eos_id != b.eos_id:
        return False

    def eq(na: int, nb: int) -> bool:
        if a.relation_at_leaf[na] != b.relation_at_leaf[nb]:
            return False
        ka, kb = a.children[na], b.children[nb]
        if ka.keys() != kb.keys():
            return False
        return all(eq(ka[t], kb[t]) for t in ka)

    return eq(a.root, b.root)


def render_debug(trie: TokenTrie) -> str:
    """Text rendering for golden-file tests: one line per node with its depth,
    incoming token id ('-' for the root), and relation when the node is a leaf."""
    lines: list[str] = []

    def walk(node: int, depth: int, token: int | None) -> None:
        line = f"{depth}\t{'-' if token is None else token}"
        relation = trie.relation_at_leaf[node]
        if relation is not None:
            line += f"\t{relation}"
        lines.append(line)
        for t, child in trie.children[node].items():
            walk(child, depth + 1, t)

    walk(trie.root, 0, None)
    return "\n".join(lines) + "\n"
