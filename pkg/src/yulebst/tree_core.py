"""Complete binary trees stored as sets of binary words.

A word ``u`` over ``{0, 1}`` is packed as ``NodeWord(depth, bits)`` where the
first letter is the most significant of the ``depth`` low bits of ``bits``.
The root is the empty word ``NodeWord(0, 0)``.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, NamedTuple

import numpy as np


class NodeWord(NamedTuple):
    depth: int
    bits: int

    @classmethod
    def from_letters(cls, letters: Iterable[int]) -> "NodeWord":
        depth = 0
        bits = 0
        for b in letters:
            if b not in (0, 1):
                raise ValueError(f"letter {b!r} is not 0 or 1")
            bits = (bits << 1) | b
            depth += 1
        return cls(depth, bits)

    @classmethod
    def parse(cls, text: str) -> "NodeWord":
        """Inverse of ``str``: ``""`` or ``"∅"`` is the root, otherwise a 0/1 string."""
        if text in ("", "∅"):
            return ROOT
        return cls.from_letters(int(c) for c in text)

    @property
    def letters(self) -> tuple[int, ...]:
        return tuple((self.bits >> (self.depth - 1 - i)) & 1 for i in range(self.depth))

    def child(self, letter: int) -> "NodeWord":
        return NodeWord(self.depth + 1, (self.bits << 1) | letter)

    @property
    def parent(self) -> "NodeWord":
        if self.depth == 0:
            raise ValueError("the root has no parent")
        return NodeWord(self.depth - 1, self.bits >> 1)

    @property
    def last_letter(self) -> int:
        if self.depth == 0:
            raise ValueError("the root has no letters")
        return self.bits & 1

    def ancestors(self) -> Iterator["NodeWord"]:
        """Strict prefixes, root first."""
        for d in range(self.depth):
            yield NodeWord(d, self.bits >> (self.depth - d))

    def __str__(self) -> str:
        if self.depth == 0:
            return "∅"
        return format(self.bits, f"0{self.depth}b")


ROOT = NodeWord(0, 0)


class Profile:
    """Leaf counts per depth: ``counts[k]`` is the number of leaves at depth ``k``."""

    __slots__ = ("counts",)

    def __init__(self, counts: Mapping[int, int]):
        self.counts = {int(k): int(v) for k, v in sorted(counts.items()) if v}

    def __getitem__(self, k: int) -> int:
        return self.counts.get(k, 0)

    def __eq__(self, other) -> bool:
        if isinstance(other, Profile):
            return self.counts == other.counts
        if isinstance(other, Mapping):
            return self.counts == Profile(other).counts
        return NotImplemented

    def __repr__(self) -> str:
        return f"Profile({self.counts})"

    @property
    def n_leaves(self) -> int:
        return sum(self.counts.values())

    @property
    def extremal_depths(self) -> tuple[int, int]:
        return min(self.counts), max(self.counts)

    @property
    def external_path_length(self) -> int:
        return sum(k * c for k, c in self.counts.items())

    def kraft_sum(self) -> Fraction:
        return sum((Fraction(c, 2**k) for k, c in self.counts.items()), Fraction(0))

    def as_array(self, length: int | None = None) -> np.ndarray:
        top = max(self.counts) + 1
        out = np.zeros(max(top, length or 0), dtype=np.int64)
        for k, c in self.counts.items():
            out[k] = c
        return out

    @classmethod
    def from_depths(cls, depths) -> "Profile":
        counts = np.bincount(np.asarray(depths, dtype=np.int64))
        return cls({k: int(c) for k, c in enumerate(counts) if c})

    def to_json(self) -> str:
        return json.dumps({str(k): c for k, c in self.counts.items()})

    @classmethod
    def from_json(cls, text: str) -> "Profile":
        return cls({int(k): v for k, v in json.loads(text).items()})


class BinaryTree:
    """A complete binary tree.

    Leaves sit in an indexable list with swap-remove so ``leaf_at(i)`` with a
    uniform ``i`` picks a uniform leaf in O(1). The profile is kept up to date
    on every split.
    """

    __slots__ = ("_leaves", "_pos", "_internal", "_profile")

    def __init__(self):
        self._leaves: list[NodeWord] = [ROOT]
        self._pos: dict[NodeWord, int] = {ROOT: 0}
        self._internal: set[NodeWord] = set()
        self._profile: dict[int, int] = {0: 1}

    @classmethod
    def from_nodes(cls, nodes: Iterable[NodeWord | str]) -> "BinaryTree":
        words = {NodeWord.parse(u) if isinstance(u, str) else NodeWord(*u) for u in nodes}
        if ROOT not in words:
            raise ValueError("the root is missing")
        for u in words:
            if u.depth and u.parent not in words:
                raise ValueError(f"{u} present without its parent")
            if (u.child(0) in words) != (u.child(1) in words):
                raise ValueError(f"children of {u} are not paired")
        tree = cls.__new__(cls)
        internal = {u for u in words if u.child(0) in words}
        leaves = sorted(words - internal)
        tree._leaves = leaves
        tree._pos = {u: i for i, u in enumerate(leaves)}
        tree._internal = internal
        tree._profile = {}
        for u in leaves:
            tree._profile[u.depth] = tree._profile.get(u.depth, 0) + 1
        return tree

    @classmethod
    def from_preorder(cls, code: str) -> "BinaryTree":
        """Parse the preorder code (1 = internal, 0 = leaf)."""
        tree = cls()
        stack = [ROOT]
        i = 0
        for i, c in enumerate(code):
            if not stack:
                raise ValueError(f"trailing symbols after position {i}")
            u = stack.pop()
            if c == "1":
                tree.split(u)
                stack.append(u.child(1))
                stack.append(u.child(0))
            elif c != "0":
                raise ValueError(f"bad symbol {c!r}")
        if stack:
            raise ValueError("truncated preorder code")
        return tree

    def copy(self) -> "BinaryTree":
        tree = BinaryTree.__new__(BinaryTree)
        tree._leaves = list(self._leaves)
        tree._pos = dict(self._pos)
        tree._internal = set(self._internal)
        tree._profile = dict(self._profile)
        return tree

    # -- queries -------------------------------------------------------------

    @property
    def n_internal(self) -> int:
        return len(self._internal)

    @property
    def n_leaves(self) -> int:
        return len(self._leaves)

    @property
    def leaves(self) -> tuple[NodeWord, ...]:
        return tuple(self._leaves)

    @property
    def internal(self) -> frozenset[NodeWord]:
        return frozenset(self._internal)

    @property
    def nodes(self) -> frozenset[NodeWord]:
        return frozenset(self._internal).union(self._leaves)

    def leaf_at(self, index: int) -> NodeWord:
        return self._leaves[index]

    def is_leaf(self, u: NodeWord) -> bool:
        return u in self._pos

    def __contains__(self, u) -> bool:
        return u in self._pos or u in self._internal

    def __eq__(self, other) -> bool:
        if not isinstance(other, BinaryTree):
            return NotImplemented
        return self._internal == other._internal

    __hash__ = None

    def __repr__(self) -> str:
        return f"BinaryTree({self.serialize()!r})"

    def profile(self) -> Profile:
        return Profile(self._profile)

    def depth_counts(self) -> dict[int, int]:
        """Live view of the profile dict; do not mutate."""
        return self._profile

    # -- mutation --------------------------------------------------------------

    def split(self, leaf: NodeWord) -> None:
        """Turn ``leaf`` into an internal node with two leaf children, in place."""
        i = self._pos.pop(leaf, None)
        if i is None:
            where = "internal" if leaf in self._internal else "absent"
            raise ValueError(f"cannot split {leaf}: node is {where}")
        last = self._leaves.pop()
        if last != leaf:
            self._leaves[i] = last
            self._pos[last] = i
        self._internal.add(leaf)
        for b in (0, 1):
            c = leaf.child(b)
            self._pos[c] = len(self._leaves)
            self._leaves.append(c)
        d = leaf.depth
        if self._profile[d] == 1:
            del self._profile[d]
        else:
            self._profile[d] -= 1
        self._profile[d + 1] = self._profile.get(d + 1, 0) + 2

    # -- encodings ---------------------------------------------------------------

    def serialize(self) -> str:
        out = []
        stack = [ROOT]
        while stack:
            u = stack.pop()
            if u in self._internal:
                out.append("1")
                stack.append(u.child(1))
                stack.append(u.child(0))
            else:
                out.append("0")
        return "".join(out)

    def check_invariants(self) -> None:
        """Raise ``AssertionError`` if any structural invariant fails."""
        nodes = self.nodes
        assert ROOT in nodes
        for u in nodes:
            if u.depth:
                assert u.parent in self._internal, f"{u} has no internal parent"
        for u in self._internal:
            assert u.child(0) in nodes and u.child(1) in nodes, f"{u} unpaired"
        assert len(self._leaves) == len(self._internal) + 1
        assert not set(self._leaves) & self._internal
        height = max(u.depth for u in self._leaves)
        assert sum(1 << (height - u.depth) for u in self._leaves) == 1 << height
        recount: dict[int, int] = {}
        for u in self._leaves:
            recount[u.depth] = recount.get(u.depth, 0) + 1
        assert recount == self._profile


def split_leaf(tree: BinaryTree, leaf: NodeWord) -> BinaryTree:
    """Return a copy of ``tree`` with ``leaf`` split."""
    out = tree.copy()
    out.split(leaf)
    return out


def profile(tree: BinaryTree) -> Profile:
    return tree.profile()


def extremal_depths(tree: BinaryTree) -> tuple[int, int]:
    """Saturation level and height: min and max leaf depth."""
    return tree.profile().extremal_depths


def subtree_leaf_counts(tree: BinaryTree) -> dict[NodeWord, int]:
    counts = {u: 1 for u in tree.leaves}
    for u in sorted(tree.internal, key=lambda w: -w.depth):
        counts[u] = counts[u.child(0)] + counts[u.child(1)]
    return counts


def external_path_length(tree: BinaryTree) -> int:
    return tree.profile().external_path_length
