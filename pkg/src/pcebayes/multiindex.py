"""Multi-indices and graded-lexicographic index sets for Hermite bases."""

from __future__ import annotations

import itertools
import math
from typing import Iterable, Iterator


class MultiIndex:
    """A finitely supported sequence of nonnegative integer exponents.

    Trailing zeros are stripped at construction, so two multi-indices are
    equal exactly when they agree up to trailing zeros.  Entries beyond the
    stored length read as zero.
    """

    __slots__ = ("entries",)

    def __init__(self, entries: Iterable[int] = ()):
        ent = tuple(int(e) for e in entries)
        if any(e < 0 for e in ent):
            raise ValueError(f"multi-index entries must be nonnegative, got {ent}")
        while ent and ent[-1] == 0:
            ent = ent[:-1]
        object.__setattr__(self, "entries", ent)

    def __setattr__(self, name, value):
        raise AttributeError("MultiIndex is immutable")

    @property
    def degree(self) -> int:
        return sum(self.entries)

    @property
    def support_dim(self) -> int:
        """Number of leading germ variables needed to express this index."""
        return len(self.entries)

    def __getitem__(self, k: int) -> int:
        if k < 0:
            raise IndexError("negative germ dimension")
        return self.entries[k] if k < len(self.entries) else 0

    def padded(self, dim: int) -> tuple[int, ...]:
        if dim < len(self.entries):
            raise ValueError(f"cannot pad {self} to {dim} dims")
        return self.entries + (0,) * (dim - len(self.entries))

    def sort_key(self) -> tuple:
        # Graded lexicographic: degree first, then more weight on earlier
        # germ variables first (negated entries compare that way).
        return (self.degree, tuple(-e for e in self.entries))

    def dominated_by(self, other: "MultiIndex") -> bool:
        """Componentwise alpha <= other."""
        return all(e <= other[k] for k, e in enumerate(self.entries))

    def decrements(self) -> Iterator["MultiIndex"]:
        """All indices one unit below this one in a single dimension."""
        for k, e in enumerate(self.entries):
            if e > 0:
                yield MultiIndex(self.entries[:k] + (e - 1,) + self.entries[k + 1:])

    def factorial(self) -> int:
        return math.prod(math.factorial(e) for e in self.entries)

    def __eq__(self, other) -> bool:
        return isinstance(other, MultiIndex) and self.entries == other.entries

    def __hash__(self) -> int:
        return hash(self.entries)

    def __lt__(self, other: "MultiIndex") -> bool:
        return self.sort_key() < other.sort_key()

    def __repr__(self) -> str:
        return f"MultiIndex{self.entries}"


ZERO_INDEX = MultiIndex(())


def unit_index(dim: int) -> MultiIndex:
    """The first-order multi-index selecting germ variable ``dim`` (0-based)."""
    return MultiIndex((0,) * dim + (1,))


class IndexSet:
    """An ordered, downward-closed truncation set of multi-indices.

    Members are kept in graded-lexicographic order.  The set always contains
    the zero index (the constant mode) and is closed under componentwise
    decrements, which the constructor verifies.
    """

    __slots__ = ("members", "germ_dim", "max_degree", "_positions")

    def __init__(self, members: Iterable[MultiIndex], germ_dim: int | None = None):
        uniq = sorted(set(members), key=MultiIndex.sort_key)
        if not uniq or uniq[0] != ZERO_INDEX:
            raise ValueError("index set must contain the zero multi-index")
        support = max(a.support_dim for a in uniq)
        if germ_dim is None:
            germ_dim = support
        elif germ_dim < support:
            raise ValueError(f"germ_dim {germ_dim} below referenced dimension {support}")
        pos = {a: i for i, a in enumerate(uniq)}
        for a in uniq:
            for b in a.decrements():
                if b not in pos:
                    raise ValueError(f"index set not downward closed: {a} without {b}")
        object.__setattr__(self, "members", tuple(uniq))
        object.__setattr__(self, "germ_dim", int(germ_dim))
        object.__setattr__(self, "max_degree", uniq[-1].degree)
        object.__setattr__(self, "_positions", pos)

    def __setattr__(self, name, value):
        raise AttributeError("IndexSet is immutable")

    @classmethod
    def total_degree(cls, germ_dim: int, degree: int) -> "IndexSet":
        """All multi-indices of total degree <= ``degree`` on the first
        ``germ_dim`` germ variables."""
        if germ_dim < 0 or degree < 0:
            raise ValueError("germ_dim and degree must be nonnegative")
        members = [ZERO_INDEX]
        for k in range(1, degree + 1):
            for combo in itertools.combinations_with_replacement(range(germ_dim), k):
                ent = [0] * germ_dim
                for d in combo:
                    ent[d] += 1
                members.append(MultiIndex(ent))
        return cls(members, germ_dim=germ_dim)

    @classmethod
    def closure_of(cls, members: Iterable[MultiIndex],
                   germ_dim: int | None = None) -> "IndexSet":
        """Downward closure of arbitrary members (zero index added)."""
        todo = list(members)
        seen = {ZERO_INDEX}
        while todo:
            a = todo.pop()
            if a in seen:
                continue
            seen.add(a)
            todo.extend(a.decrements())
        return cls(seen, germ_dim=germ_dim)

    def index_of(self, alpha: MultiIndex) -> int:
        return self._positions[alpha]

    def __contains__(self, alpha: MultiIndex) -> bool:
        return alpha in self._positions

    def __iter__(self) -> Iterator[MultiIndex]:
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def __eq__(self, other) -> bool:
        return (isinstance(other, IndexSet) and self.members == other.members
                and self.germ_dim == other.germ_dim)

    def __hash__(self) -> int:
        return hash((self.members, self.germ_dim))

    def union(self, other: "IndexSet") -> "IndexSet":
        return IndexSet(set(self.members) | set(other.members),
                        germ_dim=max(self.germ_dim, other.germ_dim))

    def extend_germ(self, extra_dims: int) -> "IndexSet":
        if extra_dims < 0:
            raise ValueError("extra_dims must be >= 0")
        if extra_dims == 0:
            return self
        return IndexSet(self.members, germ_dim=self.germ_dim + extra_dims)

    def support_dims(self) -> tuple[int, ...]:
        """Germ dimensions actually referenced by some member."""
        dims = set()
        for a in self.members:
            dims.update(k for k, e in enumerate(a.entries) if e > 0)
        return tuple(sorted(dims))

    def __repr__(self) -> str:
        return (f"IndexSet(size={len(self.members)}, germ_dim={self.germ_dim}, "
                f"max_degree={self.max_degree})")
