"""Disjoint-set forest with path halving and union by size."""

from __future__ import annotations

from collections import defaultdict
from typing import Hashable, Iterable


class UnionFind:
    """Disjoint sets over arbitrary hashable items, created lazily on first use.

    >>> uf = UnionFind()
    >>> uf.union("a", "b")
    >>> uf.union("c", "d")
    >>> uf.connected("a", "b"), uf.connected("a", "c")
    (True, False)
    >>> sorted(sorted(g) for g in uf.groups())
    [['a', 'b'], ['c', 'd']]
    """

    def __init__(self, items: Iterable[Hashable] = ()):
        self._parent: dict = {}
        self._size: dict = {}
        for item in items:
            self.add(item)

    def add(self, x) -> None:
        if x not in self._parent:
            self._parent[x] = x
            self._size[x] = 1

    def find(self, x):
        self.add(x)
        parent = self._parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, x, y) -> None:
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return
        if self._size[rx] < self._size[ry]:
            rx, ry = ry, rx
        self._parent[ry] = rx
        self._size[rx] += self._size[ry]

    def connected(self, x, y) -> bool:
        return self.find(x) == self.find(y)

    def groups(self) -> list[set]:
        out = defaultdict(set)
        for x in self._parent:
            out[self.find(x)].add(x)
        return list(out.values())

    def __len__(self) -> int:
        return len(self._parent)
