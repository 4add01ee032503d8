"""Burkhard-Keller tree over 64-bit hashes with the Hamming metric.

Each child hangs off its parent at an edge labeled with their exact
distance, so a radius query can discard every edge ``k`` with
``|k - d(query, node)| > radius`` (triangle inequality).  Hashes are plain
ints here; callers wrap and unwrap their richer types at the boundary.

Duplicate hashes are kept as extra payloads on the existing node, and
there is no deletion: the registry built on top is append-only.
"""

from __future__ import annotations

from bisect import bisect_left, insort
from dataclasses import dataclass, field
from typing import Iterable, Iterator


@dataclass
class SearchStats:
    """Optional instrumentation collected during a search."""

    nodes_visited: int = 0


class BkNode:
    """One stored hash plus its payloads and distance-labeled children."""

    __slots__ = ("bits", "payloads", "_child_dists", "_child_nodes")

    def __init__(self, bits: int, payload: int) -> None:
        self.bits = bits
        self.payloads = [payload]
        # parallel lists sorted by edge distance; distances unique per node
        self._child_dists: list[int] = []
        self._child_nodes: list[BkNode] = []

    def children(self) -> Iterator[tuple[int, "BkNode"]]:
        """Child edges in ascending distance order."""
        return zip(self._child_dists, self._child_nodes)


@dataclass
class BkTree:
    """BK-tree over 64-bit ints; payloads are opaque entry ids."""

    root: BkNode | None = None
    count: int = 0

    def insert(self, bits: int, payload: int) -> None:
        """Add an entry; an already-present hash gains an extra payload."""
        self.count += 1
        if self.root is None:
            self.root = BkNode(bits, payload)
            return
        node = self.root
        while True:
            d = (node.bits ^ bits).bit_count()
            if d == 0:
                insort(node.payloads, payload)
                return
            i = bisect_left(node._child_dists, d)
            if i < len(node._child_dists) and node._child_dists[i] == d:
                node = node._child_nodes[i]
            else:
                node._child_dists.insert(i, d)
                node._child_nodes.insert(i, BkNode(bits, payload))
                return

    def search_radius(
        self, query: int, radius: int, stats: SearchStats | None = None
    ) -> list[tuple[int, int, int]]:
        """All stored entries within ``radius``, as (hash, payload, distance).

        The result set exactly equals the brute-force set; only the visit
        order depends on tree shape (children ascending by edge distance).
        """
        if not 0 <= radius <= 64:
            raise ValueError(f"radius out of range [0, 64]: {radius}")
        results: list[tuple[int, int, int]] = []
        if self.root is None:
            return results
        visited = 0
        stack = [self.root]
        while stack:
            node = stack.pop()
            visited += 1
            d = (node.bits ^ query).bit_count()
            if d <= radius:
                results.extend((node.bits, p, d) for p in node.payloads)
            lo = d - radius
            hi = d + radius
            dists = node._child_dists
            i = bisect_left(dists, lo)
            while i < len(dists) and dists[i] <= hi:
                stack.append(node._child_nodes[i])
                i += 1
        if stats is not None:
            stats.nodes_visited += visited
        return results

    def search_best(
        self, query: int, max_radius: int = 64, stats: SearchStats | None = None
    ) -> tuple[int, int, int] | None:
        """Entry at the minimum distance, provided that minimum <= max_radius.

        Ties at equal distance resolve to the smallest payload id.  Returns
        (hash, payload, distance) or None.
        """
        if not 0 <= max_radius <= 64:
            raise ValueError(f"max_radius out of range [0, 64]: {max_radius}")
        if self.root is None:
            return None
        best_d = max_radius
        best: tuple[int, int] | None = None  # (bits, payload)
        visited = 0
        stack = [self.root]
        while stack:
            node = stack.pop()
            visited += 1
            d = (node.bits ^ query).bit_count()
            if d < best_d or (d == best_d and (best is None or node.payloads[0] < best[1])):
                best_d = d
                best = (node.bits, node.payloads[0])
            lo = d - best_d
            hi = d + best_d
            dists = node._child_dists
            i = bisect_left(dists, lo)
            while i < len(dists) and dists[i] <= hi:
                stack.append(node._child_nodes[i])
                i += 1
        if stats is not None:
            stats.nodes_visited += visited
        if best is None:
            return None
        return best[0], best[1], best_d

    def walk(self) -> Iterator[tuple[int, list[int], int]]:
        """Pre-order record stream: (hash, payloads, edge distance from parent).

        The root record carries edge distance 0; children follow in
        ascending edge order.
        """
        if self.root is None:
            return
        stack: list[tuple[BkNode, int]] = [(self.root, 0)]
        while stack:
            node, edge = stack.pop()
            yield node.bits, list(node.payloads), edge
            for d, child in reversed(list(node.children())):
                stack.append((child, d))

    def items(self) -> Iterator[tuple[int, int]]:
        """Every stored (hash, payload) pair, tree order."""
        for bits, payloads, _ in self.walk():
            for p in payloads:
                yield bits, p


def canonical_serialization(items: Iterable[tuple[int, int]]) -> bytes:
    """Insertion-order-independent byte form of a tree's content set.

    One line per distinct hash, sorted by hash value, payload ids sorted
    ascending: ``<16 hex digits> <id>,<id>,...``.  This is the form the
    commitment layer digests and the snapshot bucket files store.
    """
    grouped: dict[int, list[int]] = {}
    for bits, payload in items:
        grouped.setdefault(bits, []).append(payload)
    lines = []
    for bits in sorted(grouped):
        ids = ",".join(str(p) for p in sorted(grouped[bits]))
        lines.append(f"{bits:016X} {ids}\n")
    return "".join(lines).encode("ascii")


def parse_serialization(data: bytes) -> list[tuple[int, list[int]]]:
    """Inverse of :func:`canonical_serialization`; raises ValueError on junk."""
    out: list[tuple[int, list[int]]] = []
    for lineno, line in enumerate(data.decode("ascii").splitlines(), start=1):
        parts = line.split(" ")
        if len(parts) != 2 or len(parts[0]) != 16:
            raise ValueError(f"malformed bucket record on line {lineno}: {line!r}")
        bits = int(parts[0], 16)
        ids = [int(p) for p in parts[1].split(",")]
        out.append((bits, ids))
    return out


def tree_from_items(items: Iterable[tuple[int, int]]) -> BkTree:
    """Build a tree by inserting pairs in iteration order."""
    tree = BkTree()
    for bits, payload in items:
        tree.insert(bits, payload)
    return tree
