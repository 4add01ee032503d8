"""Tamper-evidence layer: bucket digests, a commitment trie, and a ledger.

Every prefix bucket is summarized by the SHA-256 of its canonical
serialization.  Bucket digests sit at the leaves of a fixed-depth trie
(arity 16, one level per hex digit of the bucket key) whose internal
digests roll up to a single root commitment.  Each mutation appends a
record to an append-only ledger whose records are digest-chained, so
history rewrites are detectable.  The ledger stands in for an external
consensus layer: it is the local anchor verification runs against.

Absent children hash as fixed per-level constants, and every internal
digest is domain-tagged with its level, so a subtree cannot be replayed
at a different depth.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import IO, Iterable, Iterator

from .errors import IntegrityError, NotFoundError
from .prefix import PREFIX_SPACE, prefix_from_hex, prefix_to_hex

DIGEST_SIZE = 32
TRIE_DEPTH = 4
TRIE_ARITY = 16

_BUCKET_TAG = b"phashreg:bucket:v1\x00"
_NODE_TAG = b"phashreg:node:v1\x00"
_ABSENT_LEAF = hashlib.sha256(b"phashreg:absent-leaf:v1").digest()
_CHAIN_GENESIS = bytes(DIGEST_SIZE)


def bucket_digest(serialized: bytes) -> bytes:
    """32-byte digest of a bucket's canonical serialization."""
    return hashlib.sha256(_BUCKET_TAG + serialized).digest()


EMPTY_BUCKET_DIGEST = bucket_digest(b"")


def _node_digest(level: int, children: Iterable[bytes]) -> bytes:
    h = hashlib.sha256(_NODE_TAG + bytes([level]))
    for child in children:
        h.update(child)
    return h.digest()


def _empty_subtree_digests() -> list[bytes]:
    """digests[level] = digest of an all-absent subtree rooted at that level."""
    digests = [b""] * (TRIE_DEPTH + 1)
    digests[TRIE_DEPTH] = _ABSENT_LEAF
    for level in range(TRIE_DEPTH - 1, -1, -1):
        digests[level] = _node_digest(level, [digests[level + 1]] * TRIE_ARITY)
    return digests


_EMPTY_SUBTREE = _empty_subtree_digests()
EMPTY_ROOT = _EMPTY_SUBTREE[0]


@dataclass(frozen=True, slots=True)
class BucketCommitment:
    """Committed state of one prefix bucket."""

    prefix: int
    digest: bytes
    version: int


@dataclass(frozen=True)
class InclusionProof:
    """Path from one bucket digest up to a claimed root.

    ``siblings[level]`` holds the 15 off-path child digests of the internal
    node at that level, root level first, in child-slot order.
    """

    prefix: int
    siblings: tuple[tuple[bytes, ...], ...]
    leaf: bytes
    root: bytes

    def to_json(self) -> dict:
        return {
            "prefix": prefix_to_hex(self.prefix),
            "path": list(_nibbles(self.prefix)),
            "siblings": [[s.hex() for s in level] for level in self.siblings],
            "leaf": self.leaf.hex(),
            "root": self.root.hex(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "InclusionProof":
        return cls(
            prefix=prefix_from_hex(obj["prefix"]),
            siblings=tuple(
                tuple(bytes.fromhex(s) for s in level) for level in obj["siblings"]
            ),
            leaf=bytes.fromhex(obj["leaf"]),
            root=bytes.fromhex(obj["root"]),
        )


def _nibbles(prefix: int) -> tuple[int, int, int, int]:
    return (prefix >> 12) & 0xF, (prefix >> 8) & 0xF, (prefix >> 4) & 0xF, prefix & 0xF


class CommitmentTrie:
    """Fixed-depth trie of bucket digests with cached internal digests.

    Arity 16, depth 4: the key space is uniform fixed-length, so no path
    compression is needed; any leaf change still propagates to the root.
    """

    def __init__(self) -> None:
        self._leaves: dict[int, bytes] = {}
        # level-L node covers all keys sharing their top 4L bits (L=0: root)
        self._levels: list[dict[int, bytes]] = [{} for _ in range(TRIE_DEPTH)]

    @property
    def root(self) -> bytes:
        return self._levels[0].get(0, EMPTY_ROOT)

    def __len__(self) -> int:
        return len(self._leaves)

    def get_leaf(self, prefix: int) -> bytes | None:
        return self._leaves.get(prefix)

    def leaves(self) -> Iterator[tuple[int, bytes]]:
        return iter(self._leaves.items())

    def _child_digest(self, level: int, path: int) -> bytes:
        """Digest of the node (or leaf) at ``level`` covering ``path``."""
        if level == TRIE_DEPTH:
            return self._leaves.get(path, _ABSENT_LEAF)
        return self._levels[level].get(path, _EMPTY_SUBTREE[level])

    def _recompute_path(self, prefix: int) -> bytes:
        for level in range(TRIE_DEPTH - 1, -1, -1):
            node_path = prefix >> (4 * (TRIE_DEPTH - level))
            base = node_path << 4
            children = (self._child_digest(level + 1, base | i) for i in range(TRIE_ARITY))
            self._levels[level][node_path] = _node_digest(level, children)
        return self.root

    def set_leaf(self, prefix: int, digest: bytes) -> bytes:
        """Install a bucket digest and return the new root."""
        if not 0 <= prefix < PREFIX_SPACE:
            raise ValueError(f"prefix key out of 16-bit range: {prefix}")
        if len(digest) != DIGEST_SIZE:
            raise ValueError(f"digest must be {DIGEST_SIZE} bytes, got {len(digest)}")
        self._leaves[prefix] = digest
        return self._recompute_path(prefix)

    def delete_leaf(self, prefix: int) -> bytes:
        """Remove a leaf (rollback support) and return the new root."""
        self._leaves.pop(prefix, None)
        return self._recompute_path(prefix)

    def peek_root(self, prefix: int, digest: bytes) -> bytes:
        """Root the trie would have after ``set_leaf``, without mutating."""
        child = digest
        for level in range(TRIE_DEPTH - 1, -1, -1):
            node_path = prefix >> (4 * (TRIE_DEPTH - level))
            base = node_path << 4
            slot = (prefix >> (4 * (TRIE_DEPTH - 1 - level))) & 0xF
            children = [self._child_digest(level + 1, base | i) for i in range(TRIE_ARITY)]
            children[slot] = child
            child = _node_digest(level, children)
        return child

    def prove(self, prefix: int) -> InclusionProof:
        """Inclusion proof for a present leaf; proof size is path-length bound."""
        leaf = self._leaves.get(prefix)
        if leaf is None:
            raise NotFoundError(f"no bucket committed at prefix {prefix_to_hex(prefix)}")
        siblings: list[tuple[bytes, ...]] = []
        for level in range(TRIE_DEPTH):
            node_path = prefix >> (4 * (TRIE_DEPTH - level))
            base = node_path << 4
            slot = (prefix >> (4 * (TRIE_DEPTH - 1 - level))) & 0xF
            level_sibs = tuple(
                self._child_digest(level + 1, base | i)
                for i in range(TRIE_ARITY)
                if i != slot
            )
            siblings.append(level_sibs)
        return InclusionProof(prefix=prefix, siblings=tuple(siblings), leaf=leaf, root=self.root)

    @classmethod
    def from_leaves(cls, pairs: Iterable[tuple[int, bytes]]) -> "CommitmentTrie":
        trie = cls()
        for prefix, digest in pairs:
            trie.set_leaf(prefix, digest)
        return trie


def verify_inclusion(proof: InclusionProof, root: bytes) -> bool:
    """True iff the proof's leaf recomputes to ``root``.  Malformed -> False."""
    try:
        if len(proof.siblings) != TRIE_DEPTH or len(proof.leaf) != DIGEST_SIZE:
            return False
        current = proof.leaf
        for level in range(TRIE_DEPTH - 1, -1, -1):
            level_sibs = proof.siblings[level]
            if len(level_sibs) != TRIE_ARITY - 1:
                return False
            slot = (proof.prefix >> (4 * (TRIE_DEPTH - 1 - level))) & 0xF
            children = list(level_sibs[:slot]) + [current] + list(level_sibs[slot:])
            current = _node_digest(level, children)
        return current == root
    except (TypeError, ValueError, IndexError):
        return False


@dataclass(frozen=True, slots=True)
class LedgerRecord:
    """One committed mutation: which bucket changed and the resulting root."""

    sequence: int
    timestamp: str
    prefix: int
    version: int
    root: bytes
    chain: bytes

    def payload(self) -> str:
        return (
            f"{self.sequence} {self.timestamp} {prefix_to_hex(self.prefix)} "
            f"{self.version} {self.root.hex()}"
        )

    def line(self) -> str:
        return f"{self.payload()} {self.chain.hex()}\n"

    @classmethod
    def parse(cls, line: str) -> "LedgerRecord":
        parts = line.split(" ")
        if len(parts) != 6:
            raise IntegrityError(f"malformed ledger line: {line!r}")
        try:
            return cls(
                sequence=int(parts[0]),
                timestamp=parts[1],
                prefix=prefix_from_hex(parts[2]),
                version=int(parts[3]),
                root=bytes.fromhex(parts[4]),
                chain=bytes.fromhex(parts[5]),
            )
        except ValueError as exc:
            raise IntegrityError(f"malformed ledger line: {line!r}") from exc


def _chain_digest(prev_chain: bytes, payload: str) -> bytes:
    return hashlib.sha256(prev_chain + payload.encode("ascii")).digest()


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


class Ledger:
    """Append-only, digest-chained record log.

    With a backing path, records stream straight to disk and only the chain
    tail stays in memory; without one, records accumulate in memory until
    written out by a snapshot.
    """

    def __init__(self, path: str | Path | None = None) -> None:
        self._path = Path(path) if path is not None else None
        self._file: IO[str] | None = None
        self._lines: list[str] = []
        self._count = 0
        self._last_chain = _CHAIN_GENESIS
        self._last_root: bytes | None = None
        if self._path is not None and self._path.exists():
            records = self.read_file(self._path)
            if records:
                self._count = records[-1].sequence + 1
                self._last_chain = records[-1].chain
                self._last_root = records[-1].root

    def __len__(self) -> int:
        return self._count

    @property
    def path(self) -> Path | None:
        return self._path

    def latest_root(self) -> bytes | None:
        return self._last_root

    def append(
        self, prefix: int, version: int, root: bytes, timestamp: str | None = None
    ) -> LedgerRecord:
        """Write one record; raises StorageError-compatible OSError on I/O failure."""
        record = LedgerRecord(
            sequence=self._count,
            timestamp=timestamp if timestamp is not None else _utc_now(),
            prefix=prefix,
            version=version,
            root=root,
            chain=_CHAIN_GENESIS,
        )
        chain = _chain_digest(self._last_chain, record.payload())
        record = LedgerRecord(
            record.sequence, record.timestamp, record.prefix, record.version, record.root, chain
        )
        line = record.line()
        if self._path is not None:
            if self._file is None:
                self._file = open(self._path, "a", encoding="ascii")
            self._file.write(line)
            self._file.flush()
        else:
            self._lines.append(line)
        self._count += 1
        self._last_chain = chain
        self._last_root = root
        return record

    def lines(self) -> list[str]:
        """All record lines (reads the backing file when one is attached)."""
        if self._path is not None:
            self.flush()
            if not self._path.exists():
                return []
            with open(self._path, encoding="ascii") as f:
                return f.readlines()
        return list(self._lines)

    def write_to(self, path: str | Path) -> None:
        with open(path, "w", encoding="ascii") as f:
            f.writelines(self.lines())

    def flush(self) -> None:
        if self._file is not None:
            self._file.flush()

    def close(self) -> None:
        if self._file is not None:
            self._file.close()
            self._file = None

    @staticmethod
    def verify_chain(lines: Iterable[str]) -> list[LedgerRecord]:
        """Re-derive the digest chain; any edit to a past record fails."""
        records: list[LedgerRecord] = []
        prev_chain = _CHAIN_GENESIS
        for expected_seq, line in enumerate(lines):
            record = LedgerRecord.parse(line.rstrip("\n"))
            if record.sequence != expected_seq:
                raise IntegrityError(
                    f"ledger sequence gap: expected {expected_seq}, found {record.sequence}"
                )
            chain = _chain_digest(prev_chain, record.payload())
            if chain != record.chain:
                raise IntegrityError(f"ledger chain broken at sequence {record.sequence}")
            records.append(record)
            prev_chain = chain
        return records

    @classmethod
    def read_file(cls, path: str | Path) -> list[LedgerRecord]:
        with open(path, encoding="ascii") as f:
            return cls.verify_chain(f.readlines())
