"""The provenance registry: prefix-bucketed BK-trees kept in lockstep with
a commitment trie and an append-only ledger.

Registration inserts a hash into the BK-tree of its bucket, recomputes the
bucket digest, commits the new root, and appends a ledger record -- the
ledger append is the commit point, so observers never see a half-applied
registration.  Verification searches the home bucket first (a distance-0
hit short-circuits; an exact match elsewhere is impossible because
distance 0 forces an identical prefix), then expands to every bucket key
within the configured bit-flip tolerance and thresholds the minimum
distance found.

Writers are mutually exclusive; readers run concurrently and only ever
observe fully committed state.
"""

from __future__ import annotations

import hashlib
import json
import threading
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from itertools import chain
from pathlib import Path

from .bktree import BkTree, canonical_serialization, parse_serialization
from .commitment import (
    EMPTY_ROOT,
    BucketCommitment,
    CommitmentTrie,
    InclusionProof,
    Ledger,
    bucket_digest,
)
from .errors import IntegrityError, NotFoundError, StorageError
from .hashing import PerceptualHash, SimilarityScore, similarity_score
from .prefix import (
    MAX_FLIP_TOLERANCE,
    PREFIX_SPACE,
    PrefixScheme,
    enumerate_neighbors,
    extract_prefix,
    prefix_from_hex,
    prefix_to_hex,
)

SNAPSHOT_FORMAT = 1

_HEADER_FILE = "header.json"
_ENTRIES_FILE = "entries.jsonl"
_LEDGER_FILE = "ledger.log"
_BUCKET_DIR = "buckets"


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


@dataclass(frozen=True, slots=True)
class RegistryConfig:
    """Per-registry parameters, fixed at creation.

    The bit-flip tolerance bounds which neighbor buckets a query searches;
    the Hamming threshold ``tau`` decides matches.  The two are independent
    knobs: search scope and match strictness tune separately.
    """

    scheme: PrefixScheme = PrefixScheme.DISCONTINUOUS
    flip_tolerance: int = 2
    tau: int = 6

    def __post_init__(self) -> None:
        object.__setattr__(self, "scheme", PrefixScheme(self.scheme))
        if not 0 <= self.flip_tolerance <= MAX_FLIP_TOLERANCE:
            raise ValueError(f"flip_tolerance out of range: {self.flip_tolerance}")
        if not 0 <= self.tau <= 64:
            raise ValueError(f"tau out of range [0, 64]: {self.tau}")

    def to_json(self) -> dict:
        return {
            "scheme": self.scheme.value,
            "flip_tolerance": self.flip_tolerance,
            "tau": self.tau,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RegistryConfig":
        return cls(
            scheme=PrefixScheme(obj["scheme"]),
            flip_tolerance=int(obj["flip_tolerance"]),
            tau=int(obj["tau"]),
        )


@dataclass(frozen=True, slots=True)
class RegistryEntry:
    """A registered hash plus its provenance metadata."""

    entry_id: int
    hash: PerceptualHash
    created_at: str
    platform_id: str
    extra: dict | None = None

    def to_json(self) -> dict:
        return {
            "entry_id": self.entry_id,
            "hash": self.hash.hex,
            "created_at": self.created_at,
            "platform_id": self.platform_id,
            "extra": self.extra,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RegistryEntry":
        return cls(
            entry_id=int(obj["entry_id"]),
            hash=PerceptualHash.from_hex(obj["hash"]),
            created_at=obj["created_at"],
            platform_id=obj["platform_id"],
            extra=obj.get("extra"),
        )


class Outcome(str, Enum):
    EXACT_MATCH = "exact_match"
    POTENTIAL_MATCH = "potential_match"
    NON_MATCH = "non_match"


@dataclass(frozen=True, slots=True)
class Verdict:
    """Result of one verification query.

    ``candidates_checked`` counts the entries stored in every searched
    bucket (the candidate pool the minimum is taken over);
    ``buckets_searched`` counts the bucket keys looked up, so it equals 1
    on an exact-match short-circuit and the full neighbor count otherwise.
    """

    outcome: Outcome
    min_distance: int | None
    similarity: SimilarityScore | None
    matched_entry: RegistryEntry | None
    buckets_searched: int
    candidates_checked: int

    def to_json(self) -> dict:
        return {
            "outcome": self.outcome.value,
            "min_distance": self.min_distance,
            "similarity": self.similarity.percent if self.similarity else None,
            "matched": self.matched_entry.to_json() if self.matched_entry else None,
            "buckets_searched": self.buckets_searched,
            "candidates_checked": self.candidates_checked,
        }


@dataclass(frozen=True)
class RegistryStats:
    """Occupancy summary: total entries and the per-bucket histogram."""

    total_entries: int
    nonempty_buckets: int
    histogram: dict[int, int] = field(default_factory=dict)

    @property
    def mean_occupancy(self) -> float:
        """Average entries per bucket over the full 2^16 key space."""
        return self.total_entries / PREFIX_SPACE


class _RWLock:
    """Many readers or one writer."""

    def __init__(self) -> None:
        self._cond = threading.Condition()
        self._readers = 0
        self._writing = False

    @contextmanager
    def read(self):
        with self._cond:
            while self._writing:
                self._cond.wait()
            self._readers += 1
        try:
            yield
        finally:
            with self._cond:
                self._readers -= 1
                if self._readers == 0:
                    self._cond.notify_all()

    @contextmanager
    def write(self):
        with self._cond:
            while self._writing or self._readers:
                self._cond.wait()
            self._writing = True
        try:
            yield
        finally:
            with self._cond:
                self._writing = False
                self._cond.notify_all()


class Registry:
    """In-memory registry with an optional ledger file behind it."""

    def __init__(
        self, config: RegistryConfig | None = None, ledger_path: str | Path | None = None
    ) -> None:
        self.config = config if config is not None else RegistryConfig()
        self._buckets: dict[int, BkTree] = {}
        self._entries: dict[int, RegistryEntry] = {}
        self._versions: dict[int, int] = {}
        self._trie = CommitmentTrie()
        self._ledger = Ledger(ledger_path)
        self._next_entry_id = 0
        self._lock = _RWLock()
        if len(self._ledger) > 0:
            raise IntegrityError(
                "ledger file already has records; use Registry.restore for existing state"
            )

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def ledger(self) -> Ledger:
        return self._ledger

    def root(self) -> bytes:
        """Current root commitment."""
        with self._lock.read():
            return self._trie.root

    def get_entry(self, entry_id: int) -> RegistryEntry:
        with self._lock.read():
            try:
                return self._entries[entry_id]
            except KeyError:
                raise NotFoundError(f"no entry {entry_id}") from None

    def bucket_commitment(self, prefix: int) -> BucketCommitment:
        with self._lock.read():
            digest = self._trie.get_leaf(prefix)
            if digest is None:
                raise NotFoundError(f"no bucket committed at prefix {prefix_to_hex(prefix)}")
            return BucketCommitment(prefix, digest, self._versions[prefix])

    def prove(self, prefix: int) -> InclusionProof:
        with self._lock.read():
            return self._trie.prove(prefix)

    def register(
        self,
        phash: PerceptualHash | int,
        *,
        platform_id: str = "",
        created_at: str | None = None,
        extra: dict | None = None,
    ) -> RegistryEntry:
        """Register a hash; all four effects (tree, digest, root, ledger) land
        atomically or not at all."""
        ph = phash if isinstance(phash, PerceptualHash) else PerceptualHash(int(phash))
        with self._lock.write():
            entry_id = self._next_entry_id
            entry = RegistryEntry(
                entry_id=entry_id,
                hash=ph,
                created_at=created_at if created_at is not None else _utc_now(),
                platform_id=platform_id,
                extra=extra,
            )
            key = extract_prefix(ph.bits, self.config.scheme)
            tree = self._buckets.get(key)
            if tree is None:
                items = iter([(ph.bits, entry_id)])
            else:
                items = chain(tree.items(), [(ph.bits, entry_id)])
            digest = bucket_digest(canonical_serialization(items))
            version = self._versions.get(key, 0) + 1
            new_root = self._trie.peek_root(key, digest)
            try:
                self._ledger.append(key, version, new_root)  # commit point
            except OSError as exc:
                raise StorageError(f"ledger append failed: {exc}") from exc
            self._trie.set_leaf(key, digest)
            if tree is None:
                tree = BkTree()
                self._buckets[key] = tree
            tree.insert(ph.bits, entry_id)
            self._versions[key] = version
            self._entries[entry_id] = entry
            self._next_entry_id += 1
            return entry

    def verify(
        self,
        phash: PerceptualHash | int,
        *,
        tau: int | None = None,
        flip_tolerance: int | None = None,
    ) -> Verdict:
        """Decision procedure: exact-match short-circuit in the home bucket,
        then minimum distance over all buckets within the flip tolerance,
        thresholded at tau.  Ties at equal distance go to the smallest
        (earliest) entry id."""
        tau = self.config.tau if tau is None else tau
        tol = self.config.flip_tolerance if flip_tolerance is None else flip_tolerance
        if not 0 <= tau <= 64:
            raise ValueError(f"tau out of range [0, 64]: {tau}")
        qbits = int(phash)
        with self._lock.read():
            home = extract_prefix(qbits, self.config.scheme)
            home_tree = self._buckets.get(home)
            candidates = home_tree.count if home_tree is not None else 0
            best = home_tree.search_best(qbits, 64) if home_tree is not None else None
            if best is not None and best[2] == 0:
                entry = self._entries[best[1]]
                return Verdict(
                    outcome=Outcome.EXACT_MATCH,
                    min_distance=0,
                    similarity=similarity_score(0),
                    matched_entry=entry,
                    buckets_searched=1,
                    candidates_checked=candidates,
                )
            if best is not None:
                best_d, best_id = best[2], best[1]
            else:
                best_d, best_id = None, None
            neighbors = enumerate_neighbors(home, tol)
            for key in neighbors:
                if key == home:
                    continue
                tree = self._buckets.get(key)
                if tree is None:
                    continue
                candidates += tree.count
                found = tree.search_best(qbits, 64)
                if found is None:
                    continue
                _, fid, fd = found
                if best_d is None or fd < best_d or (fd == best_d and fid < best_id):
                    best_d, best_id = fd, fid
            if best_d is None or best_d > tau:
                return Verdict(
                    outcome=Outcome.NON_MATCH,
                    min_distance=best_d,
                    similarity=None,
                    matched_entry=None,
                    buckets_searched=len(neighbors),
                    candidates_checked=candidates,
                )
            return Verdict(
                outcome=Outcome.POTENTIAL_MATCH,
                min_distance=best_d,
                similarity=similarity_score(best_d),
                matched_entry=self._entries[best_id],
                buckets_searched=len(neighbors),
                candidates_checked=candidates,
            )

    def stats(self) -> RegistryStats:
        with self._lock.read():
            histogram: dict[int, int] = {}
            total = 0
            for tree in self._buckets.values():
                histogram[tree.count] = histogram.get(tree.count, 0) + 1
                total += tree.count
            return RegistryStats(
                total_entries=total,
                nonempty_buckets=len(self._buckets),
                histogram=histogram,
            )

    # -- persistence ---------------------------------------------------

    def snapshot(self, directory: str | Path) -> None:
        """Write a durable snapshot: header, bucket files, entries, ledger."""
        directory = Path(directory)
        with self._lock.read():
            (directory / _BUCKET_DIR).mkdir(parents=True, exist_ok=True)
            bucket_index: dict[str, dict] = {}
            for key, tree in sorted(self._buckets.items()):
                data = canonical_serialization(tree.items())
                (directory / _BUCKET_DIR / f"{prefix_to_hex(key)}.txt").write_bytes(data)
                bucket_index[prefix_to_hex(key)] = {
                    "version": self._versions[key],
                    "count": tree.count,
                }
            entries_blob = "".join(
                json.dumps(self._entries[eid].to_json(), sort_keys=True) + "\n"
                for eid in sorted(self._entries)
            ).encode("utf-8")
            (directory / _ENTRIES_FILE).write_bytes(entries_blob)
            header = {
                "format_version": SNAPSHOT_FORMAT,
                "config": self.config.to_json(),
                "total_entries": len(self._entries),
                "next_entry_id": self._next_entry_id,
                "root": self._trie.root.hex(),
                "entries_digest": hashlib.sha256(entries_blob).hexdigest(),
                "buckets": bucket_index,
            }
            (directory / _HEADER_FILE).write_text(
                json.dumps(header, sort_keys=True, indent=2) + "\n", encoding="utf-8"
            )
            ledger_target = directory / _LEDGER_FILE
            if self._ledger.path is None or self._ledger.path.resolve() != ledger_target.resolve():
                self._ledger.write_to(ledger_target)
            else:
                self._ledger.flush()

    @classmethod
    def restore(cls, directory: str | Path) -> "Registry":
        """Rebuild a registry from a snapshot, verifying every commitment.

        Any disagreement between files, the recomputed root, and the ledger
        raises IntegrityError; silently-wrong state never loads.
        """
        directory = Path(directory)
        header_path = directory / _HEADER_FILE
        if not header_path.exists():
            raise IntegrityError(f"no snapshot header at {header_path}")
        try:
            header = json.loads(header_path.read_text(encoding="utf-8"))
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise IntegrityError(f"unreadable snapshot header: {exc}") from exc
        if header.get("format_version") != SNAPSHOT_FORMAT:
            raise IntegrityError(f"unsupported snapshot format: {header.get('format_version')}")
        try:
            config = RegistryConfig.from_json(header["config"])
        except (KeyError, ValueError) as exc:
            raise IntegrityError(f"invalid snapshot config: {exc}") from exc

        ledger_path = directory / _LEDGER_FILE
        records = Ledger.read_file(ledger_path) if ledger_path.exists() else []
        ledger_root = records[-1].root if records else EMPTY_ROOT
        if header.get("root") != ledger_root.hex():
            raise IntegrityError("snapshot header root disagrees with ledger root")

        entries_path = directory / _ENTRIES_FILE
        entries_blob = entries_path.read_bytes() if entries_path.exists() else b""
        if hashlib.sha256(entries_blob).hexdigest() != header.get("entries_digest"):
            raise IntegrityError("entries file digest mismatch")
        entries: dict[int, RegistryEntry] = {}
        for line in entries_blob.decode("utf-8").splitlines():
            try:
                entry = RegistryEntry.from_json(json.loads(line))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise IntegrityError(f"malformed entry record: {exc}") from exc
            if entry.entry_id in entries:
                raise IntegrityError(f"duplicate entry id {entry.entry_id}")
            entries[entry.entry_id] = entry
        if len(entries) != header.get("total_entries"):
            raise IntegrityError("entry count disagrees with snapshot header")

        registry = cls.__new__(cls)
        registry.config = config
        registry._entries = entries
        registry._buckets = {}
        registry._versions = {}
        registry._next_entry_id = int(header.get("next_entry_id", 0))
        registry._lock = _RWLock()
        if entries and registry._next_entry_id <= max(entries):
            raise IntegrityError("next_entry_id does not exceed stored entry ids")

        bucket_index = header.get("buckets", {})
        bucket_dir = directory / _BUCKET_DIR
        on_disk = {p.stem for p in bucket_dir.glob("*.txt")} if bucket_dir.exists() else set()
        if on_disk != set(bucket_index):
            raise IntegrityError("bucket files do not match snapshot header index")

        leaves: list[tuple[int, bytes]] = []
        placed = 0
        for prefix_hex, meta in bucket_index.items():
            key = prefix_from_hex(prefix_hex)
            raw = (bucket_dir / f"{prefix_hex}.txt").read_bytes()
            leaves.append((key, bucket_digest(raw)))
            try:
                parsed = parse_serialization(raw)
            except (ValueError, UnicodeDecodeError) as exc:
                raise IntegrityError(f"malformed bucket file {prefix_hex}: {exc}") from exc
            tree = BkTree()
            for bits, ids in parsed:
                if extract_prefix(bits, config.scheme) != key:
                    raise IntegrityError(f"hash {bits:016X} does not belong to bucket {prefix_hex}")
                for eid in ids:
                    entry = entries.get(eid)
                    if entry is None:
                        raise IntegrityError(f"bucket {prefix_hex} references unknown entry {eid}")
                    if entry.hash.bits != bits:
                        raise IntegrityError(f"entry {eid} hash disagrees with bucket {prefix_hex}")
                    tree.insert(bits, eid)
                    placed += 1
            if tree.count != meta.get("count"):
                raise IntegrityError(f"bucket {prefix_hex} count disagrees with header")
            registry._buckets[key] = tree
            registry._versions[key] = int(meta.get("version", 0))
        if placed != len(entries):
            raise IntegrityError("bucket contents do not cover the entry set")

        registry._trie = CommitmentTrie.from_leaves(leaves)
        if registry._trie.root != ledger_root:
            raise IntegrityError("recomputed root does not match the ledger root")
        if records and sum(registry._versions.values()) != len(records):
            raise IntegrityError("bucket versions do not add up to the ledger length")

        registry._ledger = Ledger(ledger_path)
        return registry

    @classmethod
    def create(cls, directory: str | Path, config: RegistryConfig | None = None) -> "Registry":
        """Initialize a fresh directory-backed registry and write its snapshot."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        if (directory / _HEADER_FILE).exists():
            raise StorageError(f"registry already initialized at {directory}")
        registry = cls(config, ledger_path=directory / _LEDGER_FILE)
        registry.snapshot(directory)
        return registry
