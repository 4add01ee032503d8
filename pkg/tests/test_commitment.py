from __future__ import annotations

import hashlib
import random

import pytest

from phashreg.bktree import canonical_serialization
from phashreg.commitment import (
    EMPTY_BUCKET_DIGEST,
    EMPTY_ROOT,
    CommitmentTrie,
    InclusionProof,
    Ledger,
    bucket_digest,
    verify_inclusion,
)
from phashreg.errors import IntegrityError, NotFoundError

from .conftest import rand_hashes


def rand_digest(rng: random.Random) -> bytes:
    return hashlib.sha256(rng.randbytes(16)).digest()


class TestBucketDigest:
    def test_empty_bucket_constant_is_stable(self):
        assert bucket_digest(b"") == EMPTY_BUCKET_DIGEST
        assert bucket_digest(canonical_serialization([])) == EMPTY_BUCKET_DIGEST

    def test_one_bit_flip_changes_digest(self):
        h = 0x0123456789ABCDEF
        a = bucket_digest(canonical_serialization([(h, 0)]))
        b = bucket_digest(canonical_serialization([(h ^ 1, 0)]))
        assert a != b

    def test_insertion_order_independent(self):
        items = [(h, i) for i, h in enumerate(rand_hashes(50, seed=101))]
        rng = random.Random(102)
        shuffled = items[:]
        rng.shuffle(shuffled)
        assert bucket_digest(canonical_serialization(items)) == bucket_digest(
            canonical_serialization(sorted(shuffled))
        )

    def test_32_bytes(self):
        assert len(bucket_digest(b"abc")) == 32


class TestCommitmentTrie:
    def test_empty_root_constant(self):
        assert CommitmentTrie().root == EMPTY_ROOT

    def test_first_update_changes_root(self):
        trie = CommitmentTrie()
        root = trie.set_leaf(0xA1F3, bucket_digest(b"x"))
        assert root != EMPTY_ROOT
        assert trie.root == root

    def test_update_order_independent(self):
        rng = random.Random(111)
        pairs = [(rng.randrange(1 << 16), rand_digest(rng)) for _ in range(64)]
        a = CommitmentTrie.from_leaves(pairs)
        shuffled = pairs[:]
        rng.shuffle(shuffled)
        b = CommitmentTrie.from_leaves(shuffled)
        assert a.root == b.root

    def test_reapply_same_leaf_root_unchanged(self):
        trie = CommitmentTrie()
        d = bucket_digest(b"x")
        r1 = trie.set_leaf(7, d)
        r2 = trie.set_leaf(7, d)
        assert r1 == r2

    def test_any_leaf_change_moves_root(self):
        rng = random.Random(112)
        trie = CommitmentTrie()
        for key in range(100):
            trie.set_leaf(key, rand_digest(rng))
        before = trie.root
        trie.set_leaf(50, rand_digest(rng))
        assert trie.root != before

    def test_peek_root_matches_set(self):
        rng = random.Random(113)
        trie = CommitmentTrie()
        for _ in range(50):
            key, d = rng.randrange(1 << 16), rand_digest(rng)
            assert trie.peek_root(key, d) == trie.set_leaf(key, d)

    def test_delete_restores_previous_root(self):
        trie = CommitmentTrie()
        trie.set_leaf(3, bucket_digest(b"a"))
        before = trie.root
        trie.set_leaf(0xFFFF, bucket_digest(b"b"))
        trie.delete_leaf(0xFFFF)
        assert trie.root == before

    def test_rebuild_from_leaves_reproduces_root(self):
        rng = random.Random(114)
        trie = CommitmentTrie()
        for _ in range(500):
            trie.set_leaf(rng.randrange(1 << 16), rand_digest(rng))
        rebuilt = CommitmentTrie.from_leaves(trie.leaves())
        assert rebuilt.root == trie.root


class TestInclusionProofs:
    def test_single_bucket_proof_verifies(self):
        trie = CommitmentTrie()
        d = bucket_digest(b"solo")
        trie.set_leaf(0x0001, d)
        proof = trie.prove(0x0001)
        assert proof.leaf == d
        assert verify_inclusion(proof, trie.root)

    def test_absent_prefix_raises(self):
        with pytest.raises(NotFoundError):
            CommitmentTrie().prove(0x1234)

    def test_thousand_random_buckets_roundtrip(self):
        rng = random.Random(121)
        trie = CommitmentTrie()
        keys = rng.sample(range(1 << 16), 1000)
        for key in keys:
            trie.set_leaf(key, rand_digest(rng))
        for key in rng.sample(keys, 100):
            assert verify_inclusion(trie.prove(key), trie.root)

    def test_corrupted_sibling_fails(self):
        rng = random.Random(122)
        trie = CommitmentTrie()
        for key in range(200):
            trie.set_leaf(key, rand_digest(rng))
        proof = trie.prove(77)
        level = rng.randrange(4)
        slot = rng.randrange(15)
        siblings = [list(s) for s in proof.siblings]
        siblings[level][slot] = bytes(32)
        bad = InclusionProof(
            prefix=proof.prefix,
            siblings=tuple(tuple(s) for s in siblings),
            leaf=proof.leaf,
            root=proof.root,
        )
        assert not verify_inclusion(bad, trie.root)

    def test_wrong_root_fails(self):
        trie = CommitmentTrie()
        trie.set_leaf(9, bucket_digest(b"q"))
        proof = trie.prove(9)
        assert not verify_inclusion(proof, EMPTY_ROOT)

    def test_malformed_proof_false_not_raise(self):
        trie = CommitmentTrie()
        trie.set_leaf(9, bucket_digest(b"q"))
        proof = trie.prove(9)
        truncated = InclusionProof(
            prefix=proof.prefix, siblings=proof.siblings[:2], leaf=proof.leaf, root=proof.root
        )
        assert verify_inclusion(truncated, trie.root) is False

    def test_json_roundtrip(self):
        trie = CommitmentTrie()
        trie.set_leaf(0xBEEF, bucket_digest(b"zz"))
        proof = trie.prove(0xBEEF)
        restored = InclusionProof.from_json(proof.to_json())
        assert restored == proof
        assert verify_inclusion(restored, trie.root)


class TestLedger:
    def test_append_sequences_contiguous(self):
        ledger = Ledger()
        for i in range(5):
            record = ledger.append(prefix=i, version=1, root=bytes(32))
            assert record.sequence == i
        assert len(ledger) == 5

    def test_chain_verifies(self):
        ledger = Ledger()
        rng = random.Random(131)
        for i in range(20):
            ledger.append(prefix=i, version=1, root=rand_digest(rng))
        records = Ledger.verify_chain(ledger.lines())
        assert len(records) == 20
        assert ledger.latest_root() == records[-1].root

    def test_modified_record_detected(self):
        ledger = Ledger()
        rng = random.Random(132)
        for i in range(10):
            ledger.append(prefix=i, version=1, root=rand_digest(rng))
        lines = ledger.lines()
        lines[4] = lines[4].replace(" 1 ", " 2 ", 1)
        with pytest.raises(IntegrityError):
            Ledger.verify_chain(lines)

    def test_deleted_record_detected(self):
        ledger = Ledger()
        rng = random.Random(133)
        for i in range(10):
            ledger.append(prefix=i, version=1, root=rand_digest(rng))
        lines = ledger.lines()
        del lines[3]
        with pytest.raises(IntegrityError):
            Ledger.verify_chain(lines)

    def test_file_backed_roundtrip(self, tmp_path):
        path = tmp_path / "ledger.log"
        ledger = Ledger(path)
        rng = random.Random(134)
        roots = [rand_digest(rng) for _ in range(8)]
        for i, root in enumerate(roots):
            ledger.append(prefix=i, version=1, root=root)
        ledger.close()
        records = Ledger.read_file(path)
        assert [r.root for r in records] == roots
        # a reopened ledger resumes the chain
        resumed = Ledger(path)
        assert len(resumed) == 8
        resumed.append(prefix=99, version=1, root=roots[0])
        resumed.close()
        assert len(Ledger.read_file(path)) == 9

    def test_timestamp_format(self):
        record = Ledger().append(prefix=0, version=1, root=bytes(32))
        assert "T" in record.timestamp and record.timestamp.endswith("+00:00")
