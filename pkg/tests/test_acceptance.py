"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s``.  The million-scale
criteria (05, 06) take several minutes combined on a single core.
"""

from __future__ import annotations

import random
import shutil

import numpy as np
import pytest
from PIL import Image

from phashreg.bktree import BkTree, tree_from_items
from phashreg.commitment import CommitmentTrie, InclusionProof, bucket_digest, verify_inclusion
from phashreg.errors import IntegrityError
from phashreg.harness.bench import IndexStructure, run_latency_bench
from phashreg.harness.sweep import run_sweep
from phashreg.harness.transforms import make_edited_set
from phashreg.hashing import PerceptualHash, similarity_score
from phashreg.prefix import PREFIX_SPACE, PrefixScheme, enumerate_neighbors, extract_prefix
from phashreg.registry import Registry, RegistryConfig

from .conftest import CORPUS_DIR, NEGATIVES_DIR, rand_hashes


def _report(criterion: int, ok: bool, detail: str) -> None:
    print(f"\n[criterion {criterion:02d}] {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {criterion:02d}: {detail}"


def popcount(arr: np.ndarray) -> np.ndarray:
    return np.bitwise_count(arr)


def test_criterion_01_similarity_golden_values():
    got = {d: similarity_score(d).percent for d in (2, 5, 0, 64)}
    ok = got == {2: 96.88, 5: 92.19, 0: 100.00, 64: 0.00}
    _report(1, ok, f"similarity scores {got}")


def test_criterion_02_neighbor_enumeration_counts():
    key = 0x1234
    counts = {t: len(enumerate_neighbors(key, t)) for t in (1, 2, 4)}
    brute_4 = sum(1 for v in range(PREFIX_SPACE) if (v ^ key).bit_count() <= 4)
    ok = counts == {1: 17, 2: 137, 4: 2517} and brute_4 == 2517
    _report(2, ok, f"neighbor counts {counts}, exhaustive-scan oracle at tolerance 4: {brute_4}")


def test_criterion_03_bktree_oracle_equivalence():
    discrepancies = 0
    searches = 0
    for instance in range(20):
        hashes = rand_hashes(10_000, seed=1000 + instance)
        tree = tree_from_items((h, i) for i, h in enumerate(hashes))
        arr = np.array(hashes, dtype=np.uint64)
        rng = random.Random(2000 + instance)
        for qi in range(100):
            if qi % 3 == 0:
                query = rng.getrandbits(64)
            else:  # queries near stored content exercise dense result sets
                base = hashes[rng.randrange(len(hashes))]
                query = base
                for _ in range(rng.randrange(8)):
                    query ^= 1 << rng.randrange(64)
            radius = qi % 13
            got = sorted((p, d) for _, p, d in tree.search_radius(query, radius))
            dists = popcount(arr ^ np.uint64(query))
            want = sorted(
                (int(i), int(dists[i])) for i in np.nonzero(dists <= radius)[0]
            )
            searches += 1
            if got != want:
                discrepancies += 1
    _report(3, discrepancies == 0, f"{searches} radius searches, {discrepancies} discrepancies")


def test_criterion_04_search_scope_correctness():
    discrepancies = 0
    checks = 0
    hashes = rand_hashes(10_000, seed=3000)
    arr = np.array(hashes, dtype=np.uint64)
    rng = random.Random(3001)
    queries = []
    for qi in range(1000):
        if qi % 2 == 0:
            queries.append(rng.getrandbits(64))
        else:
            q = hashes[rng.randrange(len(hashes))]
            for _ in range(rng.randrange(11)):
                q ^= 1 << rng.randrange(64)
            queries.append(q)
    for scheme in PrefixScheme:
        registry = Registry(RegistryConfig(scheme=scheme, flip_tolerance=2, tau=64))
        for h in hashes:
            registry.register(h, created_at="1970-01-01T00:00:00+00:00")
        prefixes = np.array([extract_prefix(h, scheme) for h in hashes], dtype=np.uint64)
        for tolerance in (2, 4):
            for q in queries:
                qp = np.uint64(extract_prefix(q, scheme))
                in_scope = popcount(prefixes ^ qp) <= tolerance
                want = (
                    int(popcount(arr[in_scope] ^ np.uint64(q)).min())
                    if in_scope.any()
                    else None
                )
                got = registry.verify(PerceptualHash(q), flip_tolerance=tolerance).min_distance
                checks += 1
                if got != want:
                    discrepancies += 1
    _report(4, discrepancies == 0,
            f"{checks} verify/oracle comparisons (2 schemes x tolerances 2,4), "
            f"{discrepancies} discrepancies")


def test_criterion_05_bucket_occupancy_and_candidates(tmp_path):
    n = 1_000_000
    registry = Registry(
        RegistryConfig(flip_tolerance=2, tau=64), ledger_path=tmp_path / "ledger.log"
    )
    rng = np.random.default_rng(4000)
    for value in rng.integers(0, 1 << 64, size=n, dtype=np.uint64):
        registry.register(int(value), created_at="1970-01-01T00:00:00+00:00")
    mean_occ = registry.stats().mean_occupancy
    expected_occ = n / PREFIX_SPACE  # 15.2588
    occ_ok = abs(mean_occ - 15.26) <= 0.05 * 15.26

    qrng = random.Random(4001)
    sampled = [qrng.getrandbits(64) for _ in range(200)]
    mean_candidates = np.mean(
        [registry.verify(PerceptualHash(q)).candidates_checked for q in sampled]
    )
    cand_ok = abs(mean_candidates - 2055) <= 0.10 * 2055
    _report(5, occ_ok and cand_ok,
            f"mean occupancy {mean_occ:.4f} (target 15.26 +/- 5%, exact n/k {expected_occ:.4f}); "
            f"mean candidates_checked {mean_candidates:.1f} (target 2055 +/- 10%)")


def test_criterion_06_latency_ordering_at_1m(tmp_path):
    reports = run_latency_bench(
        sizes=(100_000, 500_000, 1_000_000), query_count=50, seed=20260101,
        flip_tolerance=2, ledger_dir=tmp_path,
    )
    at_1m = {r.structure: r for r in reports if r.size == 1_000_000}
    flat = at_1m[IndexStructure.FLAT_ARRAY]
    bk = at_1m[IndexStructure.BK_TREE_ONLY]
    trie = at_1m[IndexStructure.TRIE_BK_TREE]
    ok = trie.avg_ms < flat.avg_ms and trie.avg_ms < bk.avg_ms and trie.avg_ms <= flat.avg_ms / 10
    lines = "; ".join(
        f"{r.structure.value}: avg {r.avg_ms:.3f} ms, p95 {r.p95_ms:.3f} ms"
        for r in (flat, bk, trie)
    )
    _report(6, ok, f"1M entries, 50 queries -> {lines}")


def test_criterion_07_tamper_evidence(tmp_path):
    registry = Registry()
    for h in rand_hashes(10_000, seed=5000):
        registry.register(h, created_at="1970-01-01T00:00:00+00:00")
    snap = tmp_path / "snap"
    registry.snapshot(snap)
    Registry.restore(snap)  # sanity: pristine snapshot loads

    bucket_files = sorted((snap / "buckets").glob("*.txt"))
    rng = random.Random(5001)
    detected = 0
    trials = 50
    for _ in range(trials):
        target = bucket_files[rng.randrange(len(bucket_files))]
        original = target.read_bytes()
        data = bytearray(original)
        # flip one bit of one stored hash: lines are "<16 hex> <ids>"
        lines = original.decode().splitlines()
        line_no = rng.randrange(len(lines))
        offset = sum(len(l) + 1 for l in lines[:line_no]) + rng.randrange(16)
        data[offset] ^= 0x01  # hex digit stays hex: 0<->1, 2<->3, ... E<->F
        target.write_bytes(bytes(data))
        try:
            Registry.restore(snap)
        except IntegrityError:
            detected += 1
        finally:
            target.write_bytes(original)
    _report(7, detected == trials, f"{detected}/{trials} single-bit hash flips detected on restore")


def test_criterion_08_sweep_shape_on_committed_corpus():
    originals = []
    for path in sorted(CORPUS_DIR.glob("*.png")):
        with Image.open(path) as img:
            originals.append(img.convert("RGB"))
    negatives = []
    for path in sorted(NEGATIVES_DIR.glob("*.png")):
        with Image.open(path) as img:
            negatives.append(img.convert("RGB"))
    assert len(originals) >= 100 and len(negatives) >= 100
    edited = [img for _, img in make_edited_set(originals, variants_per_image=3, seed=42)]
    assert len(edited) >= 300

    taus = (2, 6, 10, 15, 20)
    results = run_sweep(originals, edited, negatives, tolerances=(2, 4), taus=taus)
    ok = True
    details = []
    for scheme in (PrefixScheme.DISCONTINUOUS, PrefixScheme.CONTINUOUS):
        for tolerance in (2, 4):
            by_tau = {
                r.tau: r
                for r in results
                if r.scheme is scheme and r.flip_tolerance == tolerance
            }
            ordered = [by_tau[t] for t in taus]
            recalls = [r.recall for r in ordered]
            fprs = [r.fpr for r in ordered]
            combo_ok = (
                recalls == sorted(recalls)
                and fprs == sorted(fprs)
                and by_tau[6].recall > by_tau[2].recall
                and by_tau[20].fpr > by_tau[6].fpr
            )
            ok = ok and combo_ok
            details.append(
                f"{scheme.value}/tol{tolerance}: recall@2={by_tau[2].recall:.3f} "
                f"recall@6={by_tau[6].recall:.3f} fpr@6={by_tau[6].fpr:.3f} "
                f"fpr@20={by_tau[20].fpr:.3f} {'ok' if combo_ok else 'VIOLATED'}"
            )
    _report(8, ok, "; ".join(details))


def test_criterion_09_persistence_roundtrip(tmp_path):
    registry = Registry()
    for h in rand_hashes(10_000, seed=6000):
        registry.register(h, platform_id="gen", created_at="1970-01-01T00:00:00+00:00")
    snap = tmp_path / "snap"
    registry.snapshot(snap)
    restored = Registry.restore(snap)
    root_ok = restored.root() == registry.root()
    queries = rand_hashes(100, seed=6001)
    verdicts_ok = all(
        restored.verify(PerceptualHash(q)).to_json() == registry.verify(PerceptualHash(q)).to_json()
        for q in queries
    )
    _report(9, root_ok and verdicts_ok,
            f"root byte-identical: {root_ok}; 100 query verdicts identical: {verdicts_ok}")


def test_criterion_10_commitment_proofs():
    rng = random.Random(7000)
    trie = CommitmentTrie()
    keys = rng.sample(range(PREFIX_SPACE), 1000)
    for key in keys:
        trie.set_leaf(key, bucket_digest(rng.randbytes(40)))
    root = trie.root

    roundtrips = sum(1 for key in keys if verify_inclusion(trie.prove(key), root))

    corruptions_detected = 0
    for _ in range(100):
        proof = trie.prove(keys[rng.randrange(len(keys))])
        siblings = [[bytearray(s) for s in level] for level in proof.siblings]
        leaf = bytearray(proof.leaf)
        # corrupt one byte somewhere in the verified payload
        field = rng.randrange(61)  # 60 sibling digests + the leaf
        if field == 60:
            leaf[rng.randrange(32)] ^= 1 << rng.randrange(8)
        else:
            siblings[field // 15][field % 15][rng.randrange(32)] ^= 1 << rng.randrange(8)
        corrupted = InclusionProof(
            prefix=proof.prefix,
            siblings=tuple(tuple(bytes(s) for s in level) for level in siblings),
            leaf=bytes(leaf),
            root=proof.root,
        )
        if not verify_inclusion(corrupted, root):
            corruptions_detected += 1
    ok = roundtrips == 1000 and corruptions_detected == 100
    _report(10, ok,
            f"{roundtrips}/1000 proof roundtrips verified; "
            f"{corruptions_detected}/100 single-byte corruptions rejected")
