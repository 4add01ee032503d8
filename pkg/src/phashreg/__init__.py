"""Perceptual-hash provenance registry.

Computes similarity-preserving 64-bit image hashes, stores them in a
prefix-bucketed metric index with per-bucket digests rolled up to a root
commitment, and answers verification queries with a Hamming-threshold
decision and a similarity score.
"""

from .bktree import BkNode, BkTree, SearchStats, canonical_serialization
from .commitment import (
    EMPTY_BUCKET_DIGEST,
    EMPTY_ROOT,
    BucketCommitment,
    CommitmentTrie,
    InclusionProof,
    Ledger,
    LedgerRecord,
    bucket_digest,
    verify_inclusion,
)
from .errors import (
    IntegrityError,
    InvalidImageError,
    NotFoundError,
    RegistryError,
    StorageError,
)
from .hashing import (
    HASH_BITS,
    GrayImage,
    PerceptualHash,
    SimilarityScore,
    compute_phash,
    hamming_distance,
    hash_image_bytes,
    hash_image_file,
    phash_from_gray,
    similarity_score,
)
from .prefix import (
    PREFIX_SPACE,
    PrefixKey,
    PrefixScheme,
    enumerate_neighbors,
    extract_prefix,
    neighbor_count,
    prefix_from_hex,
    prefix_to_hex,
)
from .registry import (
    Outcome,
    Registry,
    RegistryConfig,
    RegistryEntry,
    RegistryStats,
    Verdict,
)

__version__ = "0.1.0"

__all__ = [
    "BkNode",
    "BkTree",
    "BucketCommitment",
    "CommitmentTrie",
    "EMPTY_BUCKET_DIGEST",
    "EMPTY_ROOT",
    "GrayImage",
    "HASH_BITS",
    "InclusionProof",
    "IntegrityError",
    "InvalidImageError",
    "Ledger",
    "LedgerRecord",
    "NotFoundError",
    "Outcome",
    "PREFIX_SPACE",
    "PerceptualHash",
    "PrefixKey",
    "PrefixScheme",
    "Registry",
    "RegistryConfig",
    "RegistryEntry",
    "RegistryError",
    "RegistryStats",
    "SearchStats",
    "SimilarityScore",
    "StorageError",
    "Verdict",
    "bucket_digest",
    "canonical_serialization",
    "compute_phash",
    "enumerate_neighbors",
    "extract_prefix",
    "hamming_distance",
    "hash_image_bytes",
    "hash_image_file",
    "neighbor_count",
    "phash_from_gray",
    "prefix_from_hex",
    "prefix_to_hex",
    "similarity_score",
    "verify_inclusion",
]
