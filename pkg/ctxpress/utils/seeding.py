import hashlib
import random

from ctxpress.schemas.config import DEFAULT_SEED


def derive_seed(seed: int = DEFAULT_SEED, doc_id: str = "") -> int:
    """Stable 64-bit seed for one document's random stream"""
    digest = hashlib.blake2b(f"{seed}:{doc_id}".encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def derive_rng(seed: int = DEFAULT_SEED, doc_id: str = "") -> random.Random:
    return random.Random(derive_seed(seed, doc_id))
