import asyncio
import hashlib
import logging
import os
import struct
import tempfile
from pathlib import Path
from typing import List, Optional, Sequence

import httpx
import numpy as np
import openai
from sklearn.feature_extraction.text import HashingVectorizer

from ctxpress.core.config import settings
from ctxpress.core.errors import DimensionMismatch, ProviderUnavailable, ZeroVector
from ctxpress.schemas.config import EmbeddingProviderSpec
from ctxpress.services.segmenter_service import truncate_tokens

logger = logging.getLogger(__name__)

ZERO_NORM = 1e-12
CACHE_MAGIC = b"CXEV"
CACHE_HEADER = struct.Struct("<4sIQ")


def l2_normalize(v) -> np.ndarray:
    """
    Scale a vector to unit L2 norm

    Args:
        v: Finite real vector

    Returns:
        np.ndarray: Unit vector with the same direction

    Raises:
        ZeroVector: When the norm is below 1e-12
    """
    v = np.asarray(v, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise ValueError("Vector has non-finite entries")
    norm = float(np.linalg.norm(v))
    if norm < ZERO_NORM:
        raise ZeroVector(f"Vector norm {norm:.3e} is too small to normalize")
    return v / norm


def cosine(a, b) -> float:
    """Cosine of two unit vectors (their dot product)"""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"Cannot compare vectors of shape {a.shape} and {b.shape}")
    return float(np.clip(np.dot(a, b), -1.0, 1.0))


def document_centroid(embeddings) -> np.ndarray:
    """Mean of the embeddings, re-normalized to unit norm"""
    matrix = np.asarray(embeddings, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] < 1:
        raise ValueError("Centroid needs at least one embedding")
    return l2_normalize(matrix.mean(axis=0))


def basis_vector(key: int, dimension: int) -> np.ndarray:
    """Deterministic unit stand-in for vectors that cannot be normalized"""
    vector = np.zeros(dimension, dtype=np.float64)
    vector[key % dimension] = 1.0
    return vector


def check_rows(vectors: List[List[float]], dimension: int) -> List[List[float]]:
    """Raise DimensionMismatch unless every provider row has ``dimension`` entries"""
    for position, vector in enumerate(vectors):
        if len(vector) != dimension:
            raise DimensionMismatch(f"Provider row {position} has {len(vector)} entries, expected {dimension}")
    return vectors


class EmbeddingCache:
    """
    Content-addressed on-disk vector store.

    Each file holds a 16-byte header (magic "CXEV", u32 d, u64 reserved)
    followed by d little-endian float32 values. Writes go through a
    temporary file and an atomic rename, so concurrent writers of the same
    key leave one complete file behind.
    """

    def __init__(self, directory: str):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def key(kind: str, dimension: int, text: str) -> str:
        digest = hashlib.sha256(f"{kind}\x00{dimension}\x00{text}".encode("utf-8"))
        return digest.hexdigest()

    def _path(self, key: str) -> Path:
        return self.directory / key[:2] / f"{key}.cxev"

    def get(self, key: str, dimension: int) -> Optional[np.ndarray]:
        path = self._path(key)
        try:
            payload = path.read_bytes()
        except FileNotFoundError:
            return None
        if len(payload) != CACHE_HEADER.size + 4 * dimension:
            logger.warning("Ignoring truncated cache entry %s", path)
            return None
        magic, stored_dim, _ = CACHE_HEADER.unpack_from(payload)
        if magic != CACHE_MAGIC or stored_dim != dimension:
            logger.warning("Ignoring foreign cache entry %s", path)
            return None
        return np.frombuffer(payload, dtype="<f4", offset=CACHE_HEADER.size).astype(np.float32)

    def put(self, key: str, vector: np.ndarray) -> None:
        path = self._path(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        vector = np.asarray(vector, dtype="<f4")
        payload = CACHE_HEADER.pack(CACHE_MAGIC, vector.shape[0], 0) + vector.tobytes()
        handle, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            with os.fdopen(handle, "wb") as out:
                out.write(payload)
            os.replace(tmp, path)
        except OSError:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


class LocalHashProvider:
    """Offline provider: signed feature hashing of unigram (+bigram) counts"""

    def __init__(self, spec: EmbeddingProviderSpec):
        self.spec = spec
        self.vectorizer = HashingVectorizer(
            n_features=spec.dimension,
            ngram_range=(1, spec.ngram_max),
            token_pattern=r"(?u)\b\w+\b",
            lowercase=True,
            stop_words="english",
            alternate_sign=True,
            norm=None,
        )

    async def encode(self, texts: List[str]) -> np.ndarray:
        return self.vectorizer.transform(texts).toarray()

    async def aclose(self) -> None:
        return None


class RemoteHttpProvider:
    """
    Remote provider speaking ``POST {"inputs": [...]}`` -> ``{"vectors": [[...]]}``.

    Batches run concurrently up to ``spec.parallelism``; each batch is retried
    ``spec.max_retries`` times with exponential backoff.
    """

    def __init__(
        self,
        spec: EmbeddingProviderSpec,
        transport: Optional[httpx.AsyncBaseTransport] = None,
        backoff: Optional[float] = None,
    ):
        self.spec = spec
        self.endpoint = spec.endpoint or settings.embed_endpoint
        self.backoff = settings.embed_retry_backoff if backoff is None else backoff
        headers = {"Content-Type": "application/json"}
        if settings.embed_api_key:
            headers["Authorization"] = f"Bearer {settings.embed_api_key}"
        self.client = httpx.AsyncClient(
            headers=headers, timeout=settings.embed_timeout, transport=transport
        )
        self.semaphore = asyncio.Semaphore(spec.parallelism)

    async def _post_batch(self, batch: List[str]) -> List[List[float]]:
        attempts = self.spec.max_retries + 1
        async with self.semaphore:
            for attempt in range(attempts):
                try:
                    response = await self.client.post(self.endpoint, json={"inputs": batch})
                    response.raise_for_status()
                    vectors = response.json()["vectors"]
                    if len(vectors) != len(batch):
                        raise ProviderUnavailable(
                            f"Provider returned {len(vectors)} vectors for {len(batch)} inputs"
                        )
                    return check_rows(vectors, self.spec.dimension)
                except (httpx.HTTPError, KeyError, ValueError) as e:
                    if attempt == attempts - 1:
                        raise ProviderUnavailable(
                            f"Embedding endpoint {self.endpoint} failed after {attempts} attempts: {e}"
                        ) from e
                    delay = self.backoff * (2 ** attempt)
                    logger.warning("[INFO] Embedding request failed (%s), retrying in %.2fs", e, delay)
                    await asyncio.sleep(delay)

    async def encode(self, texts: List[str]) -> np.ndarray:
        size = self.spec.batch_size
        batches = [texts[i: i + size] for i in range(0, len(texts), size)]
        results = await asyncio.gather(*(self._post_batch(batch) for batch in batches))
        return np.asarray([vector for batch in results for vector in batch], dtype=np.float64)

    async def aclose(self) -> None:
        await self.client.aclose()


class OpenAIProvider:
    """Provider backed by the OpenAI embeddings endpoint"""

    def __init__(self, spec: EmbeddingProviderSpec):
        self.spec = spec
        self.model = spec.model or settings.openai_model
        self.client = openai.AsyncOpenAI(api_key=settings.openai_api_key or None)
        self.semaphore = asyncio.Semaphore(spec.parallelism)

    async def _embed_batch(self, batch: List[str]) -> List[List[float]]:
        async with self.semaphore:
            try:
                response = await self.client.embeddings.create(
                    model=self.model, input=batch, dimensions=self.spec.dimension
                )
            except openai.OpenAIError as e:
                raise ProviderUnavailable(f"OpenAI embeddings failed: {e}") from e
        vectors = [item.embedding for item in sorted(response.data, key=lambda item: item.index)]
        return check_rows(vectors, self.spec.dimension)

    async def encode(self, texts: List[str]) -> np.ndarray:
        size = self.spec.batch_size
        batches = [texts[i: i + size] for i in range(0, len(texts), size)]
        results = await asyncio.gather(*(self._embed_batch(batch) for batch in batches))
        return np.asarray([vector for batch in results for vector in batch], dtype=np.float64)

    async def aclose(self) -> None:
        await self.client.close()


def build_provider(spec: EmbeddingProviderSpec, transport: Optional[httpx.AsyncBaseTransport] = None):
    """Instantiate the provider named by ``spec.kind``"""
    if spec.kind == "local-hash":
        return LocalHashProvider(spec)
    if spec.kind == "remote-http":
        return RemoteHttpProvider(spec, transport=transport)
    if spec.kind == "openai":
        return OpenAIProvider(spec)
    raise ValueError(f"Unknown provider kind {spec.kind!r}")


class EmbeddingService:
    """Service producing unit-norm sentence and query embeddings"""

    def __init__(self, spec: EmbeddingProviderSpec, provider=None, cache: Optional[EmbeddingCache] = None):
        self.spec = spec
        self.provider = provider or build_provider(spec)
        self.cache = cache

    async def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        """
        Embed texts with truncation, caching and normalization

        Args:
            texts (Sequence[str]): Non-empty list of inputs

        Returns:
            np.ndarray: Shape (len(texts), d); row i is the unit embedding of texts[i].
                Rows that normalize to zero are replaced by the basis vector e_(i mod d).
        """
        if not texts:
            raise ValueError("embed_batch needs at least one text")

        d = self.spec.dimension
        truncated = [truncate_tokens(text, self.spec.max_input_tokens) for text in texts]
        keys = [EmbeddingCache.key(self.spec.kind, d, text) for text in truncated]
        vectors: List[Optional[np.ndarray]] = [None] * len(texts)

        if self.cache is not None:
            for position, key in enumerate(keys):
                vectors[position] = self.cache.get(key, d)

        # one request per distinct missing text
        missing = sorted({truncated[p] for p, v in enumerate(vectors) if v is None})
        if missing:
            raw = await self.provider.encode(missing)
            if raw.ndim != 2 or raw.shape[1] != d:
                raise DimensionMismatch(f"Provider returned shape {raw.shape}, expected (*, {d})")
            encoded = {}
            for text, row in zip(missing, raw):
                try:
                    encoded[text] = l2_normalize(row).astype(np.float32)
                except ZeroVector:
                    encoded[text] = None
            for position, text in enumerate(truncated):
                if vectors[position] is None and encoded[text] is not None:
                    vectors[position] = encoded[text]
                    if self.cache is not None:
                        self.cache.put(keys[position], encoded[text])

        matrix = np.zeros((len(texts), d), dtype=np.float64)
        for position, vector in enumerate(vectors):
            if vector is None:
                logger.warning("Input %d has no usable features; using basis vector", position)
                matrix[position] = basis_vector(position, d)
            else:
                matrix[position] = vector
        return matrix

    async def embed_query(self, query: str) -> np.ndarray:
        return (await self.embed_batch([query]))[0]

    async def aclose(self) -> None:
        await self.provider.aclose()
