import logging
from contextlib import asynccontextmanager
from typing import AsyncIterator, Optional

import httpx

from ctxpress.core.config import settings
from ctxpress.schemas.config import EmbeddingProviderSpec
from ctxpress.services.embedding_service import EmbeddingCache, EmbeddingService, build_provider

logger = logging.getLogger(__name__)


@asynccontextmanager
async def provider_session(
    spec: EmbeddingProviderSpec,
    cache_dir: Optional[str] = None,
    transport: Optional[httpx.AsyncBaseTransport] = None,
) -> AsyncIterator[EmbeddingService]:
    """Open the embedding provider (and cache) for a run and close it afterwards"""
    cache_dir = cache_dir or settings.cache_dir
    cache = EmbeddingCache(cache_dir) if cache_dir else None
    service = EmbeddingService(spec, provider=build_provider(spec, transport=transport), cache=cache)
    logger.info(
        "[OK] Embedding provider ready: %s (d=%d, cache=%s)",
        spec.kind, spec.dimension, cache_dir or "off",
    )
    try:
        yield service
    finally:
        await service.aclose()
        logger.info("[OK] Embedding provider closed")
