from typing import Optional

from dotenv import load_dotenv
from pydantic import AliasChoices, Field
from pydantic_settings import BaseSettings, SettingsConfigDict

load_dotenv()


class Settings(BaseSettings):
    """Process-level settings read from the environment and .env"""

    model_config = SettingsConfigDict(
        env_prefix="CTXPRESS_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

    # App Info
    app_name: str = "ctxpress"
    app_version: str = "1.0.0"
    description: str = "Structure-aware, training-free context compression"

    # Remote embedding service
    embed_api_key: str = ""
    embed_endpoint: str = "http://localhost:8080/embed"
    embed_timeout: float = 30.0
    embed_retry_backoff: float = 0.5

    # OpenAI embeddings
    openai_api_key: str = Field(
        default="",
        validation_alias=AliasChoices("OPENAI_API_KEY", "CTXPRESS_OPENAI_API_KEY"),
    )
    openai_model: str = "text-embedding-3-large"

    # Runtime
    cache_dir: Optional[str] = None
    log_level: str = "INFO"
    jobs: int = 1


settings = Settings()
