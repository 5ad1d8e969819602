from typing import Optional

from pydantic import BaseModel, ConfigDict, Field


class RawDocument(BaseModel):
    """Schema for one corpus record"""
    doc_id: str
    text: str
    query: Optional[str] = None
    reference: Optional[str] = None


class Sentence(BaseModel):
    """Schema for a segmented sentence (a graph node)"""
    model_config = ConfigDict(frozen=True)

    index: int = Field(ge=0)
    text: str = Field(min_length=1)
    token_count: int = Field(ge=1)
