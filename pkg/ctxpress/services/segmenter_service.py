import logging
import re
from functools import lru_cache
from typing import FrozenSet, Iterable, List, Optional

from ctxpress.core.errors import EmptyDocument, VocabLoadError
from ctxpress.schemas.config import TokenizerSpec
from ctxpress.schemas.documents import RawDocument, Sentence

logger = logging.getLogger(__name__)

TOKEN_PATTERN = re.compile(r"\w+|[^\w\s]")

# terminal punctuation, optional closing quotes/brackets, whitespace,
# then an uppercase letter or an opening quote/bracket
BOUNDARY_PATTERN = re.compile(r"[.!?]+[\"'”’)\]]*\s+(?=[\"'“‘(\[]?[A-Z])")

DEFAULT_ABBREVIATIONS: FrozenSet[str] = frozenset({
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "etc", "e.g", "i.e",
    "fig", "figs", "eq", "eqs", "no", "vol", "al", "approx", "dept", "inc", "ltd",
    "co", "corp", "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept",
    "oct", "nov", "dec", "u.s", "sec", "ch", "pp", "cf",
})

UNKNOWN_PIECE_COST = 1


class Tokenizer:
    """Deterministic token counter for a TokenizerSpec"""

    def __init__(self, spec: Optional[TokenizerSpec] = None):
        self.spec = spec or TokenizerSpec()
        self.vocab = _load_vocab(self.spec.vocab_path) if self.spec.kind == "vocab-file" else None

    def tokens(self, text: str) -> List[str]:
        """Whitespace-punct tokens: word runs, each punctuation mark on its own"""
        return TOKEN_PATTERN.findall(text)

    def count(self, text: str) -> int:
        words = self.tokens(text)
        if self.vocab is None:
            return len(words)
        return sum(_wordpiece_count(word, self.vocab) for word in words)


@lru_cache(maxsize=8)
def _load_vocab(path: str) -> FrozenSet[str]:
    try:
        with open(path, encoding="utf-8") as handle:
            vocab = frozenset(line.strip() for line in handle if line.strip())
    except OSError as e:
        raise VocabLoadError(f"Cannot read vocabulary {path}: {e}") from e
    if not vocab:
        raise VocabLoadError(f"Vocabulary {path} is empty")
    logger.info("[OK] Loaded %d vocabulary entries from %s", len(vocab), path)
    return vocab


def _wordpiece_count(word: str, vocab: FrozenSet[str]) -> int:
    """Greedy longest-match-first subword count; continuation pieces use '##'"""
    count, start = 0, 0
    while start < len(word):
        end = len(word)
        while end > start:
            piece = word[start:end] if start == 0 else "##" + word[start:end]
            if piece in vocab or piece.lower() in vocab:
                break
            end -= 1
        if end == start:
            # no piece matches: the rest of the word is one unknown token
            return count + UNKNOWN_PIECE_COST
        count += 1
        start = end
    return count


def count_tokens(text: str, spec: Optional[TokenizerSpec] = None) -> int:
    """
    Count tokens under the active tokenizer

    Args:
        text (str): Text to measure
        spec (TokenizerSpec): whitespace-punct (default) or vocab-file

    Returns:
        int: Deterministic non-negative token count
    """
    return Tokenizer(spec).count(text)


def truncate_tokens(text: str, limit: int) -> str:
    """Cut ``text`` after its ``limit``-th whitespace-punct token"""
    for position, match in enumerate(TOKEN_PATTERN.finditer(text), start=1):
        if position == limit:
            return text[: match.end()]
    return text


def split_sentences(text: str, abbreviations: Iterable[str] = DEFAULT_ABBREVIATIONS) -> List[str]:
    """Rule-based split on terminal punctuation followed by a capitalized start"""
    flat = " ".join(text.split())
    if not flat:
        return []

    abbreviations = frozenset(a.lower() for a in abbreviations)
    pieces, start = [], 0
    for match in BOUNDARY_PATTERN.finditer(flat):
        head = flat[start: match.start()]
        last_word = head.rsplit(" ", 1)[-1].lower()
        if match.group().startswith(".") and last_word in abbreviations:
            continue
        pieces.append(flat[start: match.end()].strip())
        start = match.end()
    pieces.append(flat[start:].strip())
    return [piece for piece in pieces if piece]


def merge_fragments(pieces: List[str], tokenizer: Tokenizer, min_fragment_tokens: int) -> List[str]:
    """Merge fragments shorter than ``min_fragment_tokens`` into their successor"""
    merged: List[str] = []
    buffer = None
    for piece in pieces:
        buffer = piece if buffer is None else f"{buffer} {piece}"
        if tokenizer.count(buffer) >= min_fragment_tokens:
            merged.append(buffer)
            buffer = None
    if buffer is not None:
        # trailing short fragment goes to its predecessor
        if merged:
            merged[-1] = f"{merged[-1]} {buffer}"
        else:
            merged.append(buffer)
    return merged


def segment(
    doc: RawDocument,
    min_fragment_tokens: int = 3,
    tokenizer: Optional[Tokenizer] = None,
    abbreviations: Iterable[str] = DEFAULT_ABBREVIATIONS,
) -> List[Sentence]:
    """
    Split a document into cleaned, indexed sentences

    Args:
        doc (RawDocument): Document to split
        min_fragment_tokens (int): Fragments below this many tokens are merged
        tokenizer (Tokenizer): Token counter, whitespace-punct by default
        abbreviations (Iterable[str]): Words whose trailing period never ends a sentence

    Returns:
        List[Sentence]: Sentences in original order, indices 0..N-1
    """
    tokenizer = tokenizer or Tokenizer()
    pieces = merge_fragments(split_sentences(doc.text, abbreviations), tokenizer, min_fragment_tokens)

    sentences = []
    for text in pieces:
        token_count = tokenizer.count(text)
        if token_count < 1:
            continue
        sentences.append(Sentence(index=len(sentences), text=text, token_count=token_count))

    if not sentences:
        raise EmptyDocument(f"Document {doc.doc_id!r} has no sentences")
    return sentences
