"""Exception and warning types shared by every stage."""


class CtxpressError(Exception):
    """Base class for all ctxpress errors"""


class EmptyDocument(CtxpressError):
    """No sentence survived segmentation"""


class VocabLoadError(CtxpressError):
    """The vocabulary file of a vocab-file tokenizer could not be read"""


class ProviderUnavailable(CtxpressError):
    """The embedding provider failed after all retries"""


class DimensionMismatch(CtxpressError):
    """Vector dimensions disagree"""


class ZeroVector(CtxpressError):
    """A vector is too close to zero to normalize"""


class IndexBuildFailure(CtxpressError):
    """The approximate nearest-neighbor index could not be built"""


class DegenerateInput(CtxpressError):
    """Clustering input has fewer distinct points than clusters"""


class ConfigError(CtxpressError):
    """Invalid pipeline configuration"""


class CorpusFormatError(CtxpressError):
    """A corpus line is not a valid document record"""


class PipelineStageError(CtxpressError):
    """A pipeline stage failed; ``stage`` names it and the cause is chained"""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


class BudgetTooSmall(UserWarning):
    """No sentence fits the token budget"""


class NonConvergence(UserWarning):
    """An iterative method stopped at its iteration cap"""
