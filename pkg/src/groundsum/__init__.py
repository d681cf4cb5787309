"""groundsum: retrieval grounding pipeline and evaluation metrics for lay
summarization."""

__version__ = "0.1.0"
