"""Zero-shot diagnosis on embedding space.

Siamese proxy-class selection, a seven-algorithm clustering suite with
cluster-to-label mapping, and classification / segmentation metrics.
"""

from .errors import ConfigError, DataError, StageError
from .ingest import EmbeddingSet, load_embeddings, save_embeddings, synth_cohort

__version__ = "0.1.0"

__all__ = ["ConfigError", "DataError", "EmbeddingSet", "StageError", "load_embeddings",
           "save_embeddings", "synth_cohort", "__version__"]
