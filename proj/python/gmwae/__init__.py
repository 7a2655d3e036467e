"""Python bindings for the GMM-prior Wasserstein autoencoder."""

from ._core import (
    Model,
    distinct_n,
    jsd,
    kn_perplexity,
    mmd,
    run_cli,
    synthesize,
    unigram_entropy,
)

__all__ = [
    "Model",
    "distinct_n",
    "jsd",
    "kn_perplexity",
    "mmd",
    "run_cli",
    "synthesize",
    "unigram_entropy",
]
