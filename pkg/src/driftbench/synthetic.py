"""Seeded synthetic corpora for reproducible corpus-growth experiments.

A fixed artificial language over a 500-word vocabulary: unigram
probabilities follow a Zipf curve, and each word strongly prefers a small
fixed set of successor words. Sampling more tokens from the same language
gives growing corpora with stable underlying co-occurrence structure, so
scale effects can be studied without shipping any licensed text.
"""

from __future__ import annotations

import numpy as np

from .corpus import TokenStream

DEFAULT_VOCAB_SIZE = 500
DEFAULT_STRUCTURE_SEED = 774_001
ZIPF_EXPONENT = 1.05
PREFERRED_SUCCESSORS = 4
PREFERENCE_BOOST = 60.0


def _language(vocab_size: int, structure_seed: int) -> tuple[list[str], np.ndarray, np.ndarray]:
    """Word list, unigram CDF, and per-word transition CDF matrix."""
    words = [f"w{i:03d}" for i in range(vocab_size)]
    rng = np.random.default_rng(structure_seed)
    unigram = 1.0 / np.arange(1, vocab_size + 1) ** ZIPF_EXPONENT
    unigram /= unigram.sum()
    transition = np.tile(unigram, (vocab_size, 1))
    for i in range(vocab_size):
        preferred = rng.choice(vocab_size, size=PREFERRED_SUCCESSORS, replace=False, p=unigram)
        transition[i, preferred] *= PREFERENCE_BOOST
    transition /= transition.sum(axis=1, keepdims=True)
    return words, np.cumsum(unigram), np.cumsum(transition, axis=1)


def synthetic_corpus(
    n_tokens: int,
    seed: int,
    vocab_size: int = DEFAULT_VOCAB_SIZE,
    structure_seed: int = DEFAULT_STRUCTURE_SEED,
) -> TokenStream:
    """Sample one document of n_tokens from the fixed bigram language.

    The language is determined by structure_seed alone; `seed` only
    drives the sampling, so corpora of different sizes drawn from the
    same structure are realizations of one underlying distribution.
    """
    if n_tokens < 0:
        raise ValueError("n_tokens must be >= 0")
    words, unigram_cdf, transition_cdf = _language(vocab_size, structure_seed)
    rng = np.random.default_rng(seed)
    tokens: list[str] = []
    if n_tokens:
        current = int(np.searchsorted(unigram_cdf, rng.random()))
        tokens.append(words[current])
        draws = rng.random(n_tokens - 1)
        for r in draws:
            current = int(np.searchsorted(transition_cdf[current], r))
            tokens.append(words[current])
    return TokenStream(
        doc_id=f"synthetic-s{seed}-n{n_tokens}", tokens=tuple(tokens)
    )
