"""Shared corpus builders for the test suite."""

import numpy as np
import pytest

from sttkit.corpus import Corpus, Sample


def build_gold_corpus(n, seed=0, name="toy", role="supervised", source_lang="en",
                      target_lang="de", dur_range=(1.0, 8.0), words_per_sec=2.5):
    """Synthetic gold-labeled corpus with length roughly tracking duration."""
    rng = np.random.default_rng(seed)
    samples = []
    for i in range(n):
        dur = float(rng.uniform(*dur_range))
        wc = max(1, int(round(words_per_sec * dur + rng.normal(0.0, 1.0))))
        tc = " ".join(f"word{(i + j) % 97:02d}" for j in range(wc))
        tl = " ".join(f"wort{(i + j) % 89:02d}" for j in range(wc))
        samples.append(Sample(
            id=f"u{i:05d}",
            duration_s=dur,
            gold_transcript=tc,
            gold_translation=tl,
        ))
    return Corpus(name=name, role=role, source_lang=source_lang,
                  target_lang=target_lang, samples=samples)


def build_pseudo_corpus(n, seed=0, **kwargs):
    """Corpus whose samples carry both pseudo and gold labels."""
    corpus = build_gold_corpus(n, seed=seed, **kwargs)
    samples = []
    for s in corpus:
        samples.append(Sample(
            id=s.id,
            duration_s=s.duration_s,
            transcript=s.gold_transcript,
            translation=s.gold_translation,
            gold_transcript=s.gold_transcript,
            gold_translation=s.gold_translation,
            provenance="pseudo",
        ))
    return corpus.with_samples(samples)


@pytest.fixture
def gold_corpus():
    return build_gold_corpus(20, seed=1)


@pytest.fixture
def pseudo_corpus():
    return build_pseudo_corpus(20, seed=2)
