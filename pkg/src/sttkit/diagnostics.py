"""Domain-mismatch diagnostics: vocabulary overlap and length distributions."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, word_count
from .density import GaussianKde
from .filters import kde_length_scores
from .metrics import NormalizationConfig, normalize_text

__all__ = [
    "VocabStats",
    "length_values",
    "vocab_overlap",
    "length_profile",
    "ratio_scatter_export",
    "LENGTH_FIELDS",
]

LENGTH_FIELDS = ("duration", "transcript_words", "translation_words")


@dataclass
class VocabStats:
    """Type counts and overlap between two corpora on one text side."""

    types_a: int
    types_b: int
    common: int
    jaccard: float
    tail_mass_a: float
    tail_mass_b: float

    def to_dict(self) -> dict:
        return {
            "types_a": self.types_a,
            "types_b": self.types_b,
            "common": self.common,
            "jaccard": self.jaccard,
            "tail_mass_a": self.tail_mass_a,
            "tail_mass_b": self.tail_mass_b,
        }


def _side_text(sample, side: str) -> str | None:
    """Prefer gold text for corpus statistics, falling back to pseudo labels."""
    if side == "transcript":
        return sample.gold_transcript if sample.gold_transcript is not None else sample.transcript
    if side == "translation":
        return sample.gold_translation if sample.gold_translation is not None else sample.translation
    raise ValueError(f"side must be 'transcript' or 'translation', got {side!r}")


def _token_counts(corpus: Corpus, side: str, norm: NormalizationConfig) -> Counter:
    counts: Counter = Counter()
    for sample in corpus:
        text = _side_text(sample, side)
        if text is not None:
            counts.update(normalize_text(text, norm).split())
    return counts


def _tail_mass(counts: Counter, tail_threshold: int) -> float:
    total = sum(counts.values())
    if total == 0:
        return 0.0
    tail = sum(c for c in counts.values() if c <= tail_threshold)
    return tail / total


def vocab_overlap(a: Corpus, b: Corpus, side: str = "transcript",
                  tail_threshold: int = 2,
                  norm: NormalizationConfig = NormalizationConfig()) -> VocabStats:
    """Unique-type counts, overlap, Jaccard, and rare-type mass per corpus.

    Types are normalized whitespace tokens. ``tail_mass`` is the fraction of
    token occurrences contributed by types occurring at most
    ``tail_threshold`` times in that corpus.
    """
    counts_a = _token_counts(a, side, norm)
    counts_b = _token_counts(b, side, norm)
    if not counts_a or not counts_b:
        empty = a.name if not counts_a else b.name
        raise ValueError(f"corpus {empty!r} has no {side} text")
    types_a, types_b = set(counts_a), set(counts_b)
    common = len(types_a & types_b)
    union = len(types_a) + len(types_b) - common
    return VocabStats(
        types_a=len(types_a),
        types_b=len(types_b),
        common=common,
        jaccard=common / union,
        tail_mass_a=_tail_mass(counts_a, tail_threshold),
        tail_mass_b=_tail_mass(counts_b, tail_threshold),
    )


def length_values(corpus: Corpus, field: str) -> list[float]:
    if field == "duration":
        return [float(s.duration_s) for s in corpus]
    if field in ("transcript_words", "translation_words"):
        side = "transcript" if field == "transcript_words" else "translation"
        values = []
        for sample in corpus:
            text = _side_text(sample, side)
            if text is None:
                raise ValueError(f"sample {sample.id!r} has no {side} text")
            values.append(float(word_count(text)))
        return values
    raise ValueError(f"field must be one of {LENGTH_FIELDS}, got {field!r}")


def length_profile(a: Corpus, b: Corpus, field: str = "duration", grid: int = 256):
    """1D density of a length field for two corpora on a shared grid.

    Returns ``(grid_points, density_a, density_b)``. The grid spans the union
    of both data ranges extended by 3 bandwidths on each side.
    """
    if len(a) == 0 or len(b) == 0:
        raise ValueError("length_profile requires non-empty corpora")
    if grid < 2:
        raise ValueError(f"grid must have at least 2 points, got {grid}")
    values_a = length_values(a, field)
    values_b = length_values(b, field)
    kde_a = GaussianKde().fit(values_a)
    kde_b = GaussianKde().fit(values_b)
    lo = min(min(values_a) - 3 * kde_a.bandwidth_[0], min(values_b) - 3 * kde_b.bandwidth_[0])
    hi = max(max(values_a) + 3 * kde_a.bandwidth_[0], max(values_b) + 3 * kde_b.bandwidth_[0])
    xs = np.linspace(lo, hi, grid)
    return xs, kde_a.pdf_batch(xs), kde_b.pdf_batch(xs)


def ratio_scatter_export(corpus: Corpus) -> list[tuple[float, float, float]]:
    """Rows of (duration_s, transcript word count, KDE density).

    Densities come from the same 2D fit the ratio-KDE filter scores with, so
    row ordering by density matches the filter's ranking. Rows follow corpus
    order.
    """
    scores, _ = kde_length_scores(corpus)
    return [
        (float(s.duration_s), float(word_count(s.transcript)), score)
        for s, score in zip(corpus, scores)
    ]
