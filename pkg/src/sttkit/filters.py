"""Pseudo-label quality filters and the looping diagnostic.

Each filter scores every sample, splits the corpus into kept and dropped
sets, and records the pass in a :class:`FilterReport`. Filters are
sklearn-style transformers (``fit`` computes the split, ``transform``
applies it); the module-level functions wrap them in a single call.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .corpus import Corpus, word_count
from .density import GaussianKde, keep_top_fraction
from .metrics import LoopCheck, detect_looping

__all__ = [
    "FilterReport",
    "CorpusFilter",
    "PreprocessFilter",
    "RatioKdeFilter",
    "RatioToGoldFilter",
    "EmbeddingSimilarityFilter",
    "preprocess_filter",
    "filter_ratio_kde",
    "filter_ratio_to_gold",
    "filter_embedding_similarity",
    "cosine_similarity",
    "detect_looping",
    "LoopCheck",
    "loop_report",
    "kde_length_scores",
]

FILTER_METHODS = ("ratio_kde", "ratio_to_gold", "embedding_similarity", "preprocess", "loop_flag")


@dataclass
class FilterReport:
    """Per-sample scores and keep/drop decisions for one filtering pass."""

    method: str
    scores: dict[str, float]
    kept: list[str]
    dropped: list[str]
    threshold: float | tuple[float, float] | None
    params: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.method not in FILTER_METHODS:
            raise ValueError(f"unknown filter method {self.method!r}")
        kept, dropped = set(self.kept), set(self.dropped)
        if kept & dropped:
            raise ValueError("kept and dropped sets overlap")
        if kept | dropped != set(self.scores):
            raise ValueError("kept + dropped do not cover exactly the scored ids")

    @property
    def n_kept(self) -> int:
        return len(self.kept)

    @property
    def n_dropped(self) -> int:
        return len(self.dropped)

    def to_dict(self) -> dict:
        threshold = self.threshold
        if isinstance(threshold, tuple):
            threshold = list(threshold)
        return {
            "method": self.method,
            "scores": self.scores,
            "kept": self.kept,
            "dropped": self.dropped,
            "threshold": threshold,
            "params": self.params,
        }

    @classmethod
    def from_dict(cls, record: dict) -> "FilterReport":
        threshold = record.get("threshold")
        if isinstance(threshold, list):
            threshold = tuple(threshold)
        return cls(
            method=record["method"],
            scores=dict(record["scores"]),
            kept=list(record["kept"]),
            dropped=list(record["dropped"]),
            threshold=threshold,
            params=dict(record.get("params", {})),
        )

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            json.dump(self.to_dict(), handle, ensure_ascii=False, indent=2, sort_keys=True)
            handle.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "FilterReport":
        with open(path, encoding="utf-8") as handle:
            return cls.from_dict(json.load(handle))


def _require_nonempty(corpus: Corpus) -> None:
    if len(corpus) == 0:
        raise ValueError("cannot filter an empty corpus")


def _require_fields(corpus: Corpus, *fields: str) -> None:
    for name in fields:
        missing = [s.id for s in corpus if getattr(s, name) is None]
        if missing:
            raise ValueError(
                f"samples missing {name}: " + ", ".join(missing[:10])
                + ("..." if len(missing) > 10 else "")
            )


def _text_length(text: str, unit: str) -> float:
    if unit == "words":
        return float(word_count(text))
    if unit == "chars":
        return float(len(text))
    raise ValueError(f"length_unit must be 'words' or 'chars', got {unit!r}")


def kde_length_scores(corpus: Corpus, length_unit: str = "words",
                      bandwidth=None, jobs: int = 1) -> tuple[list[float], list[str]]:
    """Density of each sample's (duration, transcript length) point.

    The 2D KDE is fitted on the corpus itself, so scores rank samples by how
    typical their length/duration combination is within the corpus.
    """
    _require_nonempty(corpus)
    _require_fields(corpus, "transcript")
    points = [(s.duration_s, _text_length(s.transcript, length_unit)) for s in corpus]
    model = GaussianKde(bandwidth=bandwidth).fit(points)
    scores = model.pdf_batch(points, jobs=jobs)
    return [float(v) for v in scores], corpus.ids()


class CorpusFilter(BaseEstimator, TransformerMixin):
    """Base class for corpus -> corpus filters.

    ``fit`` scores the corpus and fixes the kept-id set; ``transform`` drops
    everything else, preserving sample order. ``filter`` does both and also
    returns the :class:`FilterReport`.
    """

    method = "abstract"

    def _split(self, corpus: Corpus):
        raise NotImplementedError

    def fit(self, corpus: Corpus, y=None):
        scores, kept, dropped, threshold, params = self._split(corpus)
        report = FilterReport(
            method=self.method,
            scores=scores,
            kept=kept,
            dropped=dropped,
            threshold=threshold,
            params=params,
        )
        report.validate()
        self.report_ = report
        return self

    def transform(self, corpus: Corpus) -> Corpus:
        if not hasattr(self, "report_"):
            raise NotFittedError(f"this {type(self).__name__} instance is not fitted yet")
        kept = set(self.report_.kept)
        return corpus.with_samples([s for s in corpus if s.id in kept])

    def filter(self, corpus: Corpus) -> tuple[Corpus, FilterReport]:
        self.fit(corpus)
        return self.transform(corpus), self.report_


class PreprocessFilter(CorpusFilter):
    """Length-based preprocessing: drop out-of-range durations and overlong text.

    Keeps samples with duration in [min_duration_s, max_duration_s] (bounds
    inclusive) whose present transcript/translation fields (gold or pseudo)
    are at most ``max_words`` whitespace tokens. Augmented samples are exempt:
    they exist precisely to be long.
    """

    method = "preprocess"

    def __init__(self, min_duration_s: float = 0.5, max_duration_s: float = 15.0,
                 max_words: int = 50):
        self.min_duration_s = min_duration_s
        self.max_duration_s = max_duration_s
        self.max_words = max_words

    def _keep(self, sample) -> bool:
        if sample.provenance == "augmented":
            return True
        if not self.min_duration_s <= sample.duration_s <= self.max_duration_s:
            return False
        for name in ("transcript", "translation", "gold_transcript", "gold_translation"):
            text = getattr(sample, name)
            if text is not None and word_count(text) > self.max_words:
                return False
        return True

    def _split(self, corpus: Corpus):
        scores: dict[str, float] = {}
        kept: list[str] = []
        dropped: list[str] = []
        for sample in corpus:
            keep = self._keep(sample)
            scores[sample.id] = 1.0 if keep else 0.0
            (kept if keep else dropped).append(sample.id)
        params = {
            "min_duration_s": self.min_duration_s,
            "max_duration_s": self.max_duration_s,
            "max_words": self.max_words,
        }
        return scores, kept, dropped, 0.5, params


class RatioKdeFilter(CorpusFilter):
    """Keep the top fraction of samples by (duration, transcript length) density."""

    method = "ratio_kde"

    def __init__(self, keep_fraction: float = 0.9, length_unit: str = "words",
                 bandwidth=None, jobs: int = 1):
        self.keep_fraction = keep_fraction
        self.length_unit = length_unit
        self.bandwidth = bandwidth
        self.jobs = jobs

    def _split(self, corpus: Corpus):
        values, ids = kde_length_scores(corpus, self.length_unit, self.bandwidth,
                                        self.jobs)
        kept, dropped, threshold = keep_top_fraction(values, ids, self.keep_fraction)
        scores = dict(zip(ids, values))
        params = {
            "keep_fraction": self.keep_fraction,
            "length_unit": self.length_unit,
            "bandwidth": None if self.bandwidth is None else list(np.atleast_1d(self.bandwidth)),
        }
        return scores, kept, dropped, threshold, params


class RatioToGoldFilter(CorpusFilter):
    """Keep samples whose pseudo/gold transcript word-count ratio is in [low, high].

    Supervised upper-bound probe: requires gold transcripts, so it is only
    meaningful in analysis mode. A zero-word gold transcript keeps the sample
    only if the pseudo transcript is also empty.
    """

    method = "ratio_to_gold"

    def __init__(self, low: float = 0.9, high: float = 1.1):
        self.low = low
        self.high = high

    def _split(self, corpus: Corpus):
        if not (math.isfinite(self.low) and math.isfinite(self.high)
                and 0 <= self.low <= self.high):
            raise ValueError(f"invalid ratio bounds ({self.low}, {self.high})")
        _require_nonempty(corpus)
        _require_fields(corpus, "transcript", "gold_transcript")
        scores: dict[str, float] = {}
        kept: list[str] = []
        dropped: list[str] = []
        for sample in corpus:
            pseudo_wc = word_count(sample.transcript)
            gold_wc = word_count(sample.gold_transcript)
            if gold_wc == 0:
                ratio = 1.0 if pseudo_wc == 0 else math.inf
            else:
                ratio = pseudo_wc / gold_wc
            scores[sample.id] = ratio
            keep = self.low <= ratio <= self.high
            (kept if keep else dropped).append(sample.id)
        return scores, kept, dropped, (self.low, self.high), {
            "low": self.low, "high": self.high,
        }


class EmbeddingSimilarityFilter(CorpusFilter):
    """Keep the top fraction by transcript/translation embedding cosine similarity."""

    method = "embedding_similarity"

    def __init__(self, keep_fraction: float = 0.9):
        self.keep_fraction = keep_fraction

    def _split(self, corpus: Corpus):
        _require_nonempty(corpus)
        _require_fields(corpus, "embedding_transcript", "embedding_translation")
        values = []
        for sample in corpus:
            try:
                values.append(cosine_similarity(sample.embedding_transcript,
                                                sample.embedding_translation))
            except ValueError as exc:
                raise ValueError(f"sample {sample.id!r}: {exc}") from exc
        ids = corpus.ids()
        kept, dropped, threshold = keep_top_fraction(values, ids, self.keep_fraction)
        return dict(zip(ids, values)), kept, dropped, threshold, {
            "keep_fraction": self.keep_fraction,
        }


def preprocess_filter(corpus: Corpus, min_duration_s: float = 0.5,
                      max_duration_s: float = 15.0,
                      max_words: int = 50) -> tuple[Corpus, FilterReport]:
    """Apply the length-based preprocessing filter."""
    return PreprocessFilter(min_duration_s, max_duration_s, max_words).filter(corpus)


def filter_ratio_kde(corpus: Corpus, keep_fraction: float = 0.9, *,
                     length_unit: str = "words", bandwidth=None,
                     jobs: int = 1) -> tuple[Corpus, FilterReport]:
    """Keep the most probable (duration, transcript length) points."""
    return RatioKdeFilter(keep_fraction, length_unit, bandwidth, jobs).filter(corpus)


def filter_ratio_to_gold(corpus: Corpus, low: float = 0.9,
                         high: float = 1.1) -> tuple[Corpus, FilterReport]:
    """Keep samples whose transcript length is close to the gold length."""
    return RatioToGoldFilter(low, high).filter(corpus)


def filter_embedding_similarity(corpus: Corpus,
                                keep_fraction: float = 0.9) -> tuple[Corpus, FilterReport]:
    """Keep the most similar transcript/translation embedding pairs."""
    return EmbeddingSimilarityFilter(keep_fraction).filter(corpus)


def cosine_similarity(u, v) -> float:
    """Cosine of the angle between two vectors, in [-1, 1]."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    norm_u = float(np.linalg.norm(u))
    norm_v = float(np.linalg.norm(v))
    if norm_u == 0.0 or norm_v == 0.0:
        raise ValueError("cosine similarity undefined for zero-norm vectors")
    value = float(np.dot(u, v) / (norm_u * norm_v))
    return max(-1.0, min(1.0, value))


def loop_report(corpus: Corpus, max_n: int = 4, min_repeats: int = 3) -> FilterReport:
    """Diagnostic looping report: flags are recorded, nothing is dropped.

    Scans the pseudo transcript when present, else the gold transcript.
    """
    _require_nonempty(corpus)
    scores: dict[str, float] = {}
    for sample in corpus:
        text = sample.transcript if sample.transcript is not None else sample.gold_transcript
        if text is None:
            raise ValueError(f"sample {sample.id!r} has no transcript to scan")
        scores[sample.id] = float(detect_looping(text, max_n, min_repeats).repeats)
    report = FilterReport(
        method="loop_flag",
        scores=scores,
        kept=corpus.ids(),
        dropped=[],
        threshold=float(min_repeats),
        params={"max_n": max_n, "min_repeats": min_repeats},
    )
    report.validate()
    return report
