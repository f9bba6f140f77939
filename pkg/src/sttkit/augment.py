"""Concatenation augmentation: build long training samples by joining pairs.

A plan fixes the random pair selection (seeded, reproducible); applying it
materializes augmented samples whose audio duration, transcript, and
translation are the concatenation of the two sources.
"""

from __future__ import annotations

import json
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .corpus import Corpus, Sample

__all__ = [
    "AugmentPlan",
    "make_plan",
    "concat_pair",
    "concat_group",
    "apply_plan",
    "concat_audio",
    "ConcatAugmenter",
]


@dataclass
class AugmentPlan:
    """Seeded list of source-id groups to concatenate.

    Groups are pairs by default; longer chains are allowed (all entries are
    tuples of at least two ids with no sample following itself).
    """

    pairs: list[tuple[str, ...]]
    seed: int
    separator: str = " "

    def validate(self, corpus: Corpus | None = None) -> None:
        for index, group in enumerate(self.pairs):
            if len(group) < 2:
                raise ValueError(f"group {index} has fewer than 2 samples")
            for id_a, id_b in zip(group, group[1:]):
                if id_a == id_b:
                    raise ValueError(
                        f"group {index} concatenates sample {id_a!r} with itself"
                    )
        if corpus is not None:
            known = set(corpus.ids())
            for index, group in enumerate(self.pairs):
                for sample_id in group:
                    if sample_id not in known:
                        raise ValueError(
                            f"group {index} references unknown sample id {sample_id!r}"
                        )

    def save(self, path: str | Path) -> None:
        record = {
            "seed": self.seed,
            "separator": self.separator,
            "pairs": [list(p) for p in self.pairs],
        }
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            json.dump(record, handle, ensure_ascii=False, indent=2, sort_keys=True)
            handle.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "AugmentPlan":
        with open(path, encoding="utf-8") as handle:
            record = json.load(handle)
        return cls(
            pairs=[tuple(p) for p in record["pairs"]],
            seed=int(record["seed"]),
            separator=record.get("separator", " "),
        )


def make_plan(corpus: Corpus, k: int = 20000, seed: int = 0,
              separator: str = " ", chain: int = 2) -> AugmentPlan:
    """Draw ``k`` ordered sample groups uniformly with replacement.

    Groups are pairs by default; ``chain`` lengthens them. Consecutive
    entries are always distinct. Deterministic given (corpus, k, seed,
    chain). The corpus must be supervised with at least two samples.
    """
    if corpus.role != "supervised":
        raise ValueError(f"augmentation source must be a supervised corpus, got role "
                         f"{corpus.role!r}")
    n = len(corpus)
    if n < 2:
        raise ValueError(f"need at least 2 samples to build pairs, got {n}")
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    if chain < 2:
        raise ValueError(f"chain must be >= 2, got {chain}")
    ids = corpus.ids()
    rng = np.random.default_rng(seed)
    first = rng.integers(0, n, size=k)
    groups = [[int(i)] for i in first]
    for _ in range(chain - 1):
        # uniform over indices different from the previous group member
        step = rng.integers(0, n - 1, size=k)
        for group, offset in zip(groups, step):
            nxt = int(offset) + (int(offset) >= group[-1])
            group.append(nxt)
    pairs = [tuple(ids[i] for i in group) for group in groups]
    return AugmentPlan(pairs=pairs, seed=seed, separator=separator)


def concat_group(samples: list[Sample], separator: str = " ",
                 index: int | None = None) -> Sample:
    """Concatenate gold-labeled samples into one augmented sample."""
    if len(samples) < 2:
        raise ValueError("need at least 2 samples to concatenate")
    for sample in samples:
        if sample.gold_transcript is None or sample.gold_translation is None:
            raise ValueError(
                f"sample {sample.id!r} is missing gold transcript or translation"
            )
    suffix = "" if index is None else f"#{index}"
    return Sample(
        id="aug:" + "+".join(s.id for s in samples) + suffix,
        duration_s=sum(s.duration_s for s in samples),
        gold_transcript=separator.join(s.gold_transcript for s in samples),
        gold_translation=separator.join(s.gold_translation for s in samples),
        provenance="augmented",
        segments=[s.id for s in samples],
    )


def concat_pair(a: Sample, b: Sample, separator: str = " ",
                index: int | None = None) -> Sample:
    """Concatenate two gold-labeled samples into one augmented sample."""
    return concat_group([a, b], separator, index)


def apply_plan(corpus: Corpus, plan: AugmentPlan) -> Corpus:
    """Materialize the plan against its source corpus.

    Returns an augmented-role corpus with exactly one sample per group;
    merge it with the original via :func:`sttkit.corpus.merge_corpora`.
    """
    plan.validate(corpus)
    by_id = corpus.by_id()
    samples = [
        concat_group([by_id[sample_id] for sample_id in group], plan.separator, index=i)
        for i, group in enumerate(plan.pairs)
    ]
    return Corpus(
        name=f"{corpus.name}-aug",
        role="augmented",
        source_lang=corpus.source_lang,
        target_lang=corpus.target_lang,
        samples=samples,
    )


class ConcatAugmenter(BaseEstimator, TransformerMixin):
    """Transformer wrapper: ``fit`` draws the pair plan, ``transform`` builds samples."""

    def __init__(self, k: int = 20000, seed: int = 0, separator: str = " ",
                 chain: int = 2):
        self.k = k
        self.seed = seed
        self.separator = separator
        self.chain = chain

    def fit(self, corpus: Corpus, y=None):
        self.plan_ = make_plan(corpus, self.k, self.seed, self.separator, self.chain)
        return self

    def transform(self, corpus: Corpus) -> Corpus:
        if not hasattr(self, "plan_"):
            raise NotFittedError("this ConcatAugmenter instance is not fitted yet")
        return apply_plan(corpus, self.plan_)


def concat_audio(paths: list[str | Path], out_path: str | Path) -> float:
    """Sample-accurate concatenation of linear-PCM WAV files.

    All inputs must share sample rate, channel count, and sample width.
    Returns the output duration in seconds.
    """
    if not paths:
        raise ValueError("no input files")
    params = None
    payload = bytearray()
    total_frames = 0
    for path in paths:
        with wave.open(str(path), "rb") as reader:
            current = (reader.getnchannels(), reader.getsampwidth(), reader.getframerate(),
                       reader.getcomptype())
            if current[3] != "NONE":
                raise ValueError(f"{path}: only uncompressed linear PCM is supported")
            if params is None:
                params = current
            elif current != params:
                raise ValueError(
                    f"{path}: format mismatch (channels/width/rate {current[:3]} vs "
                    f"{params[:3]})"
                )
            frames = reader.getnframes()
            payload.extend(reader.readframes(frames))
            total_frames += frames
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with wave.open(str(out_path), "wb") as writer:
        writer.setnchannels(params[0])
        writer.setsampwidth(params[1])
        writer.setframerate(params[2])
        writer.writeframes(bytes(payload))
    return total_frames / params[2]
