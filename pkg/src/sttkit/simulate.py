"""Deterministic synthetic labeler for desk-scale validation of the loop.

Stands in for a real model's labeling pass: pseudo labels are derived from
gold labels by random word substitution plus duration-correlated loop
injection. Kept dependency-light so external-process mock trainers start
fast.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace

import numpy as np

from .corpus import Corpus, Sample

__all__ = ["NoiseModel", "mock_label", "loop_injected"]


@dataclass(frozen=True)
class NoiseModel:
    """Label corruption model for the simulation harness.

    Each gold word is substituted with probability ``word_sub_rate``. With
    probability ``min(1, loop_rate_slope * duration_s)`` a random gold n-gram
    repeated ``loop_repeats`` times is appended to the transcript, mimicking
    decoder looping on long inputs.
    """

    word_sub_rate: float = 0.0
    loop_rate_slope: float = 0.0  # per second of audio
    loop_ngram_n: int = 2
    loop_repeats: int = 4

    def validate(self) -> None:
        if not 0.0 <= self.word_sub_rate <= 1.0:
            raise ValueError(f"word_sub_rate must be in [0, 1], got {self.word_sub_rate}")
        if self.loop_rate_slope < 0:
            raise ValueError(f"loop_rate_slope must be >= 0, got {self.loop_rate_slope}")
        if self.loop_ngram_n < 1 or self.loop_repeats < 1:
            raise ValueError("loop_ngram_n and loop_repeats must be >= 1")


_SUB_POOL = tuple(f"noise{i:02d}" for i in range(64))


def _sample_rng(seed: int, sample_id: str) -> np.random.Generator:
    digest = hashlib.sha256(f"{seed}:{sample_id}".encode("utf-8")).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "big"))


def _substitute(tokens: list[str], rng: np.random.Generator,
                rate: float) -> tuple[list[str], bool]:
    # draws are consumed for every token so that decisions stay coupled
    # across different rates under the same seed
    out: list[str] = []
    changed = False
    for token in tokens:
        u = rng.random()
        pick = int(rng.integers(0, len(_SUB_POOL)))
        if u < rate:
            replacement = _SUB_POOL[pick]
            if replacement == token:
                replacement += "x"
            out.append(replacement)
            changed = True
        else:
            out.append(token)
    return out, changed


def _loop_decision(sample: Sample, noise: NoiseModel,
                   rng: np.random.Generator) -> tuple[bool, float]:
    u_loop = rng.random()
    start_frac = rng.random()
    p_loop = min(1.0, noise.loop_rate_slope * sample.duration_s)
    inject = u_loop < p_loop and bool((sample.gold_transcript or "").split())
    return inject, start_frac


def mock_label(corpus: Corpus, noise: NoiseModel, seed: int = 0) -> Corpus:
    """Emit pseudo labels derived from gold labels under the noise model.

    Deterministic given (seed, sample id): each sample gets its own RNG
    stream, so labels do not depend on corpus order. With zero noise the
    pseudo labels equal the gold labels verbatim.
    """
    noise.validate()
    missing = [s.id for s in corpus
               if s.gold_transcript is None or s.gold_translation is None]
    if missing:
        raise ValueError(
            "mock labeling needs gold labels; missing on: " + ", ".join(missing[:10])
        )
    labeled: list[Sample] = []
    for sample in corpus:
        rng = _sample_rng(seed, sample.id)
        inject, start_frac = _loop_decision(sample, noise, rng)
        tc_tokens = sample.gold_transcript.split()
        tl_tokens = sample.gold_translation.split()
        new_tc, changed_tc = _substitute(tc_tokens, rng, noise.word_sub_rate)
        new_tl, changed_tl = _substitute(tl_tokens, rng, noise.word_sub_rate)
        if inject:
            n = min(noise.loop_ngram_n, len(tc_tokens))
            start = min(int(start_frac * (len(tc_tokens) - n + 1)), len(tc_tokens) - n)
            new_tc = new_tc + tc_tokens[start:start + n] * noise.loop_repeats
            changed_tc = True
        transcript = " ".join(new_tc) if changed_tc else sample.gold_transcript
        translation = " ".join(new_tl) if changed_tl else sample.gold_translation
        labeled.append(replace(
            sample,
            transcript=transcript,
            translation=translation,
            provenance="pseudo",
            segments=None,
        ))
    return corpus.with_samples(labeled)


def loop_injected(corpus: Corpus, noise: NoiseModel, seed: int = 0) -> dict[str, bool]:
    """Which samples :func:`mock_label` corrupts with an injected loop.

    Replays only the per-sample loop decision, so it agrees exactly with
    ``mock_label(corpus, noise, seed)``.
    """
    noise.validate()
    flags: dict[str, bool] = {}
    for sample in corpus:
        rng = _sample_rng(seed, sample.id)
        inject, _ = _loop_decision(sample, noise, rng)
        flags[sample.id] = inject
    return flags
