"""Text normalization, tokenization, WER, and corpus BLEU.

Scoring protocol: text is lowercased and stripped of diacritics and
punctuation before scoring. WER is corpus-level (total edit distance over
total reference words). BLEU is corpus-level with clipped n-gram precisions,
geometric mean, and brevity penalty, scaled to [0, 100].
"""

from __future__ import annotations

import math
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass

from .corpus import Corpus

__all__ = [
    "NormalizationConfig",
    "BleuConfig",
    "EvalReport",
    "normalize_text",
    "tokenize_13a",
    "tokenize_zh",
    "edit_distance",
    "wer",
    "corpus_bleu",
    "evaluate",
    "metric_signature",
    "LoopCheck",
    "detect_looping",
]


@dataclass(frozen=True)
class NormalizationConfig:
    """Scoring-time text normalization switches."""

    lowercase: bool = True
    strip_diacritics: bool = True
    strip_punctuation: bool = True


@dataclass(frozen=True)
class BleuConfig:
    """Corpus BLEU parameters.

    ``smoothing`` applies when an n-gram order has zero matches: ``floor``
    substitutes ``smoothing_value`` matches, ``add_k`` adds the value to both
    numerator and denominator for n >= 2, ``none`` yields a zero score.
    """

    max_ngram: int = 4
    smoothing: str = "floor"  # none | floor | add_k
    smoothing_value: float = 0.1
    tokenizer: str = "13a"  # 13a | zh

    def validate(self) -> None:
        if self.max_ngram < 1:
            raise ValueError(f"max_ngram must be >= 1, got {self.max_ngram}")
        if self.smoothing not in ("none", "floor", "add_k"):
            raise ValueError(f"unknown smoothing {self.smoothing!r}")
        if self.smoothing_value < 0:
            raise ValueError(f"smoothing_value must be >= 0, got {self.smoothing_value}")
        if self.tokenizer not in ("13a", "zh"):
            raise ValueError(f"unknown tokenizer {self.tokenizer!r}")


@dataclass
class EvalReport:
    """Corpus-level scores for one text side."""

    wer: float
    bleu: float
    n_sentences: int
    ref_word_count: int

    def to_record(self) -> dict:
        return {
            "wer": self.wer,
            "bleu": self.bleu,
            "n_sentences": self.n_sentences,
            "ref_word_count": self.ref_word_count,
        }

    @classmethod
    def from_record(cls, record: dict) -> "EvalReport":
        return cls(
            wer=float(record["wer"]),
            bleu=float(record["bleu"]),
            n_sentences=int(record["n_sentences"]),
            ref_word_count=int(record["ref_word_count"]),
        )


def normalize_text(text: str, cfg: NormalizationConfig = NormalizationConfig()) -> str:
    """Normalize text for scoring.

    Lowercases, removes diacritics (canonical decomposition, then dropping
    combining marks), removes punctuation (Unicode category P*), collapses
    whitespace runs to single spaces, and trims.
    """
    if cfg.lowercase:
        text = text.lower()
    if cfg.strip_diacritics:
        decomposed = unicodedata.normalize("NFD", text)
        text = unicodedata.normalize(
            "NFC", "".join(ch for ch in decomposed if unicodedata.category(ch) != "Mn")
        )
    if cfg.strip_punctuation:
        text = "".join(ch for ch in text if not unicodedata.category(ch).startswith("P"))
    return " ".join(text.split())


# mteval-13a tokenization: pad punctuation with spaces, except period/comma
# inside numbers; dashes after digits are split off.
_13A_PUNCT = re.compile(r"([\{-\~\[-\` -\&\(-\+\:-\@\/])")
_13A_PERIOD_BEFORE = re.compile(r"([^0-9])([\.,])")
_13A_PERIOD_AFTER = re.compile(r"([\.,])([^0-9])")
_13A_DIGIT_DASH = re.compile(r"([0-9])(-)")


def tokenize_13a(text: str) -> list[str]:
    """mteval-13a tokenization."""
    text = text.replace("<skipped>", "")
    text = text.replace("-\n", "").replace("\n", " ")
    text = (
        text.replace("&quot;", '"')
        .replace("&amp;", "&")
        .replace("&lt;", "<")
        .replace("&gt;", ">")
    )
    text = f" {text} "
    text = _13A_PUNCT.sub(r" \1 ", text)
    text = _13A_PERIOD_BEFORE.sub(r"\1 \2 ", text)
    text = _13A_PERIOD_AFTER.sub(r" \1 \2", text)
    text = _13A_DIGIT_DASH.sub(r"\1 \2 ", text)
    return text.split()


# CJK ideograph blocks (BMP ranges plus supplementary ideographic planes).
_CJK_RANGES = (
    (0x4E00, 0x9FFF),
    (0x3400, 0x4DBF),
    (0xF900, 0xFAFF),
    (0x20000, 0x2A6DF),
    (0x2A700, 0x2B73F),
    (0x2B740, 0x2B81F),
    (0x2B820, 0x2CEAF),
    (0x2F800, 0x2FA1F),
)


def _is_cjk(ch: str) -> bool:
    code = ord(ch)
    return any(lo <= code <= hi for lo, hi in _CJK_RANGES)


def tokenize_zh(text: str) -> list[str]:
    """Character-level tokenization for CJK text.

    Each CJK ideograph becomes its own token; maximal non-CJK runs are
    tokenized with :func:`tokenize_13a`.
    """
    tokens: list[str] = []
    pending: list[str] = []
    for ch in text:
        if _is_cjk(ch):
            if pending:
                tokens.extend(tokenize_13a("".join(pending)))
                pending = []
            tokens.append(ch)
        else:
            pending.append(ch)
    if pending:
        tokens.extend(tokenize_13a("".join(pending)))
    return tokens


def _tokenizer(name: str):
    if name == "13a":
        return tokenize_13a
    if name == "zh":
        return tokenize_zh
    raise ValueError(f"unknown tokenizer {name!r}")


def edit_distance(ref: list[str], hyp: list[str]) -> int:
    """Word-level Levenshtein distance with unit insert/delete/substitute costs."""
    if not ref:
        return len(hyp)
    if not hyp:
        return len(ref)
    prev = list(range(len(hyp) + 1))
    for i, ref_tok in enumerate(ref, 1):
        cur = [i] + [0] * len(hyp)
        for j, hyp_tok in enumerate(hyp, 1):
            cur[j] = min(
                prev[j] + 1,
                cur[j - 1] + 1,
                prev[j - 1] + (ref_tok != hyp_tok),
            )
        prev = cur
    return prev[-1]


def wer(refs: list[str], hyps: list[str],
        cfg: NormalizationConfig = NormalizationConfig()) -> float:
    """Corpus-level word error rate.

    Total per-sentence edit distance divided by total reference word count,
    both computed on normalized, whitespace-split text.
    """
    if len(refs) != len(hyps):
        raise ValueError(f"refs/hyps length mismatch: {len(refs)} vs {len(hyps)}")
    if not refs:
        raise ValueError("empty corpus")
    total_dist = 0
    total_ref_words = 0
    for ref, hyp in zip(refs, hyps):
        ref_tokens = normalize_text(ref, cfg).split()
        hyp_tokens = normalize_text(hyp, cfg).split()
        total_dist += edit_distance(ref_tokens, hyp_tokens)
        total_ref_words += len(ref_tokens)
    if total_ref_words == 0:
        raise ValueError("reference corpus has no words after normalization")
    return total_dist / total_ref_words


def _ngram_counts(tokens: list[str], max_n: int) -> Counter:
    counts: Counter = Counter()
    for n in range(1, max_n + 1):
        for i in range(len(tokens) - n + 1):
            counts[tuple(tokens[i:i + n])] += 1
    return counts


def corpus_bleu(refs: list[str], hyps: list[str], cfg: BleuConfig = BleuConfig(),
                norm: NormalizationConfig = NormalizationConfig()) -> float:
    """Corpus BLEU in [0, 100], single reference per hypothesis.

    Clipped n-gram matches are pooled over the whole corpus; the score is
    the geometric mean of the n-gram precisions times the brevity penalty
    ``exp(1 - r/c)`` (applied when the hypothesis corpus is not longer than
    the reference corpus).
    """
    cfg.validate()
    if len(refs) != len(hyps):
        raise ValueError(f"refs/hyps length mismatch: {len(refs)} vs {len(hyps)}")
    if not refs:
        raise ValueError("empty corpus")

    tok = _tokenizer(cfg.tokenizer)
    correct = [0.0] * cfg.max_ngram
    total = [0.0] * cfg.max_ngram
    ref_len = 0
    hyp_len = 0
    for ref, hyp in zip(refs, hyps):
        ref_tokens = tok(normalize_text(ref, norm))
        hyp_tokens = tok(normalize_text(hyp, norm))
        ref_len += len(ref_tokens)
        hyp_len += len(hyp_tokens)
        ref_counts = _ngram_counts(ref_tokens, cfg.max_ngram)
        hyp_counts = _ngram_counts(hyp_tokens, cfg.max_ngram)
        for ngram, count in hyp_counts.items():
            n = len(ngram)
            total[n - 1] += count
            correct[n - 1] += min(count, ref_counts.get(ngram, 0))

    if hyp_len == 0:
        return 0.0

    log_sum = 0.0
    for n in range(1, cfg.max_ngram + 1):
        c, t = correct[n - 1], total[n - 1]
        if cfg.smoothing == "add_k" and n > 1:
            c += cfg.smoothing_value
            t += cfg.smoothing_value
        if t == 0:
            return 0.0
        if c == 0:
            if cfg.smoothing == "floor" and cfg.smoothing_value > 0:
                c = cfg.smoothing_value
            else:
                return 0.0
        log_sum += math.log(c / t)

    bp = math.exp(1.0 - ref_len / hyp_len) if hyp_len <= ref_len else 1.0
    return 100.0 * bp * math.exp(log_sum / cfg.max_ngram)


def _auto_bleu_cfg(lang: str, base: BleuConfig | None) -> BleuConfig:
    if base is not None:
        return base
    return BleuConfig(tokenizer="zh" if lang.lower().startswith("zh") else "13a")


def evaluate(corpus: Corpus, norm: NormalizationConfig = NormalizationConfig(),
             bleu: BleuConfig | None = None) -> tuple[EvalReport, EvalReport]:
    """Score pseudo labels against gold labels.

    Returns (transcripts report, translations report). WER and BLEU are both
    computed per side; the BLEU tokenizer follows the corpus language for the
    side (``zh`` target -> character tokenization) unless ``bleu`` pins one.
    """
    if len(corpus) == 0:
        raise ValueError("cannot evaluate an empty corpus")
    missing = [
        s.id for s in corpus
        if s.transcript is None or s.translation is None
        or s.gold_transcript is None or s.gold_translation is None
    ]
    if missing:
        raise ValueError(
            "samples missing pseudo or gold labels: " + ", ".join(missing[:10])
            + ("..." if len(missing) > 10 else "")
        )

    reports = []
    for gold_attr, hyp_attr, lang in (
        ("gold_transcript", "transcript", corpus.source_lang),
        ("gold_translation", "translation", corpus.target_lang),
    ):
        refs = [getattr(s, gold_attr) for s in corpus]
        hyps = [getattr(s, hyp_attr) for s in corpus]
        cfg = _auto_bleu_cfg(lang, bleu)
        reports.append(EvalReport(
            wer=wer(refs, hyps, norm),
            bleu=corpus_bleu(refs, hyps, cfg, norm),
            n_sentences=len(refs),
            ref_word_count=sum(len(normalize_text(r, norm).split()) for r in refs),
        ))
    return reports[0], reports[1]


def metric_signature(norm: NormalizationConfig, bleu: BleuConfig) -> str:
    """Scoring signature string recorded with evaluation reports."""
    case = "lc" if norm.lowercase else "mixed"
    if bleu.smoothing == "none":
        smooth = "smooth.none"
    else:
        smooth = f"smooth.{bleu.smoothing}.{bleu.smoothing_value}"
    return f"case.{case}+numrefs.1+{smooth}+tok.{bleu.tokenizer}"


@dataclass(frozen=True)
class LoopCheck:
    """Result of a consecutive n-gram repetition scan."""

    flagged: bool
    ngram: str | None
    repeats: int


def detect_looping(text: str, max_n: int = 4, min_repeats: int = 3) -> LoopCheck:
    """Scan for consecutively repeated n-grams (decoder looping pathology).

    Returns the highest consecutive repeat count over all n-grams with
    1 <= n <= max_n, the n-gram achieving it, and whether the count reaches
    ``min_repeats``. Ties go to the shortest, leftmost n-gram.
    """
    if max_n < 1:
        raise ValueError(f"max_n must be >= 1, got {max_n}")
    if min_repeats < 2:
        raise ValueError(f"min_repeats must be >= 2, got {min_repeats}")
    tokens = text.split()
    length = len(tokens)
    best_count = 1 if tokens else 0
    best_ngram = tokens[0] if tokens else None
    for n in range(1, max_n + 1):
        for start in range(length - n + 1):
            unit = tokens[start:start + n]
            reps = 1
            while tokens[start + reps * n:start + (reps + 1) * n] == unit:
                reps += 1
            if reps > best_count:
                best_count = reps
                best_ngram = " ".join(unit)
    return LoopCheck(flagged=best_count >= min_repeats, ngram=best_ngram, repeats=best_count)
