"""Normalization, tokenizers, WER, BLEU, and corpus evaluation."""

import functools
import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sttkit.corpus import Corpus, Sample
from sttkit.metrics import (
    BleuConfig,
    NormalizationConfig,
    corpus_bleu,
    detect_looping,
    edit_distance,
    evaluate,
    metric_signature,
    normalize_text,
    tokenize_13a,
    tokenize_zh,
    wer,
)

from conftest import build_pseudo_corpus


class TestNormalizeText:
    def test_basic(self):
        assert normalize_text("Héllo, World!") == "hello world"

    def test_empty(self):
        assert normalize_text("") == ""

    def test_french(self):
        assert normalize_text("Ça va très bien.") == "ca va tres bien"

    def test_whitespace_collapse(self):
        assert normalize_text("a\t b\n\nc  ") == "a b c"

    def test_flags_off(self):
        cfg = NormalizationConfig(lowercase=False, strip_diacritics=False,
                                  strip_punctuation=False)
        assert normalize_text("Héllo, World!", cfg) == "Héllo, World!"

    def test_punctuation_only(self):
        assert normalize_text("?!... --- «»") == ""

    def test_symbols_survive(self):
        # math/currency symbols are category S, not P
        assert normalize_text("1 + 2 = 3$") == "1 + 2 = 3$"

    def test_deterministic(self):
        text = "Grüße aus Žilina — それは?"
        assert normalize_text(text) == normalize_text(text)


class TestTokenize13a:
    def test_whitespace(self):
        assert tokenize_13a("a b  c") == ["a", "b", "c"]

    def test_comma_padded(self):
        assert tokenize_13a("hello, world") == ["hello", ",", "world"]

    def test_number_keeps_period(self):
        assert tokenize_13a("3.5 points") == ["3.5", "points"]

    def test_trailing_period_split(self):
        assert tokenize_13a("end.") == ["end", "."]

    def test_digit_dash_split(self):
        assert tokenize_13a("3-4") == ["3", "-", "4"]
        assert tokenize_13a("ab-cd") == ["ab-cd"]

    def test_apostrophe_not_split(self):
        # mteval-13a leaves apostrophes attached
        assert tokenize_13a("don't stop") == ["don't", "stop"]

    def test_entities_unescaped(self):
        assert tokenize_13a("a &amp; b") == ["a", "&", "b"]


class TestTokenizeZh:
    def test_cjk_chars_split(self):
        assert tokenize_zh("你好") == ["你", "好"]

    def test_mixed(self):
        assert tokenize_zh("你好world") == ["你", "好", "world"]

    def test_empty(self):
        assert tokenize_zh("") == []

    def test_latin_runs_use_13a(self):
        assert tokenize_zh("abc, def你") == ["abc", ",", "def", "你"]

    @settings(max_examples=50, deadline=None)
    @given(st.text(alphabet=st.sampled_from(list("你好世界美 abz,3.")), max_size=25))
    def test_concat_preserves_non_whitespace(self, text):
        joined = "".join(tokenize_zh(text))
        assert joined == "".join(text.split())


def _oracle_distance(a, b):
    @functools.lru_cache(maxsize=None)
    def rec(i, j):
        if i == len(a):
            return len(b) - j
        if j == len(b):
            return len(a) - i
        return min(rec(i + 1, j) + 1, rec(i, j + 1) + 1,
                   rec(i + 1, j + 1) + (a[i] != b[j]))
    return rec(0, 0)


class TestEditDistance:
    def test_identity(self):
        assert edit_distance(["a", "b"], ["a", "b"]) == 0

    def test_empty_sides(self):
        assert edit_distance([], ["a", "b"]) == 2
        assert edit_distance(["x"], []) == 1
        assert edit_distance([], []) == 0

    def test_exhaustive_small(self):
        strings = [tuple(p) for n in range(4) for p in itertools.product("ab", repeat=n)]
        for a in strings:
            for b in strings:
                assert edit_distance(list(a), list(b)) == _oracle_distance(a, b)


class TestWer:
    def test_exact_match(self):
        assert wer(["a b c"], ["a b c"]) == 0.0

    def test_all_deleted(self):
        assert wer(["a b c"], [""]) == 1.0

    def test_corpus_pooling(self):
        # (1 substitution + 1 insertion) / 5 reference words
        assert wer(["a b c", "d e"], ["a x c", "d e f"]) == pytest.approx(0.4)

    def test_can_exceed_one(self):
        assert wer(["a"], ["x y z"]) == 3.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            wer(["a"], ["a", "b"])

    def test_empty_corpus(self):
        with pytest.raises(ValueError, match="empty"):
            wer([], [])

    def test_all_empty_references(self):
        with pytest.raises(ValueError, match="no words"):
            wer(["...", "!!"], ["a", "b"])

    def test_normalization_equivalence(self):
        refs = ["the quick fox", "a b c"]
        hyps = ["The quick fox", "a b c"]
        assert wer(refs, hyps) == 0.0
        assert wer(refs, ["the, QUICK fox!", "a; b: c"]) == 0.0

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.text(alphabet="abc ", min_size=1, max_size=12), min_size=1, max_size=5))
    def test_self_wer_zero(self, texts):
        refs = [t if t.strip() else "x" for t in texts]
        assert wer(refs, refs) == 0.0


def brute_bleu(refs, hyps, max_ngram=4, smoothing="none", smoothing_value=0.1):
    """Independent BLEU oracle: exhaustive n-gram counting, Fraction arithmetic."""
    def tokens(text):
        return tokenize_13a(normalize_text(text))

    ref_tok = [tokens(t) for t in refs]
    hyp_tok = [tokens(t) for t in hyps]
    log_sum = 0.0
    for n in range(1, max_ngram + 1):
        correct, total = Fraction(0), Fraction(0)
        for ref, hyp in zip(ref_tok, hyp_tok):
            hyp_ngrams = [tuple(hyp[i:i + n]) for i in range(len(hyp) - n + 1)]
            ref_ngrams = [tuple(ref[i:i + n]) for i in range(len(ref) - n + 1)]
            for gram in set(hyp_ngrams):
                correct += min(hyp_ngrams.count(gram), ref_ngrams.count(gram))
            total += len(hyp_ngrams)
        if smoothing == "add_k" and n > 1:
            correct += Fraction(smoothing_value).limit_denominator(10**9)
            total += Fraction(smoothing_value).limit_denominator(10**9)
        if total == 0:
            return 0.0
        if correct == 0:
            if smoothing == "floor" and smoothing_value > 0:
                correct = Fraction(smoothing_value).limit_denominator(10**9)
            else:
                return 0.0
        log_sum += math.log(float(correct / total))
    c = sum(len(h) for h in hyp_tok)
    r = sum(len(t) for t in ref_tok)
    if c == 0:
        return 0.0
    bp = math.exp(1 - r / c) if c <= r else 1.0
    return 100.0 * bp * math.exp(log_sum / max_ngram)


class TestCorpusBleu:
    def test_identity_is_100(self):
        refs = ["the cat sat on the mat", "a quick brown fox jumps"]
        assert corpus_bleu(refs, refs) == pytest.approx(100.0)

    def test_zero_bigram_matches(self):
        score = corpus_bleu(["the cat sat on the mat"], ["the the the the the the"],
                            BleuConfig(smoothing="none"))
        assert score == 0.0

    def test_hand_computed_case(self):
        refs = ["the cat sat on the mat"]
        hyps = ["the cat sat on a mat"]
        # p = (5/6, 3/5, 2/4, 1/3), brevity penalty 1
        expected = 100.0 * (Fraction(5, 6) * Fraction(3, 5) * Fraction(2, 4)
                            * Fraction(1, 3)) ** 0.25
        got = corpus_bleu(refs, hyps, BleuConfig(smoothing="none"))
        assert got == pytest.approx(float(expected), abs=1e-9)
        assert got == pytest.approx(brute_bleu(refs, hyps), abs=1e-9)

    def test_brevity_penalty_monotone(self):
        ref = ["a b c d e f g h"]
        previous = 100.0 + 1e-9
        for cut in range(8, 3, -1):
            hyp = [" ".join("a b c d e f g h".split()[:cut])]
            score = corpus_bleu(ref, hyp, BleuConfig(smoothing="floor"))
            assert score <= previous
            previous = score

    def test_never_exceeds_100(self):
        import numpy as np
        rng = np.random.default_rng(0)
        vocab = ["alpha", "beta", "gamma", "delta"]
        for _ in range(30):
            refs = [" ".join(rng.choice(vocab, size=rng.integers(1, 9)))
                    for _ in range(3)]
            hyps = [" ".join(rng.choice(vocab, size=rng.integers(1, 9)))
                    for _ in range(3)]
            score = corpus_bleu(refs, hyps)
            assert 0.0 <= score <= 100.0
            assert score == pytest.approx(brute_bleu(refs, hyps, smoothing="floor"),
                                          abs=1e-9)

    def test_smoothing_floor_nonzero(self):
        score = corpus_bleu(["the cat sat on the mat"], ["the the the the the the"],
                            BleuConfig(smoothing="floor", smoothing_value=0.1))
        assert 0.0 < score < 100.0

    def test_length_mismatch_and_empty(self):
        with pytest.raises(ValueError):
            corpus_bleu(["a"], [])
        with pytest.raises(ValueError):
            corpus_bleu([], [])

    def test_bad_config(self):
        with pytest.raises(ValueError):
            corpus_bleu(["a"], ["a"], BleuConfig(max_ngram=0))
        with pytest.raises(ValueError):
            corpus_bleu(["a"], ["a"], BleuConfig(smoothing="exp"))


class TestEvaluate:
    def test_perfect_labels(self):
        corpus = build_pseudo_corpus(8, seed=3)
        transcripts, translations = evaluate(corpus)
        assert transcripts.wer == 0.0
        assert translations.bleu == pytest.approx(100.0)
        assert transcripts.n_sentences == 8
        assert transcripts.ref_word_count > 0

    def test_one_word_off(self):
        sample = Sample(id="a", duration_s=1.0, transcript="a b x",
                        translation="u v w z", gold_transcript="a b c",
                        gold_translation="u v w z", provenance="pseudo")
        corpus = Corpus(name="t", role="mixed", source_lang="en", target_lang="de",
                        samples=[sample])
        transcripts, _ = evaluate(corpus)
        assert transcripts.wer == pytest.approx(1 / 3)

    def test_empty_corpus_rejected(self):
        corpus = Corpus(name="t", role="mixed", source_lang="en", target_lang="de")
        with pytest.raises(ValueError, match="empty"):
            evaluate(corpus)

    def test_missing_field_reports_id(self):
        sample = Sample(id="broken", duration_s=1.0, gold_transcript="a",
                        gold_translation="b")
        corpus = Corpus(name="t", role="mixed", source_lang="en", target_lang="de",
                        samples=[sample])
        with pytest.raises(ValueError, match="broken"):
            evaluate(corpus)

    def test_zh_target_uses_char_tokenizer(self):
        sample = Sample(id="a", duration_s=1.0, transcript="hello world one two",
                        translation="你好世界", gold_transcript="hello world one two",
                        gold_translation="你好世界", provenance="pseudo")
        corpus = Corpus(name="t", role="mixed", source_lang="en", target_lang="zh",
                        samples=[sample])
        _, translations = evaluate(corpus)
        # char tokens give four unigrams and a full 4-gram; word tokens would
        # leave no 4-grams at all
        assert translations.bleu == pytest.approx(100.0)


def test_metric_signature():
    sig = metric_signature(NormalizationConfig(), BleuConfig())
    assert sig == "case.lc+numrefs.1+smooth.floor.0.1+tok.13a"
    sig = metric_signature(NormalizationConfig(lowercase=False),
                           BleuConfig(smoothing="none", tokenizer="zh"))
    assert sig == "case.mixed+numrefs.1+smooth.none+tok.zh"


class TestDetectLooping:
    def test_bigram_loop(self):
        check = detect_looping("the cat the cat the cat sat")
        assert check.flagged
        assert check.ngram == "the cat"
        assert check.repeats == 3

    def test_clean_text(self):
        check = detect_looping("a b c d")
        assert not check.flagged
        assert check.repeats == 1

    def test_empty(self):
        check = detect_looping("")
        assert not check.flagged
        assert check.repeats == 0
        assert check.ngram is None

    def test_unigram_run(self):
        check = detect_looping("x no no no no y")
        assert check.flagged
        assert check.ngram == "no"
        assert check.repeats == 4

    def test_surrounding_tokens_invariant(self):
        inner = "p q p q p q p q"
        base = detect_looping(inner)
        wrapped = detect_looping("s1 s2 " + inner + " e1 e2")
        assert (base.flagged, base.ngram, base.repeats) == \
            (wrapped.flagged, wrapped.ngram, wrapped.repeats)

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            detect_looping("a", max_n=0)
        with pytest.raises(ValueError):
            detect_looping("a", min_repeats=1)

    def test_brute_force_scanner_agreement(self):
        import numpy as np
        rng = np.random.default_rng(7)
        vocab = [f"t{i}" for i in range(6)]

        def brute(tokens, max_n, min_repeats):
            best = 1 if tokens else 0
            for n in range(1, max_n + 1):
                for start in range(len(tokens)):
                    count = 0
                    pos = start
                    while tokens[pos:pos + n] and \
                            tokens[pos:pos + n] == tokens[start:start + n]:
                        count += 1
                        pos += n
                    if tokens[start:start + n] and len(tokens[start:start + n]) == n:
                        best = max(best, count)
            return best >= min_repeats, best

        for _ in range(200):
            tokens = list(rng.choice(vocab, size=rng.integers(0, 14)))
            if rng.random() < 0.5 and len(tokens) >= 1:
                # inject a loop at a random position
                n = int(rng.integers(1, 3))
                reps = int(rng.integers(2, 5))
                start = int(rng.integers(0, len(tokens)))
                unit = tokens[start:start + n] or [vocab[0]]
                tokens[start:start] = unit * reps
            text = " ".join(tokens)
            got = detect_looping(text, max_n=4, min_repeats=3)
            want_flag, want_count = brute(text.split(), 4, 3)
            assert got.repeats == want_count
            assert got.flagged == want_flag
