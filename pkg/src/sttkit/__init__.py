"""sttkit: corpus toolkit for self-training speech transcription+translation.

Manifest management, length/density/similarity pseudo-label filters,
concatenation augmentation, WER/BLEU scoring, domain-mismatch diagnostics,
and a round-loop orchestrator driving an external trainer.

Submodules are imported lazily so lightweight entry points (for example the
external-process mock trainer) do not pay for the heavier dependencies.
"""

import importlib

__version__ = "0.1.0"

_EXPORTS = {
    # corpus model and manifest I/O
    "MANIFEST_SCHEMA_VERSION": ".corpus",
    "Corpus": ".corpus",
    "ManifestError": ".corpus",
    "Sample": ".corpus",
    "load_manifest": ".corpus",
    "merge_corpora": ".corpus",
    "save_manifest": ".corpus",
    "word_count": ".corpus",
    # text metrics
    "BleuConfig": ".metrics",
    "EvalReport": ".metrics",
    "NormalizationConfig": ".metrics",
    "LoopCheck": ".metrics",
    "corpus_bleu": ".metrics",
    "detect_looping": ".metrics",
    "edit_distance": ".metrics",
    "evaluate": ".metrics",
    "metric_signature": ".metrics",
    "normalize_text": ".metrics",
    "tokenize_13a": ".metrics",
    "tokenize_zh": ".metrics",
    "wer": ".metrics",
    # density estimation
    "GaussianKde": ".density",
    "fit_kde": ".density",
    "keep_top_fraction": ".density",
    # filters
    "EmbeddingSimilarityFilter": ".filters",
    "FilterReport": ".filters",
    "PreprocessFilter": ".filters",
    "RatioKdeFilter": ".filters",
    "RatioToGoldFilter": ".filters",
    "cosine_similarity": ".filters",
    "filter_embedding_similarity": ".filters",
    "filter_ratio_kde": ".filters",
    "filter_ratio_to_gold": ".filters",
    "loop_report": ".filters",
    "preprocess_filter": ".filters",
    # augmentation
    "AugmentPlan": ".augment",
    "ConcatAugmenter": ".augment",
    "apply_plan": ".augment",
    "concat_audio": ".augment",
    "concat_pair": ".augment",
    "concat_group": ".augment",
    "make_plan": ".augment",
    # diagnostics
    "VocabStats": ".diagnostics",
    "length_profile": ".diagnostics",
    "length_values": ".diagnostics",
    "ratio_scatter_export": ".diagnostics",
    "vocab_overlap": ".diagnostics",
    # simulation harness
    "NoiseModel": ".simulate",
    "loop_injected": ".simulate",
    "mock_label": ".simulate",
    # orchestration
    "LoopCorpora": ".selftrain",
    "LoopSpec": ".selftrain",
    "RoundConfig": ".selftrain",
    "RoundRecord": ".selftrain",
    "TrainerContract": ".selftrain",
    "TrainerError": ".selftrain",
    "load_loop_config": ".selftrain",
    "run_base": ".selftrain",
    "run_loop": ".selftrain",
    "run_round": ".selftrain",
}

__all__ = sorted(_EXPORTS)


def __getattr__(name):
    try:
        module_name = _EXPORTS[name]
    except KeyError:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}") from None
    value = getattr(importlib.import_module(module_name, __name__), name)
    globals()[name] = value
    return value


def __dir__():
    return sorted(set(globals()) | set(_EXPORTS))
