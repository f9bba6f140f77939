"""Command-line interface: one executable, one subcommand per pipeline stage.

Exit codes: 0 success, 1 validation/usage error, 2 I/O or external-process
error. Every file-producing run writes its resolved configuration next to
its outputs (``run_config.json``), and all randomized behavior is
reproducible from ``--seed``.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .augment import apply_plan, concat_audio, make_plan
from .corpus import (
    MANIFEST_SCHEMA_VERSION,
    ManifestError,
    load_manifest,
    merge_corpora,
    save_manifest,
)
from .density import GaussianKde
from .diagnostics import (
    LENGTH_FIELDS,
    length_profile,
    length_values,
    ratio_scatter_export,
    vocab_overlap,
)
from .filters import (
    filter_embedding_similarity,
    filter_ratio_kde,
    filter_ratio_to_gold,
    preprocess_filter,
)
from .metrics import BleuConfig, NormalizationConfig, evaluate, metric_signature
from .selftrain import TrainerError, load_loop_config, run_loop


class _UsageError(Exception):
    """Bad command line; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}\n{self.format_usage().rstrip()}")


def _write_run_config(out_dir: Path, args: argparse.Namespace) -> None:
    resolved = {k: v for k, v in vars(args).items() if k != "func"}
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "run_config.json", "w", encoding="utf-8", newline="\n") as handle:
        json.dump(resolved, handle, ensure_ascii=False, indent=2, sort_keys=True, default=str)
        handle.write("\n")


def _load_with_overrides(args, attr="manifest"):
    return load_manifest(
        getattr(args, attr),
        name=args.name if hasattr(args, "name") else None,
        role=getattr(args, "role", None),
        source_lang=getattr(args, "source_lang", None),
        target_lang=getattr(args, "target_lang", None),
    )


def _write_tsv(path: Path, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for row in rows:
            handle.write("\t".join(str(v) for v in row))
            handle.write("\n")


# ---------------------------------------------------------------------------
# subcommands


def cmd_ingest(args) -> int:
    corpus = _load_with_overrides(args)
    dropped = 0
    if not args.no_length_filter:
        corpus, report = preprocess_filter(
            corpus, args.min_duration, args.max_duration, args.max_words)
        dropped = report.n_dropped
        if args.report:
            report.save(args.report)
    save_manifest(corpus, args.out)
    _write_run_config(Path(args.out).parent, args)
    print(f"kept={len(corpus)} dropped={dropped}")
    return 0


def cmd_evaluate(args) -> int:
    corpus = _load_with_overrides(args)
    norm = NormalizationConfig(
        lowercase=not args.keep_case,
        strip_diacritics=not args.keep_diacritics,
        strip_punctuation=not args.keep_punctuation,
    )
    bleu_cfg = None
    if args.tokenizer != "auto":
        bleu_cfg = BleuConfig(
            max_ngram=args.max_ngram,
            smoothing=args.smoothing,
            smoothing_value=args.smoothing_value,
            tokenizer=args.tokenizer,
        )
    transcripts, translations = evaluate(corpus, norm, bleu_cfg)
    if args.report:
        effective = bleu_cfg or BleuConfig(
            tokenizer="zh" if corpus.target_lang.lower().startswith("zh") else "13a")
        signature = metric_signature(norm, effective)
        report_path = Path(args.report)
        report_path.parent.mkdir(parents=True, exist_ok=True)
        # one record per line, like manifests
        with open(report_path, "w", encoding="utf-8", newline="\n") as handle:
            for side, report in (("transcripts", transcripts),
                                 ("translations", translations)):
                record = {"side": side, **report.to_record(), "signature": signature}
                handle.write(json.dumps(record, ensure_ascii=False) + "\n")
        _write_run_config(report_path.parent, args)
    print(f"WER={transcripts.wer:.4f} BLEU={translations.bleu:.4f}")
    return 0


def cmd_filter(args) -> int:
    corpus = _load_with_overrides(args)
    if args.method == "ratio-kde":
        filtered, report = filter_ratio_kde(corpus, args.keep,
                                            length_unit=args.length_unit,
                                            jobs=args.jobs)
    elif args.method == "ratio-gold":
        filtered, report = filter_ratio_to_gold(corpus, args.low, args.high)
    else:  # laser: embedding cosine-similarity filtering
        filtered, report = filter_embedding_similarity(corpus, args.keep)
    save_manifest(filtered, args.out)
    report_path = args.report or f"{args.out}.report.json"
    report.save(report_path)
    _write_run_config(Path(args.out).parent, args)
    print(f"method={report.method} kept={report.n_kept} dropped={report.n_dropped}")
    return 0


def cmd_augment(args) -> int:
    corpus = _load_with_overrides(args)
    plan = make_plan(corpus, args.k, args.seed, args.separator, args.chain)
    augmented = apply_plan(corpus, plan)
    if args.with_audio:
        audio_dir = Path(args.audio_dir or Path(args.out).parent / "audio")
        by_id = corpus.by_id()
        resolved = []
        for sample, group in zip(augmented, plan.pairs):
            sources = [by_id[sample_id] for sample_id in group]
            missing = [src.id for src in sources if src.audio_ref is None]
            if missing:
                raise ValueError(f"samples missing audio_ref: {', '.join(missing)}")
            out_path = audio_dir / f"{sample.id.replace(':', '_').replace('/', '_')}.wav"
            concat_audio([src.audio_ref for src in sources], out_path)
            resolved.append(replace(sample, audio_ref=str(out_path)))
        augmented = augmented.with_samples(resolved)
    if args.merge:
        augmented = merge_corpora(corpus, augmented)
    save_manifest(augmented, args.out)
    plan_path = args.plan or f"{args.out}.plan.json"
    plan.save(plan_path)
    _write_run_config(Path(args.out).parent, args)
    print(f"augmented={len(plan.pairs)} out={args.out}")
    return 0


def cmd_diagnose(args) -> int:
    corpus_a = load_manifest(args.a)
    corpus_b = load_manifest(args.b)

    stats = vocab_overlap(corpus_a, corpus_b, args.side, args.tail_threshold)
    xs, dens_a, dens_b = length_profile(corpus_a, corpus_b, args.field, args.grid)

    scatter_corpus = corpus_b if args.scatter_on == "b" else corpus_a
    if any(s.transcript is None for s in scatter_corpus):
        # no pseudo labels yet: scatter the gold transcripts instead
        if any(s.gold_transcript is None for s in scatter_corpus):
            raise ValueError(
                f"corpus {scatter_corpus.name!r} has samples without any transcript; "
                "cannot build the density scatter"
            )
        logging.getLogger(__name__).info(
            "ratio scatter: corpus %r has no pseudo labels, using gold transcripts",
            scatter_corpus.name)
        scatter_corpus = scatter_corpus.with_samples(
            [replace(s, transcript=s.gold_transcript) for s in scatter_corpus])
    rows = ratio_scatter_export(scatter_corpus)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "vocab.json", "w", encoding="utf-8", newline="\n") as handle:
        json.dump(stats.to_dict(), handle, ensure_ascii=False, indent=2, sort_keys=True)
        handle.write("\n")
    _write_tsv(out_dir / "length_profile.tsv", zip(xs, dens_a, dens_b))
    _write_tsv(out_dir / "ratio_scatter.tsv", rows)

    _write_run_config(out_dir, args)
    print(f"types_a={stats.types_a} types_b={stats.types_b} common={stats.common} "
          f"jaccard={stats.jaccard:.4f}")
    return 0


def cmd_kde_export(args) -> int:
    corpus = load_manifest(args.manifest)
    values = length_values(corpus, args.field)
    model = GaussianKde(bandwidth=args.bandwidth).fit(values)
    xs, _ = model.grid_1d(args.grid)
    densities = model.pdf_batch(xs, jobs=args.jobs)
    out_path = Path(args.out)
    _write_tsv(out_path, zip(xs, densities))
    _write_run_config(out_path.parent, args)
    print(f"grid={args.grid} out={args.out}")
    return 0


def cmd_selftrain_run(args) -> int:
    spec = load_loop_config(args.config)
    corpora = spec.load_corpora()
    records = run_loop(spec.contract, corpora, spec.config, spec.exp_dir)
    for record in records:
        transcripts, translations = record.eval_supervised
        print(f"round={record.round} train_size="
              f"{record.n_supervised + record.n_pseudo_kept + record.n_augmented} "
              f"WER={transcripts.wer:.4f} BLEU={translations.bleu:.4f}")
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_manifest_overrides(parser) -> None:
    parser.add_argument("--name", default=None, help="corpus name override")
    parser.add_argument("--role", default=None,
                        choices=["supervised", "unsupervised", "augmented", "mixed"])
    parser.add_argument("--source-lang", default=None)
    parser.add_argument("--target-lang", default=None)


def build_parser() -> _Parser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="seed for randomized stages (default 0)")
    common.add_argument("--jobs", type=int, default=argparse.SUPPRESS,
                        help="worker bound for per-sample stages (default: cpu count)")
    common.add_argument("--log-level", default=argparse.SUPPRESS,
                        help="logging level (default INFO)")

    parser = _Parser(prog="sttkit", description=__doc__, parents=[common])
    parser.set_defaults(seed=0, jobs=os.cpu_count() or 1, log_level="INFO")
    parser.add_argument(
        "--version", action="version",
        version=f"sttkit {__version__} (manifest schema {MANIFEST_SCHEMA_VERSION})")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    ingest = sub.add_parser("ingest", parents=[common],
                            help="validate a manifest and apply length preprocessing")
    ingest.add_argument("--manifest", required=True)
    ingest.add_argument("--out", required=True)
    ingest.add_argument("--report", default=None, help="write the filter report here")
    ingest.add_argument("--no-length-filter", action="store_true")
    ingest.add_argument("--min-duration", type=float, default=0.5)
    ingest.add_argument("--max-duration", type=float, default=15.0)
    ingest.add_argument("--max-words", type=int, default=50)
    _add_manifest_overrides(ingest)
    ingest.set_defaults(func=cmd_ingest)

    ev = sub.add_parser("evaluate", parents=[common],
                        help="score pseudo labels against gold labels")
    ev.add_argument("--manifest", required=True)
    ev.add_argument("--report", default=None, help="write a JSON report here")
    ev.add_argument("--keep-case", action="store_true")
    ev.add_argument("--keep-diacritics", action="store_true")
    ev.add_argument("--keep-punctuation", action="store_true")
    ev.add_argument("--max-ngram", type=int, default=4)
    ev.add_argument("--smoothing", choices=["none", "floor", "add_k"], default="floor")
    ev.add_argument("--smoothing-value", type=float, default=0.1)
    ev.add_argument("--tokenizer", choices=["auto", "13a", "zh"], default="auto")
    _add_manifest_overrides(ev)
    ev.set_defaults(func=cmd_evaluate)

    filt = sub.add_parser("filter", parents=[common], help="apply a pseudo-label filter")
    filt.add_argument("--manifest", required=True)
    filt.add_argument("--method", required=True, choices=["ratio-kde", "ratio-gold", "laser"])
    filt.add_argument("--keep", type=float, default=0.9,
                      help="keep fraction for ratio-kde and laser")
    filt.add_argument("--low", type=float, default=0.9)
    filt.add_argument("--high", type=float, default=1.1)
    filt.add_argument("--length-unit", choices=["words", "chars"], default="words")
    filt.add_argument("--out", required=True)
    filt.add_argument("--report", default=None)
    _add_manifest_overrides(filt)
    filt.set_defaults(func=cmd_filter)

    aug = sub.add_parser("augment", parents=[common],
                         help="build concatenation-augmented samples")
    aug.add_argument("--manifest", required=True)
    aug.add_argument("--k", type=int, default=20000)
    aug.add_argument("--separator", default=" ")
    aug.add_argument("--chain", type=int, default=2,
                     help="samples concatenated per augmented item")
    aug.add_argument("--out", required=True)
    aug.add_argument("--plan", default=None, help="plan file path (default <out>.plan.json)")
    audio = aug.add_mutually_exclusive_group()
    audio.add_argument("--with-audio", action="store_true",
                       help="also concatenate the source WAV files")
    audio.add_argument("--manifest-only", action="store_true",
                       help="skip audio concatenation (the default)")
    aug.add_argument("--audio-dir", default=None)
    aug.add_argument("--merge", action="store_true",
                     help="write the union of source and augmented samples")
    _add_manifest_overrides(aug)
    aug.set_defaults(func=cmd_augment)

    diag = sub.add_parser("diagnose", parents=[common],
                          help="vocabulary overlap and length-distribution exports")
    diag.add_argument("--a", required=True, help="first manifest (e.g. supervised set)")
    diag.add_argument("--b", required=True, help="second manifest (e.g. unsupervised set)")
    diag.add_argument("--side", choices=["transcript", "translation"], default="transcript")
    diag.add_argument("--field", choices=list(LENGTH_FIELDS), default="duration")
    diag.add_argument("--tail-threshold", type=int, default=2)
    diag.add_argument("--grid", type=int, default=256)
    diag.add_argument("--scatter-on", choices=["a", "b"], default="b",
                      help="which corpus to export the density scatter for")
    diag.add_argument("--out-dir", required=True)
    diag.set_defaults(func=cmd_diagnose)

    kde = sub.add_parser("kde-export", parents=[common],
                         help="export a 1D density as (grid point, density) TSV")
    kde.add_argument("--manifest", required=True)
    kde.add_argument("--field", choices=list(LENGTH_FIELDS), default="duration")
    kde.add_argument("--grid", type=int, default=256)
    kde.add_argument("--bandwidth", type=float, default=None)
    kde.add_argument("--out", required=True)
    kde.set_defaults(func=cmd_kde_export)

    st = sub.add_parser("selftrain", parents=[common], help="pseudo-labeling round loop")
    st_sub = st.add_subparsers(dest="selftrain_command", required=True)
    st_run = st_sub.add_parser("run", parents=[common])
    st_run.add_argument("--config", required=True, help="flat JSON loop configuration")
    st_run.set_defaults(func=cmd_selftrain_run)

    return parser


def main(argv=None) -> int:
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.INFO))
        result = args.func(args)
        return 0 if result is None else int(result)
    except SystemExit as exc:  # argparse --help/--version
        return int(exc.code) if exc.code else 0
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (ManifestError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (TrainerError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
