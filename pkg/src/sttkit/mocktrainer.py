"""Deterministic stand-in for the external trainer/labeler processes.

A checkpoint is a JSON file holding the noise the "model" exhibits when
labeling: ``{"word_sub_rate": ..., "loop_rate_slope": ...}``. Training
reduces both rates in proportion to how clean (loop-free) the training
manifest is, so cleaner kept sets yield measurably better labels in the
next round. Labeling applies :func:`sttkit.selftrain.mock_label` with the
checkpoint noise. Everything is deterministic given the seeds and inputs.

Usage (as command templates for the orchestrator)::

    python -m sttkit.mocktrainer train --base-sub-rate 0.4 --base-loop-slope 0.1 \
        --train-manifest {train_manifest} --init-checkpoint {init_checkpoint} \
        --out-checkpoint {out_checkpoint}
    python -m sttkit.mocktrainer label --seed 7 --checkpoint {checkpoint} \
        --in-manifest {in_manifest} --out-manifest {out_manifest}
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

from .corpus import load_manifest, save_manifest
from .metrics import detect_looping
from .simulate import NoiseModel, mock_label


def _load_checkpoint(path: str) -> dict:
    with open(path, encoding="utf-8") as handle:
        return json.load(handle)


def _save_checkpoint(path: str, state: dict) -> None:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(state, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _training_text(sample) -> str | None:
    if sample.provenance == "pseudo":
        return sample.transcript
    return sample.gold_transcript


def cmd_train(args) -> int:
    corpus = load_manifest(args.train_manifest)
    if len(corpus) == 0:
        print("empty training manifest", file=sys.stderr)
        return 1
    if args.init_checkpoint and args.init_checkpoint != "-":
        state = _load_checkpoint(args.init_checkpoint)
    else:
        state = {
            "word_sub_rate": args.base_sub_rate,
            "loop_rate_slope": args.base_loop_slope,
            "loop_ngram_n": args.loop_ngram_n,
            "loop_repeats": args.loop_repeats,
        }
    flagged = 0
    for sample in corpus:
        text = _training_text(sample)
        if text is not None and detect_looping(text).flagged:
            flagged += 1
    clean_frac = 1.0 - flagged / len(corpus)
    factor = 1.0 - args.improve * clean_frac
    state = dict(state)
    state["word_sub_rate"] = state["word_sub_rate"] * factor
    state["loop_rate_slope"] = state["loop_rate_slope"] * factor
    state["trained_on"] = len(corpus)
    _save_checkpoint(args.out_checkpoint, state)
    return 0


def cmd_label(args) -> int:
    state = _load_checkpoint(args.checkpoint)
    noise = NoiseModel(
        word_sub_rate=float(state["word_sub_rate"]),
        loop_rate_slope=float(state["loop_rate_slope"]),
        loop_ngram_n=int(state.get("loop_ngram_n", 2)),
        loop_repeats=int(state.get("loop_repeats", 4)),
    )
    corpus = load_manifest(args.in_manifest)
    save_manifest(mock_label(corpus, noise, seed=args.seed), args.out_manifest)
    return 0


def _hash_embed(text: str, dim: int) -> list[float]:
    vec = [0.0] * dim
    padded = f" {text} "
    for i in range(len(padded) - 1):
        bigram = padded[i:i + 2].encode("utf-8")
        bucket = int.from_bytes(hashlib.sha256(bigram).digest()[:4], "big") % dim
        vec[bucket] += 1.0
    norm = math.sqrt(sum(v * v for v in vec))
    return [v / norm for v in vec] if norm > 0 else [1.0] + [0.0] * (dim - 1)


def cmd_embed(args) -> int:
    corpus = load_manifest(args.in_manifest)
    embedded = []
    for sample in corpus:
        if sample.transcript is None or sample.translation is None:
            print(f"sample {sample.id} has no pseudo labels to embed", file=sys.stderr)
            return 1
        embedded.append(replace(
            sample,
            embedding_transcript=_hash_embed(sample.transcript, args.dim),
            embedding_translation=_hash_embed(sample.translation, args.dim),
        ))
    save_manifest(corpus.with_samples(embedded), args.out_manifest)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sttkit-mocktrainer", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="update the checkpoint from a training manifest")
    train.add_argument("--train-manifest", required=True)
    train.add_argument("--init-checkpoint", default="-",
                       help="previous checkpoint path, or '-' for a fresh start")
    train.add_argument("--out-checkpoint", required=True)
    train.add_argument("--base-sub-rate", type=float, default=0.4)
    train.add_argument("--base-loop-slope", type=float, default=0.1)
    train.add_argument("--loop-ngram-n", type=int, default=2)
    train.add_argument("--loop-repeats", type=int, default=4)
    train.add_argument("--improve", type=float, default=0.5,
                       help="noise reduction per round, scaled by training-set cleanliness")
    train.set_defaults(func=cmd_train)

    label = sub.add_parser("label", help="write pseudo labels for a manifest")
    label.add_argument("--checkpoint", required=True)
    label.add_argument("--in-manifest", required=True)
    label.add_argument("--out-manifest", required=True)
    label.add_argument("--seed", type=int, default=0)
    label.set_defaults(func=cmd_label)

    embed = sub.add_parser("embed", help="attach deterministic hash embeddings")
    embed.add_argument("--checkpoint", required=True,
                       help="accepted for contract compatibility; unused")
    embed.add_argument("--in-manifest", required=True)
    embed.add_argument("--out-manifest", required=True)
    embed.add_argument("--dim", type=int, default=16)
    embed.set_defaults(func=cmd_embed)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
