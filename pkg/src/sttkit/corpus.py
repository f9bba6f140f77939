"""Manifest data model: samples, corpora, JSONL manifest I/O, and corpus merging.

A manifest is one JSON record per line. Record fields: ``id``, ``audio_ref``,
``duration_s``, ``transcript``, ``translation``, ``gold_transcript``,
``gold_translation``, ``provenance``, ``segments``, ``emb_tc``, ``emb_tl``.
Absent optional fields are omitted. Corpus-level metadata (name, role,
language pair) lives in a sidecar ``<manifest>.meta.json`` so that
save -> load round-trips the full corpus.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

logger = logging.getLogger(__name__)

MANIFEST_SCHEMA_VERSION = "1"

PROVENANCES = ("gold", "pseudo", "augmented")
ROLES = ("supervised", "unsupervised", "augmented", "mixed")

# manifest key -> Sample attribute, where they differ
_KEY_TO_ATTR = {"emb_tc": "embedding_transcript", "emb_tl": "embedding_translation"}
_ATTR_TO_KEY = {v: k for k, v in _KEY_TO_ATTR.items()}

MANIFEST_FIELDS = (
    "id",
    "audio_ref",
    "duration_s",
    "transcript",
    "translation",
    "gold_transcript",
    "gold_translation",
    "provenance",
    "segments",
    "emb_tc",
    "emb_tl",
)

_TEXT_FIELDS = ("transcript", "translation", "gold_transcript", "gold_translation")


class ManifestError(ValueError):
    """Malformed manifest file or violated data invariant."""


def word_count(text: str) -> int:
    """Number of whitespace-delimited tokens."""
    return len(text.split())


@dataclass
class Sample:
    """One utterance with optional gold and pseudo labels.

    ``transcript``/``translation`` hold model-predicted (pseudo) text,
    ``gold_transcript``/``gold_translation`` hold reference text. Augmented
    samples record the ids of their source segments in ``segments``.
    """

    id: str
    duration_s: float
    audio_ref: str | None = None
    transcript: str | None = None
    translation: str | None = None
    gold_transcript: str | None = None
    gold_translation: str | None = None
    provenance: str = "gold"
    segments: list[str] | None = None
    embedding_transcript: list[float] | None = None
    embedding_translation: list[float] | None = None

    def validate(self) -> None:
        sid = self.id
        if not isinstance(sid, str) or not sid:
            raise ManifestError(f"sample id must be a non-empty string, got {sid!r}")
        if not isinstance(self.duration_s, (int, float)) or isinstance(self.duration_s, bool):
            raise ManifestError(f"sample {sid!r}: duration_s must be a number")
        if not math.isfinite(self.duration_s) or self.duration_s <= 0:
            raise ManifestError(
                f"sample {sid!r}: duration_s must be positive and finite, got {self.duration_s}"
            )
        if self.provenance not in PROVENANCES:
            raise ManifestError(
                f"sample {sid!r}: provenance must be one of {PROVENANCES}, got {self.provenance!r}"
            )
        for name in _TEXT_FIELDS:
            value = getattr(self, name)
            if value is not None and not isinstance(value, str):
                raise ManifestError(f"sample {sid!r}: {name} must be a string")
        if self.provenance == "pseudo" and (self.transcript is None or self.translation is None):
            raise ManifestError(
                f"sample {sid!r}: pseudo provenance requires both transcript and translation"
            )
        if self.provenance == "augmented":
            if not self.segments or len(self.segments) < 2:
                raise ManifestError(
                    f"sample {sid!r}: augmented provenance requires >= 2 source segments"
                )
        elif self.segments:
            raise ManifestError(
                f"sample {sid!r}: segments only allowed for augmented provenance"
            )
        emb_tc, emb_tl = self.embedding_transcript, self.embedding_translation
        for name, vec in (("emb_tc", emb_tc), ("emb_tl", emb_tl)):
            if vec is not None and (len(vec) == 0 or not all(
                    isinstance(v, (int, float)) and not isinstance(v, bool) for v in vec)):
                raise ManifestError(f"sample {sid!r}: {name} must be a non-empty numeric vector")
        if emb_tc is not None and emb_tl is not None and len(emb_tc) != len(emb_tl):
            raise ManifestError(
                f"sample {sid!r}: embedding dimensions differ ({len(emb_tc)} vs {len(emb_tl)})"
            )

    def to_record(self) -> dict:
        """Manifest record with fields in canonical order, absent ones omitted."""
        record: dict = {"id": self.id}
        if self.audio_ref is not None:
            record["audio_ref"] = self.audio_ref
        record["duration_s"] = float(self.duration_s)
        for name in _TEXT_FIELDS:
            value = getattr(self, name)
            if value is not None:
                record[name] = value
        record["provenance"] = self.provenance
        if self.segments:
            record["segments"] = list(self.segments)
        if self.embedding_transcript is not None:
            record["emb_tc"] = [float(v) for v in self.embedding_transcript]
        if self.embedding_translation is not None:
            record["emb_tl"] = [float(v) for v in self.embedding_translation]
        return record

    @classmethod
    def from_record(cls, record: dict) -> tuple["Sample", list[str]]:
        """Build a validated Sample; returns (sample, unknown manifest keys)."""
        if not isinstance(record, dict):
            raise ManifestError(f"record must be a JSON object, got {type(record).__name__}")
        unknown = [k for k in record if k not in MANIFEST_FIELDS]
        if "id" not in record:
            raise ManifestError("record missing required field 'id'")
        if "duration_s" not in record:
            raise ManifestError(f"record {record.get('id')!r} missing required field 'duration_s'")
        kwargs: dict = {}
        for key in MANIFEST_FIELDS:
            if key in record:
                kwargs[_KEY_TO_ATTR.get(key, key)] = record[key]
        duration = kwargs.get("duration_s")
        if isinstance(duration, int) and not isinstance(duration, bool):
            kwargs["duration_s"] = float(duration)
        segments = kwargs.get("segments")
        if segments is not None and not (
                isinstance(segments, list) and all(isinstance(s, str) for s in segments)):
            raise ManifestError(f"record {record['id']!r}: segments must be a list of ids")
        for attr in ("embedding_transcript", "embedding_translation"):
            vec = kwargs.get(attr)
            if vec is not None:
                if not isinstance(vec, list):
                    raise ManifestError(f"record {record['id']!r}: embeddings must be arrays")
                kwargs[attr] = [float(v) for v in vec]
        sample = cls(**kwargs)
        sample.validate()
        return sample, unknown


@dataclass
class Corpus:
    """Ordered, role-tagged collection of samples for one language pair."""

    name: str
    role: str
    source_lang: str
    target_lang: str
    samples: list[Sample] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def __getitem__(self, index):
        return self.samples[index]

    def ids(self) -> list[str]:
        return [s.id for s in self.samples]

    def by_id(self) -> dict[str, Sample]:
        return {s.id: s for s in self.samples}

    def with_samples(self, samples: list[Sample], role: str | None = None,
                     name: str | None = None) -> "Corpus":
        """Copy of this corpus carrying a different sample list."""
        return Corpus(
            name=self.name if name is None else name,
            role=self.role if role is None else role,
            source_lang=self.source_lang,
            target_lang=self.target_lang,
            samples=list(samples),
        )

    def validate(self) -> None:
        if self.role not in ROLES:
            raise ManifestError(f"corpus role must be one of {ROLES}, got {self.role!r}")
        seen: dict[str, int] = {}
        for pos, sample in enumerate(self.samples):
            sample.validate()
            if sample.id in seen:
                raise ManifestError(
                    f"duplicate sample id {sample.id!r} (positions {seen[sample.id]} and {pos})"
                )
            seen[sample.id] = pos
        if self.role == "supervised":
            for sample in self.samples:
                if sample.gold_transcript is None or sample.gold_translation is None:
                    raise ManifestError(
                        f"supervised corpus requires gold transcript and translation; "
                        f"sample {sample.id!r} is missing one"
                    )


def _meta_path(path: Path) -> Path:
    return path.with_name(path.name + ".meta.json")


def load_manifest(path: str | Path, *, name: str | None = None, role: str | None = None,
                  source_lang: str | None = None, target_lang: str | None = None) -> Corpus:
    """Load and validate a JSONL manifest.

    Corpus metadata is read from the ``<path>.meta.json`` sidecar when present;
    keyword arguments override it. Unknown record fields are ignored (one
    warning reports the total count). Raises ManifestError with the offending
    line number on malformed records, duplicate ids, or invariant violations.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"manifest not found: {path}")

    meta: dict = {}
    meta_path = _meta_path(path)
    if meta_path.is_file():
        with open(meta_path, encoding="utf-8") as handle:
            meta = json.load(handle)

    samples: list[Sample] = []
    id_lines: dict[str, int] = {}
    unknown_count = 0
    unknown_names: set[str] = set()
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"{path}:{lineno}: malformed record: {exc}") from exc
            try:
                sample, unknown = Sample.from_record(record)
            except ManifestError as exc:
                raise ManifestError(f"{path}:{lineno}: {exc}") from exc
            except (TypeError, ValueError) as exc:
                raise ManifestError(f"{path}:{lineno}: bad record: {exc}") from exc
            if unknown:
                unknown_count += len(unknown)
                unknown_names.update(unknown)
            if sample.id in id_lines:
                raise ManifestError(
                    f"{path}: duplicate id {sample.id!r} on lines {id_lines[sample.id]} "
                    f"and {lineno}"
                )
            id_lines[sample.id] = lineno
            samples.append(sample)

    if unknown_count:
        logger.warning(
            "%s: ignored %d unknown field occurrence(s): %s",
            path, unknown_count, ", ".join(sorted(unknown_names)),
        )

    corpus = Corpus(
        name=name if name is not None else meta.get("name", path.stem),
        role=role if role is not None else meta.get("role", "mixed"),
        source_lang=source_lang if source_lang is not None else meta.get("source_lang", "und"),
        target_lang=target_lang if target_lang is not None else meta.get("target_lang", "und"),
        samples=samples,
    )
    try:
        corpus.validate()
    except ManifestError as exc:
        raise ManifestError(f"{path}: {exc}") from exc
    return corpus


def save_manifest(corpus: Corpus, path: str | Path) -> None:
    """Write a corpus as a JSONL manifest plus its metadata sidecar.

    Output is deterministic: fixed field order, LF line endings, unescaped
    Unicode. ``load_manifest(save_manifest(c))`` reproduces ``c`` exactly.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for sample in corpus.samples:
            handle.write(json.dumps(sample.to_record(), ensure_ascii=False))
            handle.write("\n")
    meta = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "name": corpus.name,
        "role": corpus.role,
        "source_lang": corpus.source_lang,
        "target_lang": corpus.target_lang,
    }
    with open(_meta_path(path), "w", encoding="utf-8", newline="\n") as handle:
        json.dump(meta, handle, ensure_ascii=False, indent=2, sort_keys=True)
        handle.write("\n")


def _replica_count(weight: float) -> int:
    """Round half up; replication count for a sample weight."""
    return int(math.floor(weight + 0.5))


def merge_corpora(a: Corpus, b: Corpus, weight_b: float = 1.0) -> Corpus:
    """Concatenate two corpora of the same language pair into a mixed corpus.

    ``b``'s samples are replicated round(weight_b) times (weight 1.0 leaves
    them unreplicated). Colliding ids from ``b`` get a deterministic ``#b``
    suffix; replicas beyond the first get ``#<r>``.
    """
    if (a.source_lang, a.target_lang) != (b.source_lang, b.target_lang):
        raise ValueError(
            f"language pair mismatch: {a.source_lang}-{a.target_lang} vs "
            f"{b.source_lang}-{b.target_lang}"
        )
    if not (isinstance(weight_b, (int, float)) and weight_b > 0):
        raise ValueError(f"weight_b must be positive, got {weight_b!r}")

    merged: list[Sample] = list(a.samples)
    taken = {s.id for s in merged}
    for r in range(1, _replica_count(weight_b) + 1):
        for sample in b.samples:
            new_id = sample.id if r == 1 else f"{sample.id}#{r}"
            while new_id in taken:
                new_id = f"{new_id}#b"
            taken.add(new_id)
            merged.append(sample if new_id == sample.id else replace(sample, id=new_id))
    return Corpus(
        name=f"{a.name}+{b.name}",
        role="mixed",
        source_lang=a.source_lang,
        target_lang=a.target_lang,
        samples=merged,
    )
