"""Round-loop orchestration: label, filter, combine, retrain, evaluate.

The model itself lives behind an external-process contract: shell command
templates for training, labeling, and (optionally) embedding. Each round is
built in a temporary directory and promoted atomically, so a failed stage
leaves all previous rounds untouched.

Experiment directory layout::

    exp_dir/
      config.json              resolved round configuration + hash
      inputs/                  preprocessed input manifests
      augmented.manifest       concatenation-augmented set (augment_k > 0)
      augment_plan.json
      state.json               last round, current checkpoint, stop counters
      rounds/<k>/              train.manifest, pseudo.manifest, kept.manifest,
                               filter_report.json, record.json, checkpoint.ckpt,
                               eval manifests, logs/

Command templates receive absolute paths. Exit code 0 means success;
anything else aborts the round. A label command must write a manifest that
preserves the input records (including gold fields) and fills ``transcript``,
``translation``, and ``provenance=pseudo``. When training from scratch the
``{init_checkpoint}`` placeholder receives the literal ``-``.
"""

from __future__ import annotations

import hashlib
import json
import shutil
import subprocess
from dataclasses import asdict, dataclass
from pathlib import Path

from filelock import FileLock, Timeout

from .augment import apply_plan, make_plan
from .corpus import Corpus, load_manifest, merge_corpora, save_manifest
from .filters import (
    FilterReport,
    filter_embedding_similarity,
    filter_ratio_kde,
    filter_ratio_to_gold,
    preprocess_filter,
)
from .metrics import EvalReport, evaluate
from .simulate import NoiseModel, loop_injected, mock_label

__all__ = [
    "TrainerContract",
    "RoundConfig",
    "RoundRecord",
    "NoiseModel",
    "LoopCorpora",
    "TrainerError",
    "mock_label",
    "loop_injected",
    "run_base",
    "run_round",
    "run_loop",
    "load_loop_config",
    "LoopSpec",
]

UPDATE_MODES = ("finetune", "from_scratch")
LABEL_SCOPES = ("unsupervised_only", "all")
LOOP_FILTERS = ("none", "ratio_kde", "ratio_to_gold", "embedding_similarity")
STOP_METRICS = ("bleu", "wer")

_TRAIN_PLACEHOLDERS = ("{train_manifest}", "{init_checkpoint}", "{out_checkpoint}")
_LABEL_PLACEHOLDERS = ("{checkpoint}", "{in_manifest}", "{out_manifest}")


class TrainerError(RuntimeError):
    """External trainer/labeler process failed."""

    def __init__(self, message: str, command: str | None = None,
                 returncode: int | None = None):
        super().__init__(message)
        self.command = command
        self.returncode = returncode


@dataclass(frozen=True)
class TrainerContract:
    """Shell command templates for the external model processes."""

    train_command: str
    label_command: str
    embed_command: str | None = None
    workdir: str = "."

    def validate(self) -> None:
        for placeholder in _TRAIN_PLACEHOLDERS:
            if placeholder not in self.train_command:
                raise ValueError(f"train_command is missing placeholder {placeholder}")
        for name, command in (("label_command", self.label_command),
                              ("embed_command", self.embed_command)):
            if command is None:
                continue
            for placeholder in _LABEL_PLACEHOLDERS:
                if placeholder not in command:
                    raise ValueError(f"{name} is missing placeholder {placeholder}")


@dataclass(frozen=True)
class RoundConfig:
    """One experiment's pseudo-labeling settings."""

    update_mode: str = "finetune"
    label_scope: str = "unsupervised_only"
    filter_method: str = "none"
    keep_fraction: float = 0.9
    ratio_low: float = 0.9
    ratio_high: float = 1.1
    augment_k: int = 0
    unsup_weight: float = 1.0
    max_rounds: int = 1
    patience: int = 0  # 0 disables early stopping
    stop_metric: str = "bleu"
    seed: int = 0

    def validate(self) -> None:
        if self.update_mode not in UPDATE_MODES:
            raise ValueError(f"update_mode must be one of {UPDATE_MODES}")
        if self.label_scope not in LABEL_SCOPES:
            raise ValueError(f"label_scope must be one of {LABEL_SCOPES}")
        if self.filter_method not in LOOP_FILTERS:
            raise ValueError(f"filter_method must be one of {LOOP_FILTERS}")
        if not 0.0 < self.keep_fraction <= 1.0:
            raise ValueError(f"keep_fraction must be in (0, 1], got {self.keep_fraction}")
        if self.augment_k < 0:
            raise ValueError(f"augment_k must be >= 0, got {self.augment_k}")
        if self.unsup_weight <= 0:
            raise ValueError(f"unsup_weight must be positive, got {self.unsup_weight}")
        if self.max_rounds < 1:
            raise ValueError(f"max_rounds must be >= 1, got {self.max_rounds}")
        if self.patience < 0:
            raise ValueError(f"patience must be >= 0, got {self.patience}")
        if self.stop_metric not in STOP_METRICS:
            raise ValueError(f"stop_metric must be one of {STOP_METRICS}")

    def digest(self) -> str:
        payload = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass
class RoundRecord:
    """Bookkeeping for one round: set sizes, evaluation, checkpoint handle."""

    round: int
    n_supervised: int
    n_pseudo_kept: int
    n_pseudo_dropped: int
    n_augmented: int
    eval_supervised: tuple[EvalReport, EvalReport]
    eval_unsupervised: tuple[EvalReport, EvalReport] | None
    checkpoint: str  # relative to the experiment directory
    config_hash: str

    def to_dict(self) -> dict:
        def pair(reports):
            if reports is None:
                return None
            return {"transcripts": reports[0].to_record(),
                    "translations": reports[1].to_record()}

        return {
            "round": self.round,
            "n_supervised": self.n_supervised,
            "n_pseudo_kept": self.n_pseudo_kept,
            "n_pseudo_dropped": self.n_pseudo_dropped,
            "n_augmented": self.n_augmented,
            "eval_supervised": pair(self.eval_supervised),
            "eval_unsupervised": pair(self.eval_unsupervised),
            "checkpoint": self.checkpoint,
            "config_hash": self.config_hash,
        }

    @classmethod
    def from_dict(cls, record: dict) -> "RoundRecord":
        def pair(obj):
            if obj is None:
                return None
            return (EvalReport.from_record(obj["transcripts"]),
                    EvalReport.from_record(obj["translations"]))

        return cls(
            round=int(record["round"]),
            n_supervised=int(record["n_supervised"]),
            n_pseudo_kept=int(record["n_pseudo_kept"]),
            n_pseudo_dropped=int(record["n_pseudo_dropped"]),
            n_augmented=int(record["n_augmented"]),
            eval_supervised=pair(record["eval_supervised"]),
            eval_unsupervised=pair(record["eval_unsupervised"]),
            checkpoint=record["checkpoint"],
            config_hash=record["config_hash"],
        )


@dataclass
class LoopCorpora:
    """Input corpora for one experiment."""

    sup_train: Corpus
    sup_eval: Corpus
    unsup: Corpus
    unsup_eval: Corpus | None = None

    def validate(self) -> None:
        if self.sup_train.role != "supervised":
            raise ValueError("sup_train must have role 'supervised'")
        pair = (self.sup_train.source_lang, self.sup_train.target_lang)
        for name in ("sup_eval", "unsup", "unsup_eval"):
            corpus = getattr(self, name)
            if corpus is None:
                continue
            if (corpus.source_lang, corpus.target_lang) != pair:
                raise ValueError(f"{name} language pair differs from sup_train")
        if len(self.sup_train) == 0 or len(self.sup_eval) == 0 or len(self.unsup) == 0:
            raise ValueError("sup_train, sup_eval, and unsup must be non-empty")


# ---------------------------------------------------------------------------
# experiment directory plumbing


def _write_json(path: Path, obj) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(obj, handle, ensure_ascii=False, indent=2, sort_keys=True)
        handle.write("\n")
    tmp.replace(path)


def _read_json(path: Path):
    with open(path, encoding="utf-8") as handle:
        return json.load(handle)


@dataclass
class _State:
    last_round: int
    checkpoint: str
    best_metric: float
    rounds_since_improvement: int

    @classmethod
    def load(cls, exp_dir: Path) -> "_State":
        record = _read_json(exp_dir / "state.json")
        return cls(
            last_round=int(record["last_round"]),
            checkpoint=record["checkpoint"],
            best_metric=float(record["best_metric"]),
            rounds_since_improvement=int(record["rounds_since_improvement"]),
        )

    def save(self, exp_dir: Path) -> None:
        _write_json(exp_dir / "state.json", {
            "last_round": self.last_round,
            "checkpoint": self.checkpoint,
            "best_metric": self.best_metric,
            "rounds_since_improvement": self.rounds_since_improvement,
        })


def _run_command(template: str, mapping: dict, workdir: str, log_path: Path) -> None:
    try:
        command = template.format(**mapping)
    except KeyError as exc:
        raise ValueError(f"command template references unknown placeholder {exc}") from exc
    proc = subprocess.run(
        command, shell=True, cwd=workdir,
        stdout=subprocess.PIPE, stderr=subprocess.STDOUT, text=True,
    )
    log_path.parent.mkdir(parents=True, exist_ok=True)
    log_path.write_text(proc.stdout or "", encoding="utf-8")
    if proc.returncode != 0:
        tail = "\n".join((proc.stdout or "").splitlines()[-10:])
        raise TrainerError(
            f"command exited with status {proc.returncode}: {command}\n{tail}",
            command=command,
            returncode=proc.returncode,
        )


def _train(contract: TrainerContract, train_manifest: Path, init_checkpoint: str,
           out_checkpoint: Path, log_path: Path, round_index: int) -> None:
    _run_command(contract.train_command, {
        "train_manifest": str(train_manifest.resolve()),
        "init_checkpoint": init_checkpoint,
        "out_checkpoint": str(out_checkpoint.resolve()),
        "round": round_index,
        "workdir": contract.workdir,
    }, contract.workdir, log_path)
    if not out_checkpoint.exists():
        raise TrainerError(f"trainer did not write a checkpoint at {out_checkpoint}")


def _label(contract: TrainerContract, command: str, checkpoint: Path, in_manifest: Path,
           out_manifest: Path, log_path: Path, round_index: int) -> Corpus:
    _run_command(command, {
        "checkpoint": str(checkpoint.resolve()),
        "in_manifest": str(in_manifest.resolve()),
        "out_manifest": str(out_manifest.resolve()),
        "round": round_index,
        "workdir": contract.workdir,
    }, contract.workdir, log_path)
    if not out_manifest.exists():
        raise TrainerError(f"labeler did not write a manifest at {out_manifest}")
    return load_manifest(out_manifest)


def _evaluate_checkpoint(contract: TrainerContract, checkpoint: Path, in_manifest: Path,
                         out_manifest: Path, log_path: Path,
                         round_index: int) -> tuple[EvalReport, EvalReport]:
    labeled = _label(contract, contract.label_command, checkpoint, in_manifest,
                     out_manifest, log_path, round_index)
    return evaluate(labeled)


def _prepare_experiment(exp_dir: Path, corpora: LoopCorpora, cfg: RoundConfig) -> None:
    """Write preprocessed inputs, the augmented set, and the config snapshot."""
    corpora.validate()
    config_path = exp_dir / "config.json"
    if config_path.exists():
        existing = _read_json(config_path)
        if existing.get("config_hash") != cfg.digest():
            raise ValueError(
                f"{exp_dir} already holds an experiment with a different configuration"
            )
        return
    inputs = exp_dir / "inputs"
    inputs.mkdir(parents=True, exist_ok=True)
    sup_train, _ = preprocess_filter(corpora.sup_train)
    if len(sup_train) == 0:
        raise ValueError("supervised training corpus is empty after preprocessing")
    save_manifest(sup_train, inputs / "sup_train.manifest")
    save_manifest(corpora.sup_eval, inputs / "sup_eval.manifest")
    save_manifest(corpora.unsup, inputs / "unsup.manifest")
    if corpora.unsup_eval is not None:
        save_manifest(corpora.unsup_eval, inputs / "unsup_eval.manifest")
    if cfg.augment_k > 0:
        plan = make_plan(sup_train, cfg.augment_k, cfg.seed)
        plan.save(exp_dir / "augment_plan.json")
        save_manifest(apply_plan(sup_train, plan), exp_dir / "augmented.manifest")
    _write_json(config_path, {"config": asdict(cfg), "config_hash": cfg.digest()})


def _load_inputs(exp_dir: Path) -> dict[str, Corpus | None]:
    inputs = exp_dir / "inputs"
    unsup_eval_path = inputs / "unsup_eval.manifest"
    augmented_path = exp_dir / "augmented.manifest"
    return {
        "sup_train": load_manifest(inputs / "sup_train.manifest"),
        "sup_eval": load_manifest(inputs / "sup_eval.manifest"),
        "unsup": load_manifest(inputs / "unsup.manifest"),
        "unsup_eval": load_manifest(unsup_eval_path) if unsup_eval_path.exists() else None,
        "augmented": load_manifest(augmented_path) if augmented_path.exists() else None,
    }


def _stop_value(record: RoundRecord, stop_metric: str) -> float:
    transcripts, translations = record.eval_supervised
    return translations.bleu if stop_metric == "bleu" else transcripts.wer


def _improved(value: float, best: float, stop_metric: str) -> bool:
    return value > best if stop_metric == "bleu" else value < best


def _promote_round(exp_dir: Path, tmp_dir: Path, round_index: int) -> Path:
    final = exp_dir / "rounds" / str(round_index)
    final.parent.mkdir(parents=True, exist_ok=True)
    if final.exists():
        raise RuntimeError(f"round directory already exists: {final}")
    tmp_dir.replace(final)
    return final


def _build_round(contract: TrainerContract, cfg: RoundConfig, exp_dir: Path,
                 round_index: int) -> RoundRecord:
    """Run one round in a scratch directory and promote it atomically."""
    data = _load_inputs(exp_dir)
    sup_train: Corpus = data["sup_train"]
    augmented: Corpus | None = data["augmented"]
    tmp_dir = exp_dir / "rounds" / f".tmp.{round_index}"
    if tmp_dir.exists():
        shutil.rmtree(tmp_dir)
    tmp_dir.mkdir(parents=True)
    logs = tmp_dir / "logs"
    try:
        n_pseudo_kept = 0
        n_pseudo_dropped = 0
        if round_index == 0:
            train_corpus = sup_train
            if augmented is not None:
                train_corpus = merge_corpora(train_corpus, augmented)
            init_checkpoint = "-"
            n_supervised = len(sup_train)
        else:
            state = _State.load(exp_dir)
            if state.last_round != round_index - 1:
                raise RuntimeError(
                    f"cannot run round {round_index}: last completed round is "
                    f"{state.last_round}"
                )
            prev_checkpoint = exp_dir / state.checkpoint

            pseudo = _label(contract, contract.label_command, prev_checkpoint,
                            exp_dir / "inputs" / "unsup.manifest",
                            tmp_dir / "pseudo.manifest", logs / "label.log", round_index)
            if len(pseudo) == 0:
                raise TrainerError("labeler produced an empty pseudo manifest")

            if cfg.label_scope == "all":
                sup_part = _label(contract, contract.label_command, prev_checkpoint,
                                  exp_dir / "inputs" / "sup_train.manifest",
                                  tmp_dir / "pseudo_sup.manifest", logs / "label_sup.log",
                                  round_index)
            else:
                sup_part = sup_train

            kept, report = _apply_loop_filter(contract, cfg, pseudo, tmp_dir, logs,
                                              round_index, prev_checkpoint)
            save_manifest(kept, tmp_dir / "kept.manifest")
            if report is not None:
                report.save(tmp_dir / "filter_report.json")
            n_pseudo_kept = len(kept)
            n_pseudo_dropped = len(pseudo) - len(kept)
            n_supervised = len(sup_part)

            train_corpus = merge_corpora(sup_part, kept, weight_b=cfg.unsup_weight)
            if augmented is not None:
                train_corpus = merge_corpora(train_corpus, augmented)
            init_checkpoint = (str(prev_checkpoint.resolve())
                               if cfg.update_mode == "finetune" else "-")

        train_manifest = tmp_dir / "train.manifest"
        save_manifest(train_corpus, train_manifest)
        checkpoint = tmp_dir / "checkpoint.ckpt"
        _train(contract, train_manifest, init_checkpoint, checkpoint,
               logs / "train.log", round_index)

        eval_supervised = _evaluate_checkpoint(
            contract, checkpoint, exp_dir / "inputs" / "sup_eval.manifest",
            tmp_dir / "eval_sup.manifest", logs / "eval_sup.log", round_index)
        eval_unsupervised = None
        if data["unsup_eval"] is not None:
            eval_unsupervised = _evaluate_checkpoint(
                contract, checkpoint, exp_dir / "inputs" / "unsup_eval.manifest",
                tmp_dir / "eval_unsup.manifest", logs / "eval_unsup.log", round_index)

        record = RoundRecord(
            round=round_index,
            n_supervised=n_supervised,
            n_pseudo_kept=n_pseudo_kept,
            n_pseudo_dropped=n_pseudo_dropped,
            n_augmented=0 if augmented is None else len(augmented),
            eval_supervised=eval_supervised,
            eval_unsupervised=eval_unsupervised,
            checkpoint=f"rounds/{round_index}/checkpoint.ckpt",
            config_hash=cfg.digest(),
        )
        _write_json(tmp_dir / "record.json", record.to_dict())
    except BaseException:
        shutil.rmtree(tmp_dir, ignore_errors=True)
        raise

    _promote_round(exp_dir, tmp_dir, round_index)

    value = _stop_value(record, cfg.stop_metric)
    if round_index == 0:
        state = _State(last_round=0, checkpoint=record.checkpoint,
                       best_metric=value, rounds_since_improvement=0)
    else:
        state = _State.load(exp_dir)
        if _improved(value, state.best_metric, cfg.stop_metric):
            state.best_metric = value
            state.rounds_since_improvement = 0
        else:
            state.rounds_since_improvement += 1
        state.last_round = round_index
        state.checkpoint = record.checkpoint
    state.save(exp_dir)
    return record


def _apply_loop_filter(contract: TrainerContract, cfg: RoundConfig, pseudo: Corpus,
                       tmp_dir: Path, logs: Path, round_index: int,
                       checkpoint: Path) -> tuple[Corpus, FilterReport | None]:
    if cfg.filter_method == "none":
        return pseudo, None
    if cfg.filter_method == "ratio_kde":
        return filter_ratio_kde(pseudo, cfg.keep_fraction)
    if cfg.filter_method == "ratio_to_gold":
        return filter_ratio_to_gold(pseudo, cfg.ratio_low, cfg.ratio_high)
    if cfg.filter_method == "embedding_similarity":
        needs_embedding = any(
            s.embedding_transcript is None or s.embedding_translation is None
            for s in pseudo
        )
        if needs_embedding:
            if contract.embed_command is None:
                raise ValueError(
                    "embedding_similarity filtering needs embeddings; provide an "
                    "embed_command or pre-embedded pseudo labels"
                )
            pseudo = _label(contract, contract.embed_command, checkpoint,
                            tmp_dir / "pseudo.manifest", tmp_dir / "pseudo_embedded.manifest",
                            logs / "embed.log", round_index)
        return filter_embedding_similarity(pseudo, cfg.keep_fraction)
    raise ValueError(f"unknown filter_method {cfg.filter_method!r}")


def run_base(contract: TrainerContract, corpora: LoopCorpora, cfg: RoundConfig,
             exp_dir: str | Path) -> RoundRecord:
    """Train the round-0 base model on the (preprocessed) supervised set.

    When ``augment_k`` is set, the concatenation-augmented set joins the
    round-0 training manifest so the base model sees long sequences before
    the first labeling pass.
    """
    contract.validate()
    cfg.validate()
    exp_dir = Path(exp_dir)
    exp_dir.mkdir(parents=True, exist_ok=True)
    _prepare_experiment(exp_dir, corpora, cfg)
    return _build_round(contract, cfg, exp_dir, 0)


def run_round(contract: TrainerContract, cfg: RoundConfig,
              exp_dir: str | Path) -> RoundRecord:
    """Run the next pseudo-labeling round against a prepared experiment.

    Labels the unsupervised set with the current checkpoint, filters, builds
    the combined training manifest, updates the model, and evaluates. Any
    stage failure leaves the experiment exactly as it was.
    """
    contract.validate()
    cfg.validate()
    exp_dir = Path(exp_dir)
    if not (exp_dir / "state.json").exists():
        raise RuntimeError("no prior round found; run the base round first")
    state = _State.load(exp_dir)
    return _build_round(contract, cfg, exp_dir, state.last_round + 1)


def run_loop(contract: TrainerContract, corpora: LoopCorpora, cfg: RoundConfig,
             exp_dir: str | Path) -> list[RoundRecord]:
    """Run the full loop: base model, then rounds until max_rounds or plateau.

    Stops early when the supervised-eval stop metric has not improved for
    ``patience`` consecutive rounds (``patience=0`` disables early stopping).
    Returns the records of the pseudo-labeling rounds (round 0 is on disk
    under ``rounds/0``).
    """
    contract.validate()
    cfg.validate()
    exp_dir = Path(exp_dir)
    exp_dir.mkdir(parents=True, exist_ok=True)
    lock = FileLock(str(exp_dir / ".lock"))
    try:
        lock.acquire(timeout=0)
    except Timeout:
        raise RuntimeError(f"experiment directory is locked by another run: {exp_dir}")
    try:
        _prepare_experiment(exp_dir, corpora, cfg)
        records: list[RoundRecord] = []
        if not (exp_dir / "rounds" / "0" / "record.json").exists():
            run_base(contract, corpora, cfg, exp_dir)
        else:
            # resuming: collect already-completed labeling rounds
            state = _State.load(exp_dir)
            for k in range(1, state.last_round + 1):
                records.append(RoundRecord.from_dict(
                    _read_json(exp_dir / "rounds" / str(k) / "record.json")))
        state = _State.load(exp_dir)
        while state.last_round < cfg.max_rounds:
            if cfg.patience > 0 and state.rounds_since_improvement >= cfg.patience:
                break
            records.append(run_round(contract, cfg, exp_dir))
            state = _State.load(exp_dir)
        return records
    finally:
        lock.release()


# ---------------------------------------------------------------------------
# loop configuration files (flat JSON key-value documents)


_LOOP_PATH_KEYS = ("sup_train_manifest", "sup_eval_manifest", "unsup_manifest",
                   "unsup_eval_manifest", "exp_dir")
_LOOP_COMMAND_KEYS = ("train_command", "label_command", "embed_command", "workdir")
_REQUIRED_LOOP_KEYS = ("sup_train_manifest", "sup_eval_manifest", "unsup_manifest",
                       "exp_dir", "train_command", "label_command")


@dataclass
class LoopSpec:
    """Parsed loop configuration: contract, round config, and corpus paths."""

    contract: TrainerContract
    config: RoundConfig
    sup_train_manifest: str
    sup_eval_manifest: str
    unsup_manifest: str
    exp_dir: str
    unsup_eval_manifest: str | None = None

    def load_corpora(self) -> LoopCorpora:
        return LoopCorpora(
            sup_train=load_manifest(self.sup_train_manifest),
            sup_eval=load_manifest(self.sup_eval_manifest),
            unsup=load_manifest(self.unsup_manifest),
            unsup_eval=(load_manifest(self.unsup_eval_manifest)
                        if self.unsup_eval_manifest else None),
        )


def load_loop_config(path: str | Path) -> LoopSpec:
    """Parse and validate a flat JSON loop configuration file."""
    record = _read_json(Path(path))
    if not isinstance(record, dict):
        raise ValueError(f"{path}: loop config must be a JSON object")
    known = set(_LOOP_PATH_KEYS) | set(_LOOP_COMMAND_KEYS) | {
        f.name for f in RoundConfig.__dataclass_fields__.values()
    }
    unknown = sorted(set(record) - known)
    if unknown:
        raise ValueError(f"{path}: unknown config keys: {', '.join(unknown)}")
    missing = [k for k in _REQUIRED_LOOP_KEYS if k not in record]
    if missing:
        raise ValueError(f"{path}: missing config keys: {', '.join(missing)}")
    cfg_kwargs = {
        name: record[name] for name in RoundConfig.__dataclass_fields__ if name in record
    }
    cfg = RoundConfig(**cfg_kwargs)
    cfg.validate()
    contract = TrainerContract(
        train_command=record["train_command"],
        label_command=record["label_command"],
        embed_command=record.get("embed_command"),
        workdir=record.get("workdir", "."),
    )
    contract.validate()
    return LoopSpec(
        contract=contract,
        config=cfg,
        sup_train_manifest=record["sup_train_manifest"],
        sup_eval_manifest=record["sup_eval_manifest"],
        unsup_manifest=record["unsup_manifest"],
        exp_dir=record["exp_dir"],
        unsup_eval_manifest=record.get("unsup_eval_manifest"),
    )
