"""End-to-end CLI behavior: subcommands, exit codes, deterministic outputs."""

import json
import wave

import pytest

from sttkit.cli import main
from sttkit.corpus import load_manifest, save_manifest

from conftest import build_gold_corpus, build_pseudo_corpus
from test_augment import write_wav


@pytest.fixture
def pseudo_manifest(tmp_path):
    corpus = build_pseudo_corpus(12, seed=31)
    path = tmp_path / "pseudo.jsonl"
    save_manifest(corpus, path)
    return path


@pytest.fixture
def gold_manifest(tmp_path):
    corpus = build_gold_corpus(15, seed=32)
    path = tmp_path / "gold.jsonl"
    save_manifest(corpus, path)
    return path


class TestIngest:
    def test_filters_and_reports(self, tmp_path, capsys):
        corpus = build_gold_corpus(10, seed=33)
        bad = corpus.with_samples(
            corpus.samples
            + [corpus.samples[-1].__class__(
                id="short", duration_s=0.3, gold_transcript="x", gold_translation="y")]
        )
        manifest = tmp_path / "in.jsonl"
        save_manifest(bad, manifest)
        out = tmp_path / "outdir" / "clean.jsonl"
        report = tmp_path / "outdir" / "report.json"
        code = main(["ingest", "--manifest", str(manifest), "--out", str(out),
                     "--report", str(report)])
        assert code == 0
        assert "kept=10 dropped=1" in capsys.readouterr().out
        assert len(load_manifest(out)) == 10
        assert json.loads(report.read_text())["method"] == "preprocess"
        assert (out.parent / "run_config.json").exists()

    def test_invalid_manifest_is_validation_error(self, tmp_path):
        manifest = tmp_path / "in.jsonl"
        manifest.write_text('{"id": "a"}\n', encoding="utf-8")
        code = main(["ingest", "--manifest", str(manifest),
                     "--out", str(tmp_path / "out.jsonl")])
        assert code == 1

    def test_missing_file_is_io_error(self, tmp_path):
        code = main(["ingest", "--manifest", str(tmp_path / "nope.jsonl"),
                     "--out", str(tmp_path / "out.jsonl")])
        assert code == 2


class TestEvaluate:
    def test_prints_wer_bleu(self, pseudo_manifest, capsys):
        code = main(["evaluate", "--manifest", str(pseudo_manifest)])
        assert code == 0
        out = capsys.readouterr().out
        assert out.startswith("WER=0.0000 BLEU=")
        assert "BLEU=100.0000" in out

    def test_report_written(self, pseudo_manifest, tmp_path, capsys):
        report = tmp_path / "reports" / "eval.json"
        code = main(["evaluate", "--manifest", str(pseudo_manifest),
                     "--report", str(report)])
        assert code == 0
        records = [json.loads(line) for line in report.read_text().splitlines()]
        assert [r["side"] for r in records] == ["transcripts", "translations"]
        assert records[0]["wer"] == 0.0
        assert records[0]["signature"].startswith("case.lc+numrefs.1")

    def test_gold_only_manifest_rejected(self, gold_manifest):
        assert main(["evaluate", "--manifest", str(gold_manifest)]) == 1


class TestFilter:
    def test_bad_keep_fraction_is_usage_error(self, pseudo_manifest, tmp_path):
        code = main(["filter", "--manifest", str(pseudo_manifest),
                     "--method", "ratio-kde", "--keep", "1.5",
                     "--out", str(tmp_path / "f.jsonl")])
        assert code == 1

    def test_unknown_method_rejected(self, pseudo_manifest, tmp_path, capsys):
        code = main(["filter", "--manifest", str(pseudo_manifest),
                     "--method", "confidence", "--out", str(tmp_path / "f.jsonl")])
        assert code == 1
        assert "usage" in capsys.readouterr().err.lower()

    def test_ratio_kde_writes_outputs(self, pseudo_manifest, tmp_path, capsys):
        out = tmp_path / "filtered" / "kept.jsonl"
        code = main(["filter", "--manifest", str(pseudo_manifest),
                     "--method", "ratio-kde", "--keep", "0.9", "--out", str(out)])
        assert code == 0
        assert "kept=11 dropped=1" in capsys.readouterr().out  # ceil(0.9*12)=11
        assert len(load_manifest(out)) == 11
        report = json.loads((out.parent / "kept.jsonl.report.json").read_text())
        assert report["method"] == "ratio_kde"

    def test_ratio_gold(self, pseudo_manifest, tmp_path):
        out = tmp_path / "kept.jsonl"
        code = main(["filter", "--manifest", str(pseudo_manifest),
                     "--method", "ratio-gold", "--low", "0.9", "--high", "1.1",
                     "--out", str(out)])
        assert code == 0
        assert len(load_manifest(out)) == 12  # pseudo == gold, all ratios 1.0


class TestAugment:
    def test_manifest_only(self, tmp_path, capsys):
        corpus = build_gold_corpus(8, seed=34)
        manifest = tmp_path / "sup.jsonl"
        save_manifest(corpus, manifest)
        out = tmp_path / "aug" / "aug.jsonl"
        code = main(["augment", "--manifest", str(manifest), "--k", "5",
                     "--seed", "7", "--out", str(out)])
        assert code == 0
        augmented = load_manifest(out)
        assert len(augmented) == 5
        assert all(s.provenance == "augmented" for s in augmented)
        plan = json.loads((out.parent / "aug.jsonl.plan.json").read_text())
        assert len(plan["pairs"]) == 5 and plan["seed"] == 7

    def test_merge_flag(self, tmp_path):
        corpus = build_gold_corpus(8, seed=35)
        manifest = tmp_path / "sup.jsonl"
        save_manifest(corpus, manifest)
        out = tmp_path / "merged.jsonl"
        code = main(["augment", "--manifest", str(manifest), "--k", "4",
                     "--seed", "1", "--merge", "--out", str(out)])
        assert code == 0
        assert len(load_manifest(out)) == 12

    def test_with_audio(self, tmp_path):
        samples = build_gold_corpus(3, seed=36).samples
        for i, sample in enumerate(samples):
            wav = tmp_path / f"{i}.wav"
            write_wav(wav, 8000 * (i + 1))
            sample.audio_ref = str(wav)
            sample.duration_s = 0.5 * (i + 1)
        corpus = build_gold_corpus(3, seed=36).with_samples(samples)
        manifest = tmp_path / "sup.jsonl"
        save_manifest(corpus, manifest)
        out = tmp_path / "aug" / "aug.jsonl"
        code = main(["augment", "--manifest", str(manifest), "--k", "4",
                     "--seed", "2", "--with-audio", "--out", str(out)])
        assert code == 0
        augmented = load_manifest(out)
        assert len(augmented) == 4
        for sample in augmented:
            with wave.open(sample.audio_ref, "rb") as reader:
                duration = reader.getnframes() / reader.getframerate()
            assert duration == pytest.approx(sample.duration_s, abs=1e-4)

    def test_determinism(self, tmp_path):
        corpus = build_gold_corpus(6, seed=37)
        manifest = tmp_path / "sup.jsonl"
        save_manifest(corpus, manifest)
        out_a, out_b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        for out in (out_a, out_b):
            assert main(["augment", "--manifest", str(manifest), "--k", "9",
                         "--seed", "5", "--out", str(out)]) == 0
        assert out_a.read_bytes() == out_b.read_bytes()


class TestDiagnose:
    def test_writes_three_exports(self, tmp_path, capsys):
        a = build_gold_corpus(20, seed=38, dur_range=(1.0, 4.0))
        b = build_pseudo_corpus(20, seed=39, dur_range=(4.0, 9.0))
        path_a, path_b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        save_manifest(a, path_a)
        save_manifest(b, path_b)
        out_dir = tmp_path / "diag"
        code = main(["diagnose", "--a", str(path_a), "--b", str(path_b),
                     "--out-dir", str(out_dir)])
        assert code == 0
        vocab = json.loads((out_dir / "vocab.json").read_text())
        assert vocab["types_a"] > 0 and 0 <= vocab["jaccard"] <= 1
        profile_lines = (out_dir / "length_profile.tsv").read_text().splitlines()
        assert len(profile_lines) == 256
        assert len(profile_lines[0].split("\t")) == 3
        scatter_lines = (out_dir / "ratio_scatter.tsv").read_text().splitlines()
        assert len(scatter_lines) == 20
        assert (out_dir / "run_config.json").exists()

    def test_gold_corpora_scatter_falls_back_to_gold(self, tmp_path):
        a = build_gold_corpus(5, seed=40)
        path_a = tmp_path / "a.jsonl"
        save_manifest(a, path_a)
        out_dir = tmp_path / "d"
        code = main(["diagnose", "--a", str(path_a), "--b", str(path_a),
                     "--out-dir", str(out_dir)])
        assert code == 0
        assert len((out_dir / "ratio_scatter.tsv").read_text().splitlines()) == 5

    def test_scatter_without_any_transcript_fails_before_writing(self, tmp_path):
        from sttkit.corpus import Corpus, Sample
        bare = Corpus(name="bare", role="mixed", source_lang="en", target_lang="de",
                      samples=[Sample(id="a", duration_s=1.0, gold_translation="x"),
                               Sample(id="b", duration_s=2.0, gold_translation="y")])
        path = tmp_path / "bare.jsonl"
        save_manifest(bare, path)
        text = build_gold_corpus(4, seed=41)
        path_t = tmp_path / "t.jsonl"
        save_manifest(text, path_t)
        out_dir = tmp_path / "d"
        code = main(["diagnose", "--a", str(path_t), "--b", str(path),
                     "--side", "translation", "--out-dir", str(out_dir)])
        assert code == 1
        assert not out_dir.exists()  # nothing half-written


class TestKdeExport:
    def test_tsv_grid(self, gold_manifest, tmp_path):
        out = tmp_path / "kde" / "density.tsv"
        code = main(["kde-export", "--manifest", str(gold_manifest),
                     "--field", "duration", "--grid", "64", "--out", str(out)])
        assert code == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 64
        xs = [float(line.split("\t")[0]) for line in lines]
        dens = [float(line.split("\t")[1]) for line in lines]
        assert xs == sorted(xs)
        assert all(d > 0 for d in dens)

    def test_bandwidth_override_and_determinism(self, gold_manifest, tmp_path):
        out_a, out_b = tmp_path / "a.tsv", tmp_path / "b.tsv"
        for out in (out_a, out_b):
            assert main(["kde-export", "--manifest", str(gold_manifest),
                         "--bandwidth", "0.7", "--out", str(out)]) == 0
        assert out_a.read_bytes() == out_b.read_bytes()


class TestSelftrainCli:
    def write_setup(self, tmp_path, train_command=None, max_rounds=1):
        from test_selftrain import CONTRACT, make_corpora
        corpora = make_corpora(n_sup=8, n_unsup=6)
        save_manifest(corpora.sup_train, tmp_path / "sup.jsonl")
        save_manifest(corpora.sup_eval, tmp_path / "sup_eval.jsonl")
        save_manifest(corpora.unsup, tmp_path / "unsup.jsonl")
        config = {
            "sup_train_manifest": str(tmp_path / "sup.jsonl"),
            "sup_eval_manifest": str(tmp_path / "sup_eval.jsonl"),
            "unsup_manifest": str(tmp_path / "unsup.jsonl"),
            "exp_dir": str(tmp_path / "exp"),
            "train_command": train_command or CONTRACT.train_command,
            "label_command": CONTRACT.label_command,
            "max_rounds": max_rounds,
        }
        path = tmp_path / "loop.json"
        path.write_text(json.dumps(config), encoding="utf-8")
        return path

    def test_run_success(self, tmp_path, capsys):
        config = self.write_setup(tmp_path)
        code = main(["selftrain", "run", "--config", str(config)])
        assert code == 0
        out = capsys.readouterr().out
        assert "round=1" in out and "WER=" in out and "BLEU=" in out

    def test_failing_trainer_exits_2_and_preserves_state(self, tmp_path):
        from test_selftrain import tree_digest
        good = self.write_setup(tmp_path, max_rounds=1)
        assert main(["selftrain", "run", "--config", str(good)]) == 0
        before = tree_digest(tmp_path / "exp", skip=(".lock",))

        failing = self.write_setup(
            tmp_path,
            train_command="false {train_manifest} {init_checkpoint} {out_checkpoint}",
            max_rounds=2,
        )
        code = main(["selftrain", "run", "--config", str(failing)])
        assert code == 1  # config hash differs from the finished experiment
        # same config but failing trainer in a fresh experiment directory
        config = json.loads(failing.read_text())
        config["exp_dir"] = str(tmp_path / "exp2")
        failing.write_text(json.dumps(config), encoding="utf-8")
        code = main(["selftrain", "run", "--config", str(failing)])
        assert code == 2
        assert not (tmp_path / "exp2" / "rounds" / "0").exists()
        # the original experiment is untouched throughout
        assert tree_digest(tmp_path / "exp", skip=(".lock",)) == before

    def test_bad_config_key(self, tmp_path):
        config = self.write_setup(tmp_path)
        payload = json.loads(config.read_text())
        payload["bogus"] = True
        config.write_text(json.dumps(payload), encoding="utf-8")
        assert main(["selftrain", "run", "--config", str(config)]) == 1


class TestGlobalBehavior:
    def test_version(self, capsys):
        assert main(["--version"]) == 0
        assert "sttkit 0.1.0" in capsys.readouterr().out

    def test_unknown_flag_rejected_with_usage(self, capsys):
        assert main(["evaluate", "--manifest", "x", "--bogus"]) == 1
        assert "usage" in capsys.readouterr().err.lower()

    def test_unknown_subcommand(self, capsys):
        assert main(["transmogrify"]) == 1

    def test_no_subcommand(self, capsys):
        assert main([]) == 1
