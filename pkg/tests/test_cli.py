import io
import json

import pytest

from dialogref import cli

SMALL = ["--sizes", "40", "10", "20"]


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """A small synthetic dataset plus one-epoch checkpoints trained through the CLI."""
    root = tmp_path_factory.mktemp("cli")
    assert cli.main(["gen-data", "--variant", "synthetic", "--out-dir", str(root), *SMALL]) == 0
    data = root / "synthetic"
    for kind in ("md", "mr"):
        assert cli.main(["train", "--model", kind, "--train", str(data / "train.jsonl"),
                         "--out", str(root / f"{kind}.ckpt"), "--epochs", "1"]) == 0
    assert cli.main(["gen-data", "--variant", "qr", "--out-dir", str(root), "--sizes", "60", "10", "20"]) == 0
    assert cli.main(["train", "--model", "qr", "--train", str(root / "qr" / "train.jsonl"),
                     "--out", str(root / "qr.ckpt"), "--epochs", "1", "--dim", "16", "--hidden", "16"]) == 0
    return root


FIG1 = {
    "turns": [
        {"speaker": "user", "utterance": "find pharmacies near me"},
        {"speaker": "agent", "utterance": "I found three pharmacies.", "presented_entity_ids": ["p1", "p2", "p3"]},
    ],
    "entities": [
        {"id": f"p{i}", "category": "business", "texts": [name], "source": "conversational",
         "location": {"list_index": i, "list_length": 3}}
        for i, name in ((1, "Walgreens"), (2, "CVS Pharmacy"), (3, "Rite Aid"))
    ],
    "current_utterance": "Call the second one",
}


class TestGenData:
    def test_deterministic(self, tmp_path, capsys):
        for d in ("a", "b"):
            assert run(capsys, "gen-data", "--variant", "screen", "--seed", "3",
                       "--out-dir", str(tmp_path / d), *SMALL)[0] == 0
        for split in ("train", "val", "test", "manifest"):
            ext = "json" if split == "manifest" else "jsonl"
            a = (tmp_path / "a" / "screen" / f"{split}.{ext}").read_bytes()
            assert a == (tmp_path / "b" / "screen" / f"{split}.{ext}").read_bytes()

    def test_manifest_on_stdout(self, tmp_path, capsys):
        code, out, _ = run(capsys, "gen-data", "--variant", "conversational", "--out-dir", str(tmp_path), *SMALL)
        assert code == 0 and json.loads(out)["sizes"] == {"train": 40, "val": 10, "test": 20}

    def test_unknown_variant(self, capsys):
        code, out, err = run(capsys, "gen-data", "--variant", "bogus")
        assert code == 1 and out == "" and "invalid choice" in err

    def test_sizes_need_one_variant(self, tmp_path, capsys):
        code, _, err = run(capsys, "gen-data", "--variant", "all", "--out-dir", str(tmp_path), *SMALL)
        assert code == 1 and "single variant" in err


class TestTrain:
    def test_missing_dataset(self, tmp_path, capsys):
        code, _, err = run(capsys, "train", "--model", "md", "--train", str(tmp_path / "x.jsonl"),
                           "--out", str(tmp_path / "m.ckpt"))
        assert code == 2 and "not found" in err

    def test_malformed_dataset(self, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"tokens": ["a"]}\nnot json\n')
        code, _, err = run(capsys, "train", "--model", "md", "--train", str(bad), "--out", str(tmp_path / "m.ckpt"))
        assert code == 2 and "2" in err

    def test_summary_and_log(self, workspace, tmp_path, capsys):
        code, out, _ = run(capsys, "train", "--model", "md", "--train", str(workspace / "synthetic" / "train.jsonl"),
                           "--out", str(tmp_path / "md.ckpt"), "--epochs", "1")
        summary = json.loads(out)
        assert code == 0 and summary["epochs_run"] == 1 and summary["parameters"] > 0
        assert json.loads((tmp_path / "md.ckpt.log.json").read_text())["vocab_hash"] == summary["vocab_hash"]

    def test_resume_matches_uninterrupted(self, workspace, tmp_path, capsys):
        train = str(workspace / "synthetic" / "train.jsonl")
        base = ["train", "--model", "mr", "--train", train]
        run(capsys, *base, "--out", str(tmp_path / "full.ckpt"), "--epochs", "3")
        full = json.loads((tmp_path / "full.ckpt.log.json").read_text())
        run(capsys, *base, "--out", str(tmp_path / "part.ckpt"), "--epochs", "1")
        code, out, _ = run(capsys, *base, "--out", str(tmp_path / "part.ckpt"), "--epochs", "3", "--resume")
        resumed = json.loads(out)
        assert code == 0 and resumed["epochs_run"] == 3
        assert resumed["losses"] == pytest.approx(full["losses"], rel=1e-5)
        assert (tmp_path / "part.ckpt").read_bytes() == (tmp_path / "full.ckpt").read_bytes()


class TestEval:
    def test_report(self, workspace, tmp_path, capsys):
        code, out, _ = run(capsys, "eval", "--data", str(workspace / "synthetic"), "--md", str(workspace / "md.ckpt"),
                           "--mr", str(workspace / "mr.ckpt"), "--out", str(tmp_path / "rep"))
        assert code == 0 and "MDMR" in out and "synthetic" in out
        assert (tmp_path / "rep" / "report.json").is_file() and (tmp_path / "rep" / "errors.jsonl").is_file()

    def test_json_output(self, workspace, capsys):
        code, out, _ = run(capsys, "eval", "--data", str(workspace / "qr"), "--qr", str(workspace / "qr.ckpt"), "--json")
        assert code == 0 and {r["model"] for r in json.loads(out)["rows"]} == {"QR"}

    def test_vocabulary_mismatch(self, workspace, capsys):
        # A detector trained on synthetic data does not match the screen dataset's vocabulary.
        cli.main(["gen-data", "--variant", "screen", "--out-dir", str(workspace), *SMALL])
        capsys.readouterr()
        code, _, err = run(capsys, "eval", "--data", str(workspace / "screen"), "--md", str(workspace / "md.ckpt"))
        assert code == 3 and "vocabulary" in err

    def test_missing_checkpoint(self, workspace, capsys):
        code, _, err = run(capsys, "eval", "--data", str(workspace / "synthetic"), "--md", "/nonexistent.ckpt")
        assert code == 3 and "not found" in err

    def test_missing_manifest(self, tmp_path, capsys):
        assert run(capsys, "eval", "--data", str(tmp_path), "--md", "x")[0] == 2

    def test_needs_models(self, workspace, capsys):
        assert run(capsys, "eval", "--data", str(workspace / "synthetic"))[0] == 1


class TestResolve:
    def test_entity_name_without_models(self, monkeypatch, capsys):
        # With no checkpoints only the entity-text matcher detects mentions.
        monkeypatch.setattr("sys.stdin", io.StringIO(json.dumps({**FIG1, "current_utterance": "call CVS Pharmacy"})))
        code, out, _ = run(capsys, "resolve")
        got = json.loads(out)
        assert code == 0 and got["rewrite_class"] == "None"
        (res,) = got["resolutions"]
        assert [m["entity_id"] for m in res["matches"]] == ["p2"] and res["resolver"] == "rule"

    @pytest.mark.slow
    def test_fig1_request(self, trained, tmp_path, monkeypatch, capsys):
        models = trained["conversational"]
        models.md.save(tmp_path / "md.ckpt")
        models.mr.save(tmp_path / "mr.ckpt")
        monkeypatch.setattr("sys.stdin", io.StringIO(json.dumps(FIG1)))
        code, out, _ = run(capsys, "resolve", "--md", str(tmp_path / "md.ckpt"), "--mr", str(tmp_path / "mr.ckpt"))
        (res,) = json.loads(out)["resolutions"]
        assert code == 0 and res["mention"]["text"] == "the second one"
        assert [m["entity_id"] for m in res["matches"]] == ["p2"] and res["resolver"] == "rule"

    def test_list_input_from_file(self, tmp_path, capsys):
        path = tmp_path / "req.json"
        path.write_text(json.dumps([FIG1, {"current_utterance": "what time is it"}]))
        code, out, _ = run(capsys, "resolve", "--input", str(path))
        outs = json.loads(out)
        assert code == 0 and len(outs) == 2
        assert outs[1] == {"original_utterance": "what time is it", "rewritten_utterance": "what time is it",
                           "rewrite_class": "None", "resolutions": []}

    def test_with_models(self, workspace, monkeypatch, capsys):
        monkeypatch.setattr("sys.stdin", io.StringIO(json.dumps(FIG1)))
        code, out, _ = run(capsys, "resolve", "--md", str(workspace / "md.ckpt"), "--mr", str(workspace / "mr.ckpt"),
                           "--qr", str(workspace / "qr.ckpt"))
        assert code == 0 and json.loads(out)["original_utterance"] == "Call the second one"

    @pytest.mark.parametrize("payload", ["{not json", '{"entities": [{"id": "x"}]}', "[1]"])
    def test_bad_input(self, payload, monkeypatch, capsys):
        monkeypatch.setattr("sys.stdin", io.StringIO(payload))
        code, out, err = run(capsys, "resolve")
        assert code == 2 and out == "" and err

    def test_missing_input_file(self, tmp_path, capsys):
        assert run(capsys, "resolve", "--input", str(tmp_path / "none.json"))[0] == 2

    def test_bad_threshold_is_usage_error(self, capsys):
        assert run(capsys, "resolve", "--md-threshold", "1.5")[0] == 1


class TestConfigFile:
    def test_defaults_from_file(self, tmp_path, monkeypatch, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"no_rule_md": True}))
        monkeypatch.setattr("sys.stdin", io.StringIO(json.dumps({**FIG1, "current_utterance": "call CVS Pharmacy"})))
        code, out, _ = run(capsys, "--config", str(cfg), "resolve")
        assert code == 0 and json.loads(out)["resolutions"] == []

    def test_unknown_key(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"no_such_flag": 1}))
        code, _, err = run(capsys, "--config", str(cfg), "resolve")
        assert code == 1 and "no_such_flag" in err

    def test_unreadable(self, tmp_path, capsys):
        assert run(capsys, "--config", str(tmp_path / "missing.json"), "resolve")[0] == 1


def test_repl_transcript(workspace, monkeypatch, capsys):
    script = "\n".join([
        ":help",
        ':present {"utterance": "here are two cafes", "entities": ['
        '{"category": "business", "texts": ["Blue Bottle"], "location": {"list_index": 1, "list_length": 2}},'
        '{"category": "business", "texts": ["Philz"], "location": {"list_index": 2, "list_length": 2}}]}',
        "call philz",
        ":alarm ringing",
        "stop the alarm",
        ":frobnicate",
        ":screen {broken",
        ":reset",
        "what time is it",
        ":quit",
        "never processed",
    ])
    monkeypatch.setattr("sys.stdin", io.StringIO(script))
    code, out, err = run(capsys, "repl", "--qr", str(workspace / "qr.ckpt"))
    assert code == 0
    lines = [json.loads(line) for line in out.splitlines() if line.startswith("{")]
    assert [o["original_utterance"] for o in lines] == ["call philz", "stop the alarm", "what time is it"]
    assert [m["entity_id"] for m in lines[0]["resolutions"][0]["matches"]] == ["e2"]
    assert [m["entity_id"] for m in lines[1]["resolutions"][0]["matches"]] == ["alarm3"]
    assert lines[2]["resolutions"] == []
    assert "unknown directive :frobnicate" in err and ":screen ignored" in err
    assert "directives:" in out


def test_no_command_is_usage_error(capsys):
    assert run(capsys)[0] == 1


@pytest.mark.slow
def test_repl_rewrites_the_third_turn(trained, tmp_path, monkeypatch, capsys):
    trained["qr"].qr.save(tmp_path / "qr.ckpt")
    script = "what is the capital of ohio\n:agent columbus is the capital of ohio.\nhow far away is it?\n"
    monkeypatch.setattr("sys.stdin", io.StringIO(script))
    code, out, _ = run(capsys, "repl", "--qr", str(tmp_path / "qr.ckpt"))
    first, third = [json.loads(line) for line in out.splitlines()]
    assert code == 0 and first["rewrite_class"] == "None"
    assert third["rewrite_class"] == "AER" and third["rewritten_utterance"].rstrip("?").split() == \
        ["how", "far", "away", "is", "columbus"]
