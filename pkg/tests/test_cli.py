"""Command-line front end."""

import json

import pytest

from slarm.cli import main
from slarm.topic_graph import TopicGraph, save_graph

SMALL = ["--embed_size", "8", "--hidden_size", "8", "--latent_size", "4", "--num_layers", "1"]


def test_synth_writes_requested_lines(tmp_path):
    out = tmp_path / "corpus.tsv"
    assert main(["synth", "--seed", "1", "--pairs", "50", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 50 and all(line.count("\t") == 1 for line in lines)
    again = tmp_path / "again.tsv"
    main(["synth", "--seed", "1", "--pairs", "50", "--out", str(again)])
    assert again.read_bytes() == out.read_bytes()
    assert main(["synth", "--pairs", "0", "--out", str(out)]) == 1


def test_unknown_flag_and_missing_command(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["synth", "--pairs", "3", "--out", "x", "--bogus"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 1


def test_train_with_missing_config_names_file(tmp_path, capsys):
    assert main(["train", "--run", str(tmp_path), "--config", "missing.json"]) == 1
    assert "missing.json" in capsys.readouterr().err


@pytest.fixture
def trained_run(tmp_path):
    corpus, run = tmp_path / "c.tsv", tmp_path / "run"
    assert main(["synth", "--pairs", "10", "--out", str(corpus)]) == 0
    assert main(["preprocess", "--corpus", str(corpus), "--run", str(run), *SMALL]) == 0
    return run


def test_train_and_generate(trained_run, capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"epochs": 1, **{"embed_size": 8, "hidden_size": 8, "latent_size": 4, "num_layers": 1}}))
    assert main(["train", "--run", str(trained_run), "--config", str(cfg), "--epochs", "2"]) == 0
    final = json.loads(capsys.readouterr().out)
    assert final["epoch"] == 1  # the flag wins over the file
    args = ["generate", "--run", str(trained_run), "--post", "have you had dinner", "--eps-zero"]
    assert main(args) == 0
    first = capsys.readouterr().out
    lines = first.splitlines()
    assert len(lines) == 2 and lines[0].startswith("direct:") and lines[1].startswith("supplementary:")
    assert main(args) == 0
    assert capsys.readouterr().out == first
    assert main(["generate", "--run", str(trained_run), "--post", "  "]) == 1


def test_generate_needs_checkpoint(trained_run, capsys):
    assert main(["generate", "--run", str(trained_run), "--post", "hello"]) == 1
    assert "train" in capsys.readouterr().err


def test_graph_query(tmp_path, capsys):
    g = TopicGraph()
    g.add("tea", "green", 3)
    g.add("tea", "cup", 1)
    save_graph(g, tmp_path / "graph.txt")
    assert main(["graph-query", "--run", str(tmp_path), "--word", "tea", "-k", "2"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines == ["green\t0.750000", "cup\t0.250000"]
    assert main(["graph-query", "--run", str(tmp_path), "--word", "tea", "-k", "1"]) == 0
    assert capsys.readouterr().out.splitlines() == ["green\t0.750000"]
    assert main(["graph-query", "--run", str(tmp_path), "--word", "absent"]) == 0
    assert capsys.readouterr().out == ""
    assert main(["graph-query", "--run", str(tmp_path / "none"), "--word", "tea"]) == 1


def test_evaluate_command(tmp_path, capsys):
    (tmp_path / "h").write_text("a b c\nd e\n")
    (tmp_path / "r").write_text("a b c\nd e\n")
    out = tmp_path / "report.json"
    assert main(["evaluate", "--hyp", str(tmp_path / "h"), "--ref", str(tmp_path / "r"), "--out", str(out)]) == 0
    printed = json.loads(capsys.readouterr().out)
    assert printed == json.loads(out.read_text())
    assert printed["bleu4"] == pytest.approx(1.0)
    (tmp_path / "r").write_text("a b c\n")
    assert main(["evaluate", "--hyp", str(tmp_path / "h"), "--ref", str(tmp_path / "r")]) == 1


def test_profile_flag_and_dashed_names(tmp_path):
    corpus, run = tmp_path / "c.tsv", tmp_path / "run"
    main(["synth", "--pairs", "5", "--out", str(corpus)])
    assert main(["preprocess", "--corpus", str(corpus), "--run", str(run), "--profile", "desk", "--hidden-size", "7"]) == 0
    stored = json.loads((run / "config.json").read_text())
    assert stored["hidden_size"] == 7 and stored["batch_size"] == 2
    with pytest.raises(SystemExit):
        main(["preprocess", "--corpus", str(corpus), "--run", str(run), "--profile", "huge"])
