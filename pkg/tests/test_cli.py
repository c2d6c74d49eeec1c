import hashlib
import json
import subprocess
import sys

import pytest

from termdialog.cli import main
from termdialog.metrics import TABLE_COLUMNS
from termdialog.synthetic import write_raw_dump

TABLE1_ROWS = [
    "# Dialogues", "# Words", "# Terms (words)",
    "Avg. # Words in Input Text", "Avg. # Utterances in Input Text", "Avg. # Terms in Input Text",
    "Avg. # Words in Output Text", "Avg. # Utterances in Output Text", "Avg. # Terms in Output Text",
]

TINY_MODEL = {"d_model": 16, "n_heads": 2, "n_enc_layers": 1, "n_dec_layers": 1, "ffn_dim": 32,
              "max_len": 64, "dropout": 0.0}


def write_config(path, **sections):
    import yaml

    path.write_text(yaml.safe_dump(sections), encoding="utf-8")
    return path


def sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_annotate_golden(tmp_path, data_dir, wordlist_path, capsys):
    out = tmp_path / "ann.jsonl"
    assert main(["annotate", str(data_dir / "pairs.jsonl"), str(out), "--lexicon", str(wordlist_path)]) == 0
    assert out.read_bytes() == (data_dir / "pairs.annotated.golden.jsonl").read_bytes()
    assert "records=60" in capsys.readouterr().out


def test_annotate_threads_identical(tmp_path, data_dir, wordlist_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    main(["annotate", str(data_dir / "pairs.jsonl"), str(a), "--lexicon", str(wordlist_path)])
    main(["annotate", str(data_dir / "pairs.jsonl"), str(b), "--lexicon", str(wordlist_path), "--threads", "3"])
    assert a.read_bytes() == b.read_bytes()


def test_annotate_empty_input(tmp_path, wordlist_path):
    src = tmp_path / "empty.jsonl"
    src.write_text("")
    out = tmp_path / "out.jsonl"
    assert main(["annotate", str(src), str(out), "--lexicon", str(wordlist_path)]) == 0
    assert out.read_text() == ""


def test_annotate_rejects_marker(tmp_path, wordlist_path, capsys):
    src = tmp_path / "bad.jsonl"
    src.write_text(json.dumps({"id": "1", "src_text": "there is [TERM] fever", "tgt_text": "ok"}) + "\n")
    assert main(["annotate", str(src), str(tmp_path / "o.jsonl"), "--lexicon", str(wordlist_path)]) == 1
    assert "[TERM]" in capsys.readouterr().err


def test_annotate_missing_lexicon(tmp_path, data_dir):
    assert main(["annotate", str(data_dir / "pairs.jsonl"), str(tmp_path / "o.jsonl")]) == 1


def test_bad_usage_exit_2():
    proc = subprocess.run([sys.executable, "-m", "termdialog.cli", "frobnicate"], capture_output=True)
    assert proc.returncode == 2


@pytest.fixture(scope="module")
def prepared(tmp_path_factory):
    root = tmp_path_factory.mktemp("prep")
    raw = root / "raw.jsonl"
    write_raw_dump(raw, 1000, seed=3)
    from pathlib import Path

    wordlist = Path(__file__).parent / "data" / "wordlist.txt"
    cfg = write_config(root / "cfg.yaml", paths={"raw": str(raw), "lexicon": str(wordlist)},
                       split={"seed": 5})
    outs = []
    for name in ("run1", "run2"):
        assert main(["prepare", "--config", str(cfg), "--out-dir", str(root / name)]) == 0
        outs.append(root / name)
    return root, outs


def test_prepare_split_sizes(prepared):
    _, (run1, _) = prepared
    sizes = [len((run1 / f"{s}.jsonl").read_text().splitlines()) for s in ("train", "val", "test")]
    assert sizes == [900, 50, 50]


def test_prepare_byte_identical(prepared):
    _, (run1, run2) = prepared
    for name in ("train.jsonl", "val.jsonl", "test.jsonl", "stats.json", "stats.txt", "resolved_config.yaml"):
        if name == "resolved_config.yaml":
            continue  # records its own out_dir
        assert sha(run1 / name) == sha(run2 / name), name


def test_prepare_stats_table(prepared):
    _, (run1, _) = prepared
    lines = (run1 / "stats.txt").read_text().splitlines()
    assert [ln.split(" | ")[0].strip() for ln in lines[2:]] == TABLE1_ROWS
    stats = json.loads((run1 / "stats.json").read_text())
    assert stats["train"]["n_dialogues"] == 900
    assert (run1 / "resolved_config.yaml").exists()


def test_stats_command(prepared, capsys):
    _, (run1, _) = prepared
    from pathlib import Path

    wordlist = Path(__file__).parent / "data" / "wordlist.txt"
    assert main(["stats", str(run1 / "val.jsonl"), "--lexicon", str(wordlist), "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["val"]["n_dialogues"] == 50


def test_prepare_bad_ratios(tmp_path, data_dir, wordlist_path):
    cfg = write_config(tmp_path / "c.yaml", paths={"raw": str(data_dir / "dialogues.jsonl"),
                                                   "lexicon": str(wordlist_path)},
                       split={"ratios": [0.5, 0.5, 0.5]})
    assert main(["prepare", "--config", str(cfg), "--out-dir", str(tmp_path / "o")]) == 1


def test_train_missing_key(tmp_path):
    cfg = write_config(tmp_path / "c.yaml", train={"epochs": 1})
    assert main(["train", "--config", str(cfg), "--out-dir", str(tmp_path / "o")]) == 1


def test_train_unknown_option(tmp_path, prepared):
    _, (run1, _) = prepared
    cfg = write_config(tmp_path / "c.yaml", paths={"train": str(run1 / "val.jsonl")}, train={"bogus": 1})
    assert main(["train", "--config", str(cfg), "--out-dir", str(tmp_path / "o")]) == 1


@pytest.fixture(scope="module")
def trained(prepared):
    root, (run1, _) = prepared
    cfg = write_config(root / "train.yaml",
                       paths={"train": str(run1 / "val.jsonl"), "val": str(run1 / "test.jsonl")},
                       model=TINY_MODEL, train={"preset": "desk", "epochs": 2, "learning_rate": 3e-3},
                       decode={"max_new": 12})
    dirs = []
    for name in ("t1", "t2"):
        assert main(["train", "--config", str(cfg), "--out-dir", str(root / name), "--seed", "7"]) == 0
        dirs.append(root / name)
    return root, cfg, dirs, run1


def test_train_outputs_and_seed_repeat(trained):
    _, _, (t1, t2), _ = trained
    assert sha(t1 / "checkpoint.json") == sha(t2 / "checkpoint.json")
    header = (t1 / "history.csv").read_text().splitlines()[0]
    assert header == "step,lm_loss,classifier_loss,overall_loss,val_ppl"
    ck = json.loads((t1 / "checkpoint.json").read_text())
    assert ck["version"] == 1 and "model_config" in ck and "vocab" in ck


def test_generate_and_evaluate(trained, tmp_path, wordlist_path):
    root, cfg, (t1, _), run1 = trained
    out = tmp_path / "gen"
    assert main(["generate", "--config", str(cfg), "--checkpoint", str(t1 / "checkpoint.json"),
                 "--input", str(run1 / "test.jsonl"), "--out-dir", str(out)]) == 0
    rows = [json.loads(x) for x in (out / "responses.jsonl").read_text().splitlines()]
    assert len(rows) == 50 and all("[TERM]" not in r["candidate"] for r in rows)
    assert (out / "responses.nll.jsonl").exists()

    ev = tmp_path / "eval"
    assert main(["evaluate", "--config", str(cfg), "--checkpoint", str(t1 / "checkpoint.json"),
                 "--input", str(run1 / "test.jsonl"), "--lexicon", str(wordlist_path), "--out-dir", str(ev)]) == 0
    report = json.loads((ev / "report.json").read_text())
    for col in TABLE_COLUMNS:
        assert col in report
    assert report["PPL"] > 1.0

    ev2 = tmp_path / "eval2"
    assert main(["evaluate", "--responses", str(out / "responses.jsonl"), "--nll", str(out / "responses.nll.jsonl"),
                 "--lexicon", str(wordlist_path), "--out-dir", str(ev2)]) == 0
    assert json.loads((ev2 / "report.json").read_text())["B-1"] == report["B-1"]


def test_evaluate_empty_test_set(trained, tmp_path):
    _, cfg, (t1, _), _ = trained
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    assert main(["evaluate", "--config", str(cfg), "--checkpoint", str(t1 / "checkpoint.json"),
                 "--input", str(empty), "--out-dir", str(tmp_path / "o")]) == 1


def test_evaluate_checkpoint_mismatch(trained, tmp_path):
    _, cfg, _, run1 = trained
    bad = tmp_path / "bad.json"
    bad.write_text('{"format": "termdialog-checkpoint", "version": 99}')
    assert main(["evaluate", "--checkpoint", str(bad), "--input", str(run1 / "test.jsonl"),
                 "--out-dir", str(tmp_path / "o")]) == 1
