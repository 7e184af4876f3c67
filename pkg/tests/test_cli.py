import json

import pytest

from lexstrata.cli import main
from lexstrata.persist import load_snapshot


@pytest.fixture
def corpus(tmp_path):
    path = tmp_path / "corpus.txt"
    path.write_text("the cat sat\nthe dog sat\nthe cat ran\n" * 30, encoding="utf-8")
    return path


def run_cli(args):
    return main([str(a) for a in args])


class TestTrain:
    def test_train_writes_snapshot_and_metrics(self, corpus, tmp_path):
        snap = tmp_path / "m.snap"
        metrics = tmp_path / "m.csv"
        rc = run_cli(["train", "--corpus", corpus, "--episodes", 40,
                      "--snapshot-out", snap, "--metrics-out", metrics,
                      "--seed", 5, "--period", 20])
        assert rc == 0
        net, state = load_snapshot(snap)
        assert net.episode_idx == 40
        rows = metrics.read_text().splitlines()
        assert len(rows) >= 41

    def test_zero_episodes_round_trips_model(self, corpus, tmp_path):
        snap1 = tmp_path / "m1.snap"
        snap2 = tmp_path / "m2.snap"
        run_cli(["train", "--corpus", corpus, "--episodes", 25,
                 "--snapshot-out", snap1, "--seed", 5])
        run_cli(["train", "--corpus", corpus, "--episodes", 0,
                 "--snapshot-in", snap1, "--snapshot-out", snap2])
        a, _ = load_snapshot(snap1)
        b, _ = load_snapshot(snap2)
        assert a.episode_idx == b.episode_idx
        assert len(a.concepts) == len(b.concepts)

    def test_resume_matches_uninterrupted(self, corpus, tmp_path):
        snap_a = tmp_path / "a.snap"
        snap_b = tmp_path / "b.snap"
        snap_full = tmp_path / "full.snap"
        m_resumed = tmp_path / "resumed.csv"
        m_full = tmp_path / "full.csv"
        run_cli(["train", "--corpus", corpus, "--episodes", 30,
                 "--snapshot-out", snap_a, "--seed", 2])
        run_cli(["train", "--corpus", corpus, "--episodes", 30,
                 "--snapshot-in", snap_a, "--snapshot-out", snap_b,
                 "--metrics-out", m_resumed])
        run_cli(["train", "--corpus", corpus, "--episodes", 60,
                 "--snapshot-out", snap_full, "--seed", 2,
                 "--metrics-out", m_full])
        resumed_rows = m_resumed.read_text().splitlines()[1:]
        full_rows = m_full.read_text().splitlines()[1:]
        assert resumed_rows == full_rows[-len(resumed_rows):]

    def test_config_file_and_flag_override(self, corpus, tmp_path):
        cfg_file = tmp_path / "cfg.json"
        cfg_file.write_text(json.dumps({"t_opt": 20, "period": 10}), encoding="utf-8")
        snap = tmp_path / "m.snap"
        run_cli(["train", "--corpus", corpus, "--episodes", 5,
                 "--snapshot-out", snap, "--config", cfg_file, "--t-opt", 30])
        net, _ = load_snapshot(snap)
        assert net.config.t_opt == 30      # flag wins
        assert net.config.period == 10     # file value kept

    def test_help_documents_defaults(self, capsys):
        with pytest.raises(SystemExit):
            run_cli(["train", "--help"])
        text = capsys.readouterr().out
        for needle in ("--window", "--t-opt", "--r-min", "--beam-tries",
                       "--beam-keep", "--min-cooccur", "--min-tail-score",
                       "--period", "--layer-threshold", "--edge-budget"):
            assert needle in text
        assert "default: 200" in text      # budgets
        assert "default: 50" in text       # t_opt
        assert "default: 10" in text       # beam tries
        assert "default: 3" in text        # window / beam keep


class TestOtherCommands:
    @pytest.fixture
    def snapshot(self, corpus, tmp_path):
        snap = tmp_path / "m.snap"
        run_cli(["train", "--corpus", corpus, "--episodes", 60,
                 "--snapshot-out", snap, "--seed", 5, "--period", 20,
                 "--layer-threshold", 60, "--t-opt", 5])
        return snap

    def test_segment(self, snapshot, tmp_path, capsys):
        lines = tmp_path / "in.txt"
        lines.write_text("the cat\n", encoding="utf-8")
        rc = run_cli(["segment", "--snapshot", snapshot, "--input", lines,
                      "--tries", 4, "--keep", 2, "--seed", 1])
        assert rc == 0
        out = capsys.readouterr().out
        assert "L=0: t h e c a t" in out
        assert "score:" in out

    def test_segment_skips_unknown_chars(self, snapshot, tmp_path, capsys):
        lines = tmp_path / "in.txt"
        lines.write_text("cat ZZZ9\n", encoding="utf-8")
        rc = run_cli(["segment", "--snapshot", snapshot, "--input", lines])
        assert rc == 0
        assert "c a t" in capsys.readouterr().out

    def test_eval(self, snapshot, corpus, capsys):
        rc = run_cli(["eval", "--snapshot", snapshot, "--corpus", corpus,
                      "--episodes", 20, "--tries", 2, "--keep", 2, "--seed", 3])
        assert rc == 0
        out = capsys.readouterr().out
        assert "mean selector score:" in out
        assert "mean bad-split ratio:" in out

    def test_eval_is_frozen(self, snapshot, corpus, capsys, tmp_path):
        before = load_snapshot(snapshot)[0]
        run_cli(["eval", "--snapshot", snapshot, "--corpus", corpus,
                 "--episodes", 10, "--seed", 3])
        first = capsys.readouterr().out
        run_cli(["eval", "--snapshot", snapshot, "--corpus", corpus,
                 "--episodes", 10, "--seed", 3])
        second = capsys.readouterr().out
        assert first == second

    def test_inspect(self, snapshot, capsys):
        rc = run_cli(["inspect", "--snapshot", snapshot, "--concept", "the",
                      "--min-freq", 1])
        assert rc == 0
        out = capsys.readouterr().out
        assert "level 0:" in out
        assert "'the'@1" in out or "no concept" in out

    def test_ratelab(self, capsys):
        rc = run_cli(["ratelab", "--p", 0.25, "--T", 500, "--trials", 10,
                      "--seed", 1, "--schedule", "frequency_decay"])
        assert rc == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0].startswith("p,T,schedule")
        assert out[1].startswith("0.25,500,frequency_decay")

    def test_encode_binary(self, tmp_path, capsys):
        src = tmp_path / "in.txt"
        src.write_text("goal go\n", encoding="utf-8")
        book = tmp_path / "book.json"
        rc = run_cli(["encode-binary", "--input", src, "--codebook-out", book])
        assert rc == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "00000000" + "00000001" + "00000010" + "00000011"
        assert lines[1] == "00000000" + "00000001"
        assert json.loads(book.read_text())["next_counter"] == 4
