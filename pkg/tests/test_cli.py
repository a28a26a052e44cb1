import csv
import io
import json

import pytest

from drainage.analytic import gamma_exact, sigma2_exact, y_tail
from drainage.cli import main, resolve_config, split_payload

SMALL = {
    "trace": ["--height", "200"],
    "regen": ["--gap", "3", "--n-replicates", "50"],
    "coalesce": ["--x", "1,2", "--t-grid", "10,100", "--n-replicates", "200"],
    "triple": ["--gaps", "1:1,2:2", "--n-replicates", "100", "--t-cap", "10000"],
    "scaling": ["--n-replicates", "1000", "--n-scale", "10"],
    "eta": ["--n-replicates", "200", "--n-scale", "10", "--epsilon", "0.5"],
    "treescan": ["--n-replicates", "50", "--height", "100"],
    "exact": [],
}


def run(tmp_path, name, args, fname="out.csv"):
    out = tmp_path / fname
    code = main(args + ["--out", str(out), "--overwrite"])
    return code, out.read_text() if out.exists() else ""


def rows_of(text):
    return list(csv.reader(io.StringIO(split_payload(text))))


def test_exact_table(tmp_path):
    code, text = run(tmp_path, "exact", ["exact", "--p", "0.5", "--seed", "1"])
    assert code == 0
    rows = rows_of(text)
    assert rows[0] == ["quantity", "m", "value"]
    tails = [r for r in rows[1:] if r[0] == "y_tail"]
    assert [int(r[1]) for r in tails] == [0, 1, 2, 3, 4]
    assert float(tails[1][2]) == y_tail(0.5, 1) == 0.125
    named = {r[0]: float(r[2]) for r in rows[1:] if r[0] != "y_tail"}
    assert named["gamma"] == gamma_exact(0.5)
    assert named["sigma2"] == sigma2_exact(0.5)


def test_metadata_block(tmp_path):
    code, text = run(tmp_path, "exact", ["exact", "--seed", "42"])
    assert code == 0
    head = [l for l in text.splitlines() if l.startswith("#")]
    assert head[0] == "# drainage exact"
    assert "# seed: 42" in head
    cfg = json.loads(next(l for l in head if l.startswith("# config: "))[len("# config: "):])
    assert cfg["p"] == 0.5 and cfg["m_max"] == 4
    assert any(l.startswith("# git: ") for l in head)
    assert any(l.startswith("# wall_time_s: ") for l in head)


def test_coalesce_schema(tmp_path):
    code, text = run(tmp_path, "coalesce", ["coalesce", "--seed", "3"] + SMALL["coalesce"])
    assert code == 0
    rows = rows_of(text)
    assert rows[0] == ["x", "t", "survival", "se", "n", "censored"]
    assert len(rows) == 1 + 2 * 2
    for r in rows[1:]:
        assert 0.0 <= float(r[2]) <= 1.0


def test_payload_uses_crlf(tmp_path):
    _, text = run(tmp_path, "exact", ["exact"])
    raw = (tmp_path / "out.csv").read_bytes()
    assert b"quantity,m,value\r\n" in raw


@pytest.mark.parametrize("name", sorted(SMALL))
def test_rerun_is_byte_identical(tmp_path, name):
    args = [name, "--seed", "11"] + SMALL[name]
    c1, t1 = run(tmp_path, name, args + ["--threads", "1"], "a.csv")
    c2, t2 = run(tmp_path, name, args + ["--threads", "2"], "b.csv")
    assert c1 == c2 == 0
    assert split_payload(t1) == split_payload(t2)
    assert split_payload(t1)


def test_json_lines(tmp_path):
    code, text = run(tmp_path, "trace", ["trace", "--format", "json", "--height", "20"], "o.jsonl")
    assert code == 0
    objs = [json.loads(l) for l in split_payload(text).splitlines()]
    assert objs[0] == {"k": 0, "x1": 0, "level": 0}
    assert objs[-1]["level"] >= 20


def test_treescan_d4_json(tmp_path):
    code, text = run(
        tmp_path, "treescan",
        ["treescan", "--d", "4", "--height", "50", "--n-replicates", "20", "--format", "json"],
        "t.jsonl",
    )
    assert code == 0
    obj = json.loads(split_payload(text))
    assert obj["d"] == 4 and obj["n"] == 20


# -- errors ----------------------------------------------------------------------


def test_bad_p_exits_1(capsys):
    assert main(["exact", "--p", "2"]) == 1
    assert "p:" in capsys.readouterr().err


def test_bad_d_for_d2_command(capsys):
    assert main(["coalesce", "--d", "3"]) == 1
    assert "d:" in capsys.readouterr().err


def test_bad_grid_exits_1(capsys):
    assert main(["coalesce", "--t-grid", "10,abc"]) == 1
    assert "t_grid" in capsys.readouterr().err


def test_search_exceeded_exits_2(capsys):
    code = main(["trace", "--p", "1e-9", "--max-search-height", "1", "--height", "5"])
    assert code == 2
    assert "search exceeded" in capsys.readouterr().err


def test_refuses_to_overwrite(tmp_path, capsys):
    out = tmp_path / "x.csv"
    out.write_text("keep")
    assert main(["exact", "--out", str(out)]) == 1
    assert out.read_text() == "keep"
    assert "overwrite" in capsys.readouterr().err
    assert main(["exact", "--out", str(out), "--overwrite"]) == 0
    assert out.read_text() != "keep"


# -- config ------------------------------------------------------------------------


def test_config_file_and_flag_precedence(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text("# comment\np = 0.3\nseed=5\nm-max = 2\n")
    cfg = resolve_config("exact", {"config": str(cfgfile)})
    assert cfg["p"] == 0.3 and cfg["seed"] == 5 and cfg["m_max"] == 2
    cfg = resolve_config("exact", {"config": str(cfgfile), "p": 0.7})
    assert cfg["p"] == 0.7 and cfg["seed"] == 5


def test_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("nonsense line\n")
    assert main(["exact", "--config", str(bad)]) == 1
    unknown = tmp_path / "unknown.cfg"
    unknown.write_text("colour=blue\n")
    assert main(["exact", "--config", str(unknown)]) == 1
    assert "colour" in capsys.readouterr().err


def test_seed_env_fallback(monkeypatch, tmp_path):
    monkeypatch.setenv("DRAINAGE_SEED", "77")
    assert resolve_config("trace", {})["seed"] == 77
    assert resolve_config("trace", {"seed": 3})["seed"] == 3
    cfgfile = tmp_path / "s.cfg"
    cfgfile.write_text("seed=9\n")
    assert resolve_config("trace", {"config": str(cfgfile)})["seed"] == 9
    monkeypatch.delenv("DRAINAGE_SEED")
    assert resolve_config("trace", {})["seed"] == 0


def test_seed_changes_payload(tmp_path):
    _, a = run(tmp_path, "trace", ["trace", "--seed", "1", "--height", "100"], "a.csv")
    _, b = run(tmp_path, "trace", ["trace", "--seed", "2", "--height", "100"], "b.csv")
    assert split_payload(a) != split_payload(b)
