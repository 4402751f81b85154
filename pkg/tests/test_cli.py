"""simulate / verify / config loading."""
from __future__ import annotations

import json
from pathlib import Path

import pytest

from companioncast.cli import main
from companioncast.config import ConfigError, load_config

SAMPLE_DIR = Path(__file__).resolve().parent.parent / "sample"
TIMELINE = SAMPLE_DIR / "timeline.json"
CONFIG = SAMPLE_DIR / "config.json"


def simulate(tmp_path, name, seed=7, team="home"):
    out = tmp_path / name
    rc = main([
        "simulate", "--timeline", str(TIMELINE), "--config", str(CONFIG),
        "--team", team, "--seed", str(seed), "--out", str(out),
    ])
    assert rc == 0
    return out


def test_simulate_writes_transcript(tmp_path, capsys):
    out = simulate(tmp_path, "t.jsonl")
    lines = out.read_text(encoding="utf-8").splitlines()
    assert json.loads(lines[0])["kind"] == "session_created"
    assert "2 conversations" in capsys.readouterr().out


def test_simulate_deterministic(tmp_path):
    a = simulate(tmp_path, "a.jsonl", seed=7)
    b = simulate(tmp_path, "b.jsonl", seed=7)
    assert a.read_bytes() == b.read_bytes()


def test_simulate_seed_changes_transcript(tmp_path):
    a = simulate(tmp_path, "a.jsonl", seed=7)
    b = simulate(tmp_path, "b.jsonl", seed=8)
    # the sample script is fully keyed, so agent text is identical, but the
    # transcripts must still be self-consistent; compare a no-script config
    cfg = json.loads(CONFIG.read_text())
    cfg["backends"]["chat"] = {"kind": "scripted"}
    alt = tmp_path / "cfg.json"
    alt.write_text(json.dumps(cfg))
    c = tmp_path / "c.jsonl"
    d = tmp_path / "d.jsonl"
    assert main(["simulate", "--timeline", str(TIMELINE), "--config", str(alt),
                 "--team", "home", "--seed", "1", "--out", str(c)]) == 0
    assert main(["simulate", "--timeline", str(TIMELINE), "--config", str(alt),
                 "--team", "home", "--seed", "2", "--out", str(d)]) == 0
    assert c.read_bytes() != d.read_bytes()
    assert a.read_bytes() == a.read_bytes() and b.read_bytes()  # files intact


def test_verify_identical(tmp_path, capsys):
    a = simulate(tmp_path, "a.jsonl")
    b = simulate(tmp_path, "b.jsonl")
    assert main(["verify", "--transcript", str(a), "--golden", str(b)]) == 0
    assert "identical" in capsys.readouterr().out


def test_verify_differs(tmp_path, capsys):
    a = simulate(tmp_path, "a.jsonl", team="home")
    b = simulate(tmp_path, "b.jsonl", team="away")
    assert main(["verify", "--transcript", str(a), "--golden", str(b)]) == 1
    out = capsys.readouterr().out
    assert "differ" in out and "line" in out


def test_team_changes_transcript(tmp_path):
    a = simulate(tmp_path, "a.jsonl", team="home")
    b = simulate(tmp_path, "b.jsonl", team="away")
    assert a.read_bytes() != b.read_bytes()


# ------------------------------------------------------------------ config

def test_load_sample_config():
    cfg = load_config(CONFIG)
    assert [p.id for p in cfg.roster] == ["diehard", "analyst", "comedian"]
    assert cfg.scheduler.separation_s["high"] == 15
    assert cfg.judge_temperature == 0.2
    assert cfg.rubric.keys[0] == "relevance"
    backend = cfg.build_chat_backend()
    assert backend.kind == "scripted"
    assert backend.script  # sample agent_script.json resolved relative to config


def test_config_missing_file():
    with pytest.raises(ConfigError, match="not found"):
        load_config("/nonexistent/config.json")


def test_config_bad_rubric_preset(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"judge": {"rubric_preset": "nope"}}))
    with pytest.raises(ConfigError, match="preset"):
        load_config(p)


def test_config_duplicate_azimuths_rejected(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"roster": [
        {"id": "a", "role_kind": "diehard", "allegiance": "user_team", "spatial_azimuth_deg": 10},
        {"id": "b", "role_kind": "analyst", "allegiance": "user_team", "spatial_azimuth_deg": 10},
    ]}))
    with pytest.raises(Exception, match="azimuth"):
        load_config(p)


def test_config_unknown_field_warns(tmp_path, caplog):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"mystery": 1}))
    with caplog.at_level("WARNING"):
        load_config(p)
    assert "mystery" in caplog.text
