import json
import subprocess
import sys
from pathlib import Path

import pytest

from duplexbench import FrameClock, gen_sine, write_wav
from duplexbench.cli import main, resolve_options, build_parser
from duplexbench.scenarios import generate_scenarios, save_scenarios

CLOCK = FrameClock()

# keep eval runs short: small eval window and grace via config file
FAST_OPTS = ["--eval-window", "0.5"]


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for var in ("JUDGE_ENDPOINT", "JUDGE_API_KEY", "DUPLEXBENCH_SAMPLE_RATE",
                "DUPLEXBENCH_FRAME_RATE", "DUPLEXBENCH_CODEBOOKS"):
        monkeypatch.delenv(var, raising=False)


@pytest.fixture()
def voice_wav(tmp_path):
    p = tmp_path / "voice.wav"
    write_wav(p, gen_sine(260.0, 1.6, 0.3, CLOCK))
    return p


@pytest.fixture()
def scenario_file(tmp_path):
    p = tmp_path / "scenarios.json"
    save_scenarios(generate_scenarios(n=1, seed=0), p)
    return p


def test_missing_subcommand_exits_one(capsys):
    with pytest.raises(SystemExit) as err:
        main([])
    assert err.value.code == 1


def test_unknown_flag_exits_one():
    with pytest.raises(SystemExit) as err:
        main(["stitch", "--frobnicate", "x"])
    assert err.value.code == 1


def test_missing_file_exits_two(tmp_path, capsys):
    rc = main(["stitch", str(tmp_path / "nope.toml"), "--out", str(tmp_path / "o")])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_prompt_build_writes_bundle(tmp_path, voice_wav, capsys):
    role = tmp_path / "role.txt"
    role.write_text("friendly billing assistant")
    out = tmp_path / "prompt.zip"
    rc = main([
        "prompt-build", "--voice", str(voice_wav), "--role", str(role),
        "--out", str(out),
    ])
    assert rc == 0
    assert out.exists()
    assert out.with_suffix(".zip.vocab.tsv").exists()
    echo = json.loads(out.with_suffix(".zip.config.json").read_text())
    assert echo["subcommand"] == "prompt-build"
    said = capsys.readouterr().out
    assert "frames" in said

    from duplexbench import load_prompt_bundle

    prompt = load_prompt_bundle(out)
    # 20 voice frames + 3 role tokens + 1 delimiter
    assert prompt.num_frames == 24


def test_stitch_renders_script(tmp_path, voice_wav, capsys):
    script = tmp_path / "dialog.toml"
    script.write_text(
        f'[[turns]]\nspeaker = "user"\nwav = "{voice_wav.name}"\npad_after = 0.2\n\n'
        '[[turns]]\nspeaker = "agent"\ntext = "happy to help"\n'
    )
    out = tmp_path / "sdir"
    rc = main(["stitch", str(script), "--out", str(out)])
    assert rc == 0
    assert (out / "dialog.user.wav").exists()
    assert (out / "dialog.agent.wav").exists()
    assert (out / "dialog.alignment.json").exists()
    assert "2 turns" in capsys.readouterr().out


def test_eval_scripted_agent(tmp_path, scenario_file, capsys):
    out = tmp_path / "rep"
    rc = main([
        "eval", "--scenarios", str(scenario_file), "--agent", "scripted",
        "--latency", "0.4", "--report", str(out), *FAST_OPTS,
    ])
    assert rc == 0
    results = (out / "results.csv").read_text().splitlines()
    assert results[0].startswith("scenario,question,tag,score")
    assert len(results) == 1 + 7
    # scripted transcript contains a refusal, so Q3 scores 5
    q3 = next(l for l in results if ",Q3," in l)
    assert ",5," in q3
    assert (out / "scores.csv").exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["n_results"] == 7
    assert (out / "config_echo.json").exists()


def test_eval_unknown_agent_exits(tmp_path, scenario_file):
    with pytest.raises(SystemExit):
        main([
            "eval", "--scenarios", str(scenario_file), "--agent", "warbler",
            "--report", str(tmp_path / "r"),
        ])


def test_metrics_subcommand(tmp_path, capsys):
    user = gen_sine(300.0, 1.0, 0.4, CLOCK)
    agent_audio = gen_sine(220.0, 2.0, 0.3, CLOCK)
    write_wav(tmp_path / "user.wav", user)
    write_wav(tmp_path / "agent.wav", agent_audio)
    (tmp_path / "meta.json").write_text(
        json.dumps({"category": "turn_taking", "anchor_time": 1.0})
    )
    out = tmp_path / "metrics.json"
    rc = main([
        "metrics", "--user", str(tmp_path / "user.wav"),
        "--agent", str(tmp_path / "agent.wav"),
        "--meta", str(tmp_path / "meta.json"), "--out", str(out),
    ])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert doc["tor"] == 1.0
    assert doc["latency_mean"] == 0.0  # agent already speaking at the anchor
    printed = json.loads(capsys.readouterr().out)
    assert printed == doc


def test_report_subcommand(tmp_path, capsys):
    rows = [
        {"scenario_id": "s-0", "question_id": "Q0", "judge_score": 4},
        {"scenario_id": "s-0", "question_id": "Q1", "judge_score": 2},
    ]
    results = tmp_path / "results.jsonl"
    results.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
    out = tmp_path / "outdir"
    rc = main(["report", "--results", str(results), "--out", str(out)])
    assert rc == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["overall_mean"] == pytest.approx(3.0)
    assert "3.0" in capsys.readouterr().out


def test_report_rejects_malformed_records(tmp_path, capsys):
    # missing scenario_id must be a clean schema error, not a traceback
    results = tmp_path / "results.jsonl"
    results.write_text('{"question_id": "Q0", "judge_score": 4}\n')
    rc = main(["report", "--results", str(results), "--out", str(tmp_path / "o")])
    assert rc == 2
    err = capsys.readouterr().err
    assert "error:" in err and "results.jsonl:1" in err

    results.write_text("not json at all\n")
    rc = main(["report", "--results", str(results), "--out", str(tmp_path / "o")])
    assert rc == 2


def test_option_precedence(tmp_path, monkeypatch):
    monkeypatch.setenv("DUPLEXBENCH_CODEBOOKS", "4")
    parser = build_parser()
    args = parser.parse_args(["stitch", "x.toml", "--out", "y"])
    assert resolve_options(args)["codebooks"] == 4  # env beats default

    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"codebooks": 2}))
    args = parser.parse_args(["stitch", "x.toml", "--out", "y", "--config", str(cfg)])
    assert resolve_options(args)["codebooks"] == 2  # config beats env

    args = parser.parse_args(
        ["stitch", "x.toml", "--out", "y", "--config", str(cfg), "--codebooks", "12"]
    )
    assert resolve_options(args)["codebooks"] == 12  # flag beats config


def test_config_echo_reproduces_run(tmp_path, voice_wav):
    out1 = tmp_path / "a.zip"
    rc = main([
        "prompt-build", "--voice", str(voice_wav), "--out", str(out1),
        "--codebooks", "4",
    ])
    assert rc == 0
    echo = out1.with_suffix(".zip.config.json")

    out2 = tmp_path / "b.zip"
    rc = main([
        "prompt-build", "--voice", str(voice_wav), "--out", str(out2),
        "--config", str(echo),
    ])
    assert rc == 0
    assert out1.read_bytes() == out2.read_bytes()
    assert json.loads(echo.read_text())["codebooks"] == 4


def test_console_script_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "duplexbench.cli", "--help"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    for name in ("prompt-build", "stitch", "eval", "metrics", "report", "serve-ref-agent"):
        assert name in proc.stdout
