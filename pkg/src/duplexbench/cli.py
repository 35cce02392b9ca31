"""Command-line surface for the evaluation pipeline.

Subcommands map 1:1 onto library operations. Exit codes: 0 success,
1 usage error, 2 runtime error. Option precedence: flags > config file
> environment > built-in defaults. Every run writes a config echo file
that can be fed back via --config to reproduce the run.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

DEFAULTS = {
    "sample_rate": 24000,
    "frame_rate": 12.5,
    "codebooks": 8,
    "vad_threshold": -40.0,
    "hangover": 2,
    "min_speech": 2,
    "eval_window": 3.0,
    "backchannel_max": 1.0,
    "jobs": 1,
    "seed": 0,
    "judge_endpoint": None,
    "judge_api_key": None,
}

ENV_KEYS = {
    "judge_endpoint": "JUDGE_ENDPOINT",
    "judge_api_key": "JUDGE_API_KEY",
    "sample_rate": "DUPLEXBENCH_SAMPLE_RATE",
    "frame_rate": "DUPLEXBENCH_FRAME_RATE",
    "codebooks": "DUPLEXBENCH_CODEBOOKS",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage problems, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_common(p: _Parser) -> None:
    p.add_argument("--config", help="JSON file of option values (a config echo works)")
    for key in DEFAULTS:
        flag = "--" + key.replace("_", "-")
        p.add_argument(flag, default=None, help=argparse.SUPPRESS)


def resolve_options(args: argparse.Namespace) -> dict:
    """flags > config file > environment > defaults."""
    resolved = dict(DEFAULTS)
    for key, env in ENV_KEYS.items():
        if os.environ.get(env):
            resolved[key] = os.environ[env]
    if args.config:
        resolved.update(json.loads(Path(args.config).read_text()))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            resolved[key] = value
    for key in ("sample_rate", "codebooks", "hangover", "min_speech", "jobs", "seed"):
        resolved[key] = int(resolved[key])
    for key in ("frame_rate", "vad_threshold", "eval_window", "backchannel_max"):
        resolved[key] = float(resolved[key])
    return resolved


def _run_config(opts: dict):
    from .runner import RunConfig
    from .vad import VadParams

    vad = VadParams(
        threshold_dbfs=opts["vad_threshold"],
        hangover_frames=opts["hangover"],
        min_speech_frames=opts["min_speech"],
        backchannel_max_s=opts["backchannel_max"],
        eval_window_s=opts["eval_window"],
    )
    return RunConfig(
        sample_rate=opts["sample_rate"],
        frame_rate=opts["frame_rate"],
        codebooks=opts["codebooks"],
        vad=vad,
        jobs=opts["jobs"],
        judge_endpoint=opts["judge_endpoint"],
        judge_api_key=opts["judge_api_key"],
        seed=opts["seed"],
    )


def _echo_config(opts: dict, subcommand: str, where: Path) -> None:
    doc = {"subcommand": subcommand, **{k: opts[k] for k in sorted(DEFAULTS)}}
    where.parent.mkdir(parents=True, exist_ok=True)
    where.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def _make_agent(name: str, opts: dict, latency: float, config, vocab_path=None):
    from . import agents, wire

    if name.startswith("tcp:"):
        vocab = None
        if vocab_path:
            from .streams import Vocabulary

            vocab = Vocabulary.load(vocab_path)
        return lambda: wire.connect_wire(name, codebooks=opts["codebooks"], vocab=vocab)
    from .streams import Vocabulary

    scripted_vocab = Vocabulary()  # shared so every session emits the same ids
    builtin = {
        "silent": lambda: agents.SilentAgent(),
        "echo": lambda: agents.EchoAgent(),
        "tone": lambda: agents.ToneAgent(),
        "scripted": lambda: agents.ScriptedAgent(
            latency_s=latency,
            transcript="I understand, unfortunately I cannot help with that right now.",
            vocab=scripted_vocab,
        ),
    }
    if name not in builtin:
        raise SystemExit(f"unknown agent {name!r}: use tcp:host:port or one of {sorted(builtin)}")
    factory = builtin[name]
    factory.vocab = scripted_vocab if name == "scripted" else None
    return factory


def cmd_prompt_build(args, opts) -> int:
    from .audio import read_wav
    from .prompts import HybridPromptSpec, build_hybrid_prompt
    from .runner import RunConfig
    from .streams import Vocabulary

    config = _run_config(opts)
    voice = read_wav(args.voice)
    vocab = Vocabulary()
    role_tokens: tuple[int, ...] = ()
    if args.role:
        role_tokens = tuple(vocab.encode(Path(args.role).read_text(encoding="utf-8")))
    spec = HybridPromptSpec(voice, role_tokens, order=args.order)
    prompt = build_hybrid_prompt(spec, config.clock)
    out = Path(args.out)
    prompt.save(out)
    vocab.save(out.with_suffix(out.suffix + ".vocab.tsv"))
    _echo_config(opts, "prompt-build", out.with_suffix(out.suffix + ".config.json"))
    print(f"wrote {out}: {prompt.num_frames} frames "
          f"(voice {prompt.voice_span}, text {prompt.text_span}, delimiter {prompt.delimiter_frame})")
    return 0


def cmd_stitch(args, opts) -> int:
    from .stitching import load_script, stitch

    config = _run_config(opts)
    turns = load_script(args.script, config.clock)
    dialog = stitch(turns, config.clock)
    out_dir = Path(args.out)
    dialog.save(out_dir, stem=Path(args.script).stem)
    _echo_config(opts, "stitch", out_dir / "config_echo.json")
    print(f"wrote {out_dir}: {dialog.duration:.2f} s, "
          f"{len(dialog.alignment)} turns, {len(dialog.overlaps)} overlaps")
    return 0


def cmd_eval(args, opts) -> int:
    from .runner import report, run_scenarios, score_results
    from .scenarios import load_scenarios

    config = _run_config(opts)
    scenarios = load_scenarios(args.scenarios)
    agent_factory = _make_agent(args.agent, opts, args.latency, config, args.agent_vocab)
    scenario_dir = Path(args.scenarios)
    if scenario_dir.is_file():
        scenario_dir = scenario_dir.parent
    results = run_scenarios(scenarios, agent_factory, config, scenario_dir)
    score_results(results, scenarios, config)

    out_dir = Path(args.report)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "results.csv", "w", encoding="utf-8") as f:
        f.write("scenario,question,tag,score,took_over,onset_delay,failed,truncated,transcript\n")
        for r in results:
            delay = ""
            if r.events and r.events.first_onset_delay is not None:
                delay = f"{r.events.first_onset_delay:.3f}"
            transcript = r.transcript.replace('"', "'")
            f.write(
                f'{r.scenario_id},{r.question_id},{r.tag},'
                f'{r.judge_score if r.judge_score is not None else ""},'
                f'{int(bool(r.events and r.events.took_over))},{delay},'
                f'{int(r.failed)},{int(r.truncated)},"{transcript}"\n'
            )
    summary = report(results, out_dir)
    _echo_config(opts, "eval", out_dir / "config_echo.json")
    mean = summary["overall_mean"]
    print(f"{len(results)} trials -> {out_dir} "
          f"(overall mean {mean:.3f})" if mean is not None else f"{len(results)} trials -> {out_dir}")
    return 0


def cmd_metrics(args, opts) -> int:
    from .audio import read_wav
    from .metrics import category_metrics
    from .vad import TrialMeta, extract_events
    from .stitching import StitchedDialog, Speaker

    config = _run_config(opts)
    user = read_wav(args.user)
    agent = read_wav(args.agent)
    meta = TrialMeta.load(args.meta)
    dialog = StitchedDialog(user, agent, [(Speaker.USER, 0.0, user.duration)])
    events = extract_events(dialog, meta, config.clock, config.vad)
    row = category_metrics(meta.category, [events])
    doc = {
        "category": meta.category.value,
        "anchor_time": meta.anchor_time,
        "tor": row.tor,
        "latency_mean": row.latency_mean,
        "agent_onsets": events.agent_onsets,
        "agent_segments": [[s.start, s.end] for s in events.agent_segments],
        "user_segments": [[s.start, s.end] for s in events.user_segments],
        "backchannels": [[s.start, s.end] for s in events.backchannels],
    }
    text = json.dumps(doc, indent=1)
    if args.out:
        Path(args.out).write_text(text + "\n")
        _echo_config(opts, "metrics", Path(args.out).with_suffix(".config.json"))
    print(text)
    return 0


def cmd_report(args, opts) -> int:
    from .errors import SchemaError
    from .runner import TrialResult, report

    results = []
    for lineno, line in enumerate(
        Path(args.results).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
            scenario_id = doc["scenario_id"]
            question_id = doc["question_id"]
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise SchemaError(
                f"{args.results}:{lineno}: bad result record ({e})", field="results"
            ) from e
        results.append(
            TrialResult(
                scenario_id,
                question_id,
                doc.get("tag", ""),
                doc.get("transcript", ""),
                doc.get("text_tokens", []),
                None,
                judge_score=doc.get("judge_score"),
                failed=doc.get("failed", False),
                truncated=doc.get("truncated", False),
            )
        )
    out_dir = Path(args.out)
    summary = report(results, out_dir)
    _echo_config(opts, "report", out_dir / "config_echo.json")
    print(f"{len(results)} results -> {out_dir} (overall mean {summary['overall_mean']})")
    return 0


def cmd_serve_ref_agent(args, opts) -> int:
    from .runner import RunConfig
    from .wire import serve_forever

    config = _run_config(opts)
    agent_factory = _make_agent(args.behavior, opts, args.latency, config)
    if args.vocab_out and agent_factory.vocab is not None:
        # Prime the table once so the exported file covers the transcript.
        probe = agent_factory()
        probe.start(None, config.clock)
        agent_factory.vocab.save(args.vocab_out)
    print(f"serving {args.behavior} agent on {args.host}:{args.port}", flush=True)
    served = serve_forever(
        agent_factory,
        args.host,
        args.port,
        config.clock,
        opts["codebooks"],
        max_sessions=args.max_sessions,
        ready_callback=lambda port: print(f"ready on port {port}", flush=True),
    )
    print(f"served {served} sessions")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="duplexbench", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("prompt-build", parents=[], help="assemble a prompt bundle")
    p.add_argument("--voice", required=True, help="voice example WAV")
    p.add_argument("--role", help="role description text file")
    p.add_argument("--order", default="voice-first", choices=["voice-first", "text-first"])
    p.add_argument("--out", required=True, help="output bundle path")
    _add_common(p)
    p.set_defaults(func=cmd_prompt_build)

    p = sub.add_parser("stitch", help="render a dialog script to two WAV channels")
    p.add_argument("script", help="TOML dialog script")
    p.add_argument("--out", required=True, help="output directory")
    _add_common(p)
    p.set_defaults(func=cmd_stitch)

    p = sub.add_parser("eval", help="run scenarios against an agent")
    p.add_argument("--scenarios", required=True, help="scenario file or directory")
    p.add_argument("--agent", default="scripted",
                   help="tcp:host:port or silent|echo|tone|scripted")
    p.add_argument("--agent-vocab", help="token table TSV for a wire agent's text lane")
    p.add_argument("--latency", type=float, default=0.4, help="scripted agent latency")
    p.add_argument("--report", required=True, help="report output directory")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("metrics", help="extract events and metrics from a trial recording")
    p.add_argument("--user", required=True, help="user channel WAV")
    p.add_argument("--agent", required=True, help="agent channel WAV")
    p.add_argument("--meta", required=True, help="trial metadata JSON")
    p.add_argument("--out", help="write metrics JSON here")
    _add_common(p)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("report", help="aggregate a results JSONL into report tables")
    p.add_argument("--results", required=True, help="results JSONL file")
    p.add_argument("--out", required=True, help="report output directory")
    _add_common(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve-ref-agent", help="serve a reference agent over TCP")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=7007)
    p.add_argument("--behavior", default="silent",
                   choices=["silent", "echo", "tone", "scripted"])
    p.add_argument("--latency", type=float, default=0.4)
    p.add_argument("--max-sessions", type=int, default=None)
    p.add_argument("--vocab-out", help="write the served agent's token table TSV here")
    _add_common(p)
    p.set_defaults(func=cmd_serve_ref_agent)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    from .errors import DuplexBenchError

    try:
        opts = resolve_options(args)
        return args.func(args, opts)
    except DuplexBenchError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
