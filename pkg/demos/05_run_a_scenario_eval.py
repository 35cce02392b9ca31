"""
Running a scenario benchmark and judging the answers
====================================================

A scenario is a service role (context paragraph with named facts) plus
seven probe questions in a fixed tag layout. Each question is streamed
at the agent as audio under the scenario's hybrid prompt; the agent
text lane is decoded into a transcript and scored 1-5. Without a judge
endpoint configured, a deterministic keyword rubric stands in.
"""

import tempfile
from pathlib import Path

from duplexbench import (
    RunConfig,
    ScriptedAgent,
    VadParams,
    load_scenarios,
    report,
    run_scenarios,
    score_results,
)

scenarios = load_scenarios(Path(__file__).resolve().parent.parent / "fixtures" / "scenarios")
print(f"loaded {len(scenarios)} scenarios: {[s.domain for s in scenarios]}")
sc = scenarios[0]
print(f"\ncontext: {sc.context[:84]}...")
for q in sc.questions[:3]:
    print(f"  {q.qid} [{q.tag}] {q.utterance_text}")

# A scripted agent that answers every question with the same polite
# refusal; short evaluation window to keep the demo quick.
def agent():
    return ScriptedAgent(
        latency_s=0.4,
        transcript="I understand, unfortunately I cannot help with that right now.",
    )

config = RunConfig(vad=VadParams(eval_window_s=1.0), grace_s=0.5)
results = run_scenarios(scenarios, agent, config)
score_results(results, scenarios, config)

print(f"\nran {len(results)} trials")
for r in results[:7]:
    onset = f"{r.events.first_onset_delay:.2f} s" if r.events.first_onset_delay else "-"
    print(f"  {r.question_id} [{r.tag:<21}] score {r.judge_score}  onset {onset}")

out_dir = Path(tempfile.mkdtemp())
summary = report(results, out_dir)
print(f"\nper-tag means: { {t: round(v, 2) for t, v in summary['per_tag_mean'].items() if v} }")
print(f"overall mean {summary['overall_mean']:.3f}; tables under {out_dir}")
