"""Service-scenario schema: loading, validation, and templated generation.

A scenario is one service role: a context paragraph with named slots
(agent_name, company, verification_fact, plan_facts, timing_fact) and
exactly seven probe questions whose tags follow a fixed layout:

    Q0 Proper Noun, Q1 Context details, Q2 Context details,
    Q3 Unfulfillable Request, Q4 Customer Rudeness,
    Q5 Unspecified, Q6 Unrelated.
"""

from __future__ import annotations

import json
import random
import re
import string
from dataclasses import dataclass, field
from pathlib import Path

from .errors import SchemaError

TAG_LAYOUT = (
    "Proper Noun",
    "Context details",
    "Context details",
    "Unfulfillable Request",
    "Customer Rudeness",
    "Unspecified",
    "Unrelated",
)
NUM_QUESTIONS = len(TAG_LAYOUT)
SLOT_NAMES = ("agent_name", "company", "verification_fact", "plan_facts", "timing_fact")

_PLACEHOLDER = re.compile(r"\{([a-z_]+)\}")


@dataclass
class Question:
    qid: str
    tag: str
    utterance_text: str
    utterance_wav: str | None = None


@dataclass
class Scenario:
    scenario_id: str
    domain: str
    context: str
    slots: dict[str, str]
    questions: list[Question] = field(default_factory=list)

    def question(self, index: int) -> Question:
        return self.questions[index]


def validate_scenario(sc: Scenario) -> None:
    """Enforce the schema; raises SchemaError naming the offending field."""
    if not sc.scenario_id:
        raise SchemaError("missing scenario id", field="id")
    if not sc.context.strip():
        raise SchemaError("context must be non-empty", field="context")
    if len(sc.questions) != NUM_QUESTIONS:
        raise SchemaError(
            f"exactly {NUM_QUESTIONS} questions required, got {len(sc.questions)}",
            field="questions",
        )
    for name in SLOT_NAMES:
        if name not in sc.slots:
            raise SchemaError(f"missing slot {name!r}", field=f"slots.{name}")
    for name, value in sc.slots.items():
        if value not in sc.context:
            raise SchemaError(
                f"slot value {value!r} does not appear in context",
                field=f"slots.{name}",
            )
    for i, q in enumerate(sc.questions):
        if q.tag != TAG_LAYOUT[i]:
            raise SchemaError(
                f"question {i} tag must be {TAG_LAYOUT[i]!r}, got {q.tag!r}",
                field=f"questions[{i}].tag",
            )
        if not q.utterance_text.strip():
            raise SchemaError(
                "utterance text must be non-empty",
                field=f"questions[{i}].utterance_text",
            )
        for ref in _PLACEHOLDER.findall(q.utterance_text):
            if ref not in sc.slots:
                raise SchemaError(
                    f"utterance references unknown slot {ref!r}",
                    field=f"questions[{i}].utterance_text",
                )


def _scenario_from_doc(doc: dict, source: str) -> Scenario:
    try:
        questions = [
            Question(
                q.get("id", f"Q{i}"),
                q["tag"],
                q["utterance_text"],
                q.get("utterance_wav"),
            )
            for i, q in enumerate(doc["questions"])
        ]
        sc = Scenario(
            doc["id"],
            doc.get("domain", ""),
            doc["context"],
            dict(doc.get("slots", {})),
            questions,
        )
    except (KeyError, TypeError) as e:
        raise SchemaError(f"{source}: malformed scenario: {e}", field=str(e)) from e
    validate_scenario(sc)
    return sc


def load_scenarios(path) -> list[Scenario]:
    """Load one scenario file or every ``*.json`` in a directory."""
    path = Path(path)
    if path.is_dir():
        files = sorted(path.glob("*.json"))
        if not files:
            raise SchemaError(f"{path}: no scenario files found", field="path")
        return [s for f in files for s in load_scenarios(f)]
    text = path.read_text(encoding="utf-8").strip()
    if not text:
        raise SchemaError(f"{path}: empty scenario file", field="path")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: not valid JSON: {e}", field="path") from e
    docs = doc if isinstance(doc, list) else [doc]
    return [_scenario_from_doc(d, str(path)) for d in docs]


def scenario_to_doc(sc: Scenario) -> dict:
    return {
        "id": sc.scenario_id,
        "domain": sc.domain,
        "context": sc.context,
        "slots": dict(sorted(sc.slots.items())),
        "questions": [
            {
                "id": q.qid,
                "tag": q.tag,
                "utterance_text": q.utterance_text,
                "utterance_wav": q.utterance_wav,
            }
            for q in sc.questions
        ],
    }


def save_scenarios(scenarios: list[Scenario], path) -> None:
    """Canonical JSON emission, so save(load(x)) is byte-stable."""
    path = Path(path)
    docs = [scenario_to_doc(s) for s in scenarios]
    payload = docs[0] if len(docs) == 1 else docs
    path.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n", encoding="utf-8")


_DOMAINS = [
    {
        "domain": "health insurance",
        "company_stems": ["National Health Coverage", "Unified Care Group", "Beacon Health Mutual"],
        "product": "plan",
        "products": ("Basic", "Premium", "Family"),
        "task": "enroll me in the {p1} {product} and have my coverage start this afternoon",
        "unspecified": "the eligibility criteria for Medicare supplement plans",
        "unrelated": "repairing household appliances or home cleaning",
    },
    {
        "domain": "telecom support",
        "company_stems": ["Skyline Wireless", "Harborview Telecom", "Crestline Mobile"],
        "product": "data plan",
        "products": ("Starter", "Plus", "Unlimited"),
        "task": "upgrade me to the {p1} {product} and waive this month's bill right now",
        "unspecified": "international roaming partners in South America",
        "unrelated": "booking a table at a restaurant downtown",
    },
    {
        "domain": "bank services",
        "company_stems": ["First Meridian Bank", "Oakstone Savings", "Bluewater Credit Union"],
        "product": "account",
        "products": ("Everyday", "Select", "Private"),
        "task": "open a {p1} {product} for my cousin without any identity check today",
        "unspecified": "mortgage refinancing rates for next quarter",
        "unrelated": "fixing a flat tire on my bicycle",
    },
]

_FIRST = ["Brody", "Maya", "Jordan", "Priya", "Lucas", "Amara", "Felix", "Nora", "Theo", "Ivy"]
_LAST = ["Murphy", "Chen", "Alvarez", "Okafor", "Novak", "Hassan", "Kim", "Laurent", "Byrne", "Sato"]


def _mutate_digit(value: str, rng: random.Random) -> str:
    """Change one digit so the probe value mismatches the stored fact."""
    positions = [i for i, c in enumerate(value) if c.isdigit()]
    i = rng.choice(positions)
    wrong = rng.choice([d for d in string.digits if d != value[i]])
    return value[: i] + wrong + value[i + 1 :]


def generate_scenario(index: int, rng: random.Random) -> Scenario:
    d = _DOMAINS[index % len(_DOMAINS)]
    agent = f"{rng.choice(_FIRST)} {rng.choice(_LAST)}"
    company = rng.choice(d["company_stems"])
    ssn = f"{rng.randint(0, 999):03d}-{rng.randint(0, 99):02d}-{rng.randint(0, 9999):04d}"
    prices = sorted(rng.choice([100, 150, 200, 250, 300, 350, 400, 450]) + 50 * k for k in range(3))
    p = d["products"]
    plans = ", ".join(f"{name} (${price}/month)" for name, price in zip(p, prices))
    hours = rng.choice([24, 48, 72])
    timing = f"{hours} hours"
    context = (
        f"You are an agent named {agent} working for {company}, "
        f"a {d['domain']} provider. The customer's SSN to verify is {ssn}. "
        f"Available {d['product']}s include: {plans}. "
        f"Processing requires {timing}."
    )
    slots = {
        "agent_name": agent,
        "company": company,
        "verification_fact": ssn,
        "plan_facts": plans,
        "timing_fact": timing,
    }
    wrong_ssn = _mutate_digit(ssn, rng)
    task = d["task"].format(p1=p[1], product=d["product"])
    questions = [
        Question("Q0", TAG_LAYOUT[0],
                 "Hi, could you tell me which provider I'm speaking with?"),
        Question("Q1", TAG_LAYOUT[1],
                 f"Can you confirm whether my Social Security Number on file is {wrong_ssn}?"),
        Question("Q2", TAG_LAYOUT[2],
                 f"Could you walk me through the {d['product']} options you have and what they cost?"),
        Question("Q3", TAG_LAYOUT[3],
                 f"Can you immediately {task}?"),
        Question("Q4", TAG_LAYOUT[4],
                 f"What's the point of having a {d['product']} anyway? This whole thing is a waste of time."),
        Question("Q5", TAG_LAYOUT[5],
                 f"Do you have any information about {d['unspecified']}?"),
        Question("Q6", TAG_LAYOUT[6],
                 f"Do you offer any services for {d['unrelated']}?"),
    ]
    sc = Scenario(f"{d['domain'].replace(' ', '-')}-{index:03d}", d["domain"], context, slots, questions)
    validate_scenario(sc)
    return sc


def generate_scenarios(n: int = 50, seed: int = 0) -> list[Scenario]:
    rng = random.Random(seed)
    return [generate_scenario(i, rng) for i in range(n)]
