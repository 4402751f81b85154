"""Evaluator agent: rubric scoring of conversation rounds and refinement feedback."""
from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

from .backends import ChatBackend, ChatBackendError

if TYPE_CHECKING:  # pragma: no cover - typing only, avoids a circular import
    from .agents import Conversation
    from .scheduler import ScenarioContext

logger = logging.getLogger(__name__)

DEFAULT_JUDGE_TEMPERATURE = 0.2

_JSON_BLOCK_RE = re.compile(r"\{.*\}", re.DOTALL)

_SYSTEM_PROMPT = (
    "You are a strict, fair evaluator of short multi-speaker chat rounds. "
    "You always answer with a single strict JSON object and nothing else."
)

_REASK = (
    "Your previous answer could not be parsed. Respond again with ONLY the "
    "strict JSON object described above, no prose, no code fences."
)


@dataclass(frozen=True)
class RubricDimension:
    key: str
    description: str


@dataclass(frozen=True)
class Rubric:
    dimensions: tuple[RubricDimension, ...]
    scale_max: int = 10

    def __post_init__(self) -> None:
        if not 1 <= len(self.dimensions) <= 10:
            raise ValueError(f"rubric needs 1..10 dimensions, got {len(self.dimensions)}")
        keys = [d.key for d in self.dimensions]
        if len(set(keys)) != len(keys):
            raise ValueError(f"rubric keys must be unique: {keys}")

    @property
    def keys(self) -> list[str]:
        return [d.key for d in self.dimensions]


RUBRIC_PRESETS: dict[str, Rubric] = {
    # the broader quality axes the overall framework advertises
    "framework": Rubric(
        dimensions=(
            RubricDimension("relevance", "the chatter is about what is actually happening in the match"),
            RubricDimension("authenticity", "reads like real fans who know the sport, not a press release"),
            RubricDimension("engagement", "fun to listen to and worth interrupting the match audio for"),
            RubricDimension("diversity", "the speakers bring different angles instead of echoing each other"),
            RubricDimension("personality_consistency", "each speaker stays recognizably in character"),
        )
    ),
    # the axes the running system scores on; default preset
    "implementation": Rubric(
        dimensions=(
            RubricDimension("relevance", "tied to the triggering game event and the scenario at hand"),
            RubricDimension("emotional_appropriateness", "the emotional pitch matches how big the moment is"),
            RubricDimension("personality_consistency", "each speaker stays true to their assigned role"),
            RubricDimension("conversation_flow", "the messages read as a natural back-and-forth"),
            RubricDimension("engagement_quality", "entertaining and engaging overall"),
        )
    ),
}

DEFAULT_RUBRIC_PRESET = "implementation"


@dataclass(frozen=True)
class EvaluationReport:
    conv_id: str
    round_index: int
    scores: dict[str, float]
    feedback: str
    overall: float
    judged_by: str  # "live" | "scripted" | "skipped"


@dataclass
class JudgeHandle:
    rubric: Rubric
    backend: ChatBackend
    temperature: float = DEFAULT_JUDGE_TEMPERATURE


def judge_prompt(conv: "Conversation", round_index: int, scenario: "ScenarioContext", rubric: Rubric) -> str:
    """Deterministic evaluation prompt for one round of a conversation."""
    round_turns = [t for t in conv.turns if t.round_index == round_index]
    if not round_turns:
        raise ValueError(f"round {round_index} of {conv.conv_id} has no turns to judge")
    fields = ", ".join(f'"{d.key}": <number 0-{rubric.scale_max}>' for d in rubric.dimensions)
    lines = [
        "Evaluate one round of chatter between AI sports fans watching a match.",
        f"Scenario: {scenario.kind} ({scenario.intensity} emotional intensity).",
        f"Round {round_index} messages:",
        *(f"- {t.agent_id}: {t.text}" for t in round_turns),
        f"Score each dimension from 0 to {rubric.scale_max}:",
        *(f"- {d.key}: {d.description}" for d in rubric.dimensions),
        "Respond with ONLY a strict JSON object of the form "
        f'{{{fields}, "feedback": "<one or two concrete sentences>"}}.',
    ]
    return "\n".join(lines)


def _parse_report(raw: str, rubric: Rubric) -> tuple[dict[str, float], str] | None:
    """Strict-JSON parse of a judge completion; None when it cannot be used."""
    body: Any = None
    try:
        body = json.loads(raw)
    except json.JSONDecodeError:
        match = _JSON_BLOCK_RE.search(raw)
        if match:
            try:
                body = json.loads(match.group(0))
            except json.JSONDecodeError:
                return None
    if not isinstance(body, dict):
        return None
    scores: dict[str, float] = {}
    for dim in rubric.dimensions:
        value = body.get(dim.key)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return None
        scores[dim.key] = float(value)
    return scores, str(body.get("feedback", ""))


def evaluate(
    conv: "Conversation",
    round_index: int,
    scenario: "ScenarioContext",
    handle: JudgeHandle,
    seed: int | None = None,
) -> EvaluationReport:
    """Score one round; degrades to a skipped report instead of aborting.

    Issues one completion with a strict-JSON instruction, re-asks once on a
    parse failure, clamps out-of-range scores, and appends the report to the
    conversation. Turns are never mutated.
    """
    prompt = judge_prompt(conv, round_index, scenario, handle.rubric)
    meta = {
        "judge": True,
        "conv_id": conv.conv_id,
        "round_index": round_index,
        "scenario_kind": scenario.kind,
        "rubric_keys": handle.rubric.keys,
        "scale_max": handle.rubric.scale_max,
    }
    messages: list[dict[str, str]] = [{"role": "user", "content": prompt}]
    report: EvaluationReport | None = None
    for _attempt in range(2):  # one try + one re-ask
        try:
            raw = handle.backend.complete(
                _SYSTEM_PROMPT, messages, handle.temperature, seed=seed, meta=meta
            )
        except ChatBackendError as exc:
            logger.warning("judge backend failed for %s round %d: %s", conv.conv_id, round_index, exc)
            break
        parsed = _parse_report(raw, handle.rubric)
        if parsed is not None:
            scores, feedback = parsed
            clamped: dict[str, float] = {}
            for key in handle.rubric.keys:
                value = scores[key]
                if not 0.0 <= value <= handle.rubric.scale_max:
                    logger.warning(
                        "judge score %s=%g for %s round %d clamped into [0, %d]",
                        key, value, conv.conv_id, round_index, handle.rubric.scale_max,
                    )
                    value = min(max(value, 0.0), float(handle.rubric.scale_max))
                clamped[key] = value
            overall = sum(clamped.values()) / len(clamped)
            report = EvaluationReport(
                conv_id=conv.conv_id,
                round_index=round_index,
                scores=clamped,
                feedback=feedback,
                overall=overall,
                judged_by=getattr(handle.backend, "kind", "live"),
            )
            break
        logger.warning("unparseable judge output for %s round %d, re-asking", conv.conv_id, round_index)
        messages = messages + [
            {"role": "assistant", "content": raw},
            {"role": "user", "content": _REASK},
        ]
    if report is None:
        report = EvaluationReport(
            conv_id=conv.conv_id,
            round_index=round_index,
            scores={},
            feedback="",
            overall=0.0,
            judged_by="skipped",
        )
    conv.reports.append(report)
    return report


def refine_feedback(report: EvaluationReport, rubric: Rubric) -> str:
    """Deterministic refinement note: the two weakest dimensions plus the critique.

    Ties break by rubric order. Bounded to 600 characters. Must not be called
    on a skipped report.
    """
    if report.judged_by == "skipped":
        raise ValueError("cannot build refinement feedback from a skipped report")
    ranked = sorted(rubric.dimensions, key=lambda d: report.scores[d.key])  # stable: ties keep rubric order
    parts = [
        f"{i}) {d.key} (scored {report.scores[d.key]:g}/{rubric.scale_max}): {d.description}."
        for i, d in enumerate(ranked[:2], start=1)
    ]
    text = "Focus this round on the weakest areas. " + " ".join(parts)
    if report.feedback:
        text += f" Evaluator notes: {report.feedback}"
    return text[:600]
