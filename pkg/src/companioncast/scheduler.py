"""Conversation triggering: scenario classification and separation timing.

Key moments and replay starts become trigger candidates; each is classified
into a scenario (kind, emotional intensity, round budget) and then passes
through the minimum-separation gate. User messages always fire and never
touch the separation clock.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Union

from .timeline import KeyMoment, ReplaySegment, TimelineDoc

logger = logging.getLogger(__name__)

INTENSITIES = ("high", "medium", "low")

SCENARIO_KINDS = (
    "goal",
    "penalty",
    "foul",
    "corner",
    "substitution",
    "replay",
    "user_initiated",
    "other",
)

# kind -> emotional intensity; overridable via SchedulerConfig.intensity_map
DEFAULT_INTENSITY_MAP: Mapping[str, str] = {
    "goal": "high",
    "penalty": "high",
    "foul": "medium",
    "corner": "medium",
    "replay": "medium",
    "substitution": "low",
    "other": "low",
    "user_initiated": "low",
}

DEFAULT_DIRECTIVES: Mapping[str, str] = {
    "goal": "A goal just went in. Erupt, celebrate or despair by allegiance, and react to the finish itself.",
    "penalty": "A penalty is in play. High tension: argue the call, predict the outcome, live the pressure.",
    "foul": "A foul stopped play. Debate the challenge and the referee's decision without losing the thread of the match.",
    "corner": "A corner is coming in. Short, punchy anticipation: who attacks the ball, what could go wrong.",
    "substitution": "A substitution is happening. Weigh what the change means for the game plan.",
    "replay": "The broadcast is replaying a moment. One quick pass of reactions to what the replay shows.",
    "user_initiated": "The viewer said something. Answer them directly first, then bounce off each other.",
    "other": "Something notable happened. React in character and keep the conversation moving.",
}


class SchedulerOrderingError(RuntimeError):
    """Auto-trigger candidates were presented out of time order (caller bug)."""


@dataclass(frozen=True)
class UserMessage:
    text: str
    t_video: float = 0.0


@dataclass(frozen=True)
class ScenarioContext:
    kind: str
    intensity: str
    rounds_total: int
    max_messages_per_round: int
    directive: str


@dataclass(frozen=True)
class TriggerDecision:
    fire: bool
    trigger_t: float
    scenario: ScenarioContext
    suppressed_reason: str | None = None  # "too_close" | "overlapping_conversation"


@dataclass
class SchedulerState:
    last_fired_t: float | None = None
    conversation_active: bool = False
    # internal bookkeeping for the nondecreasing-candidate precondition
    last_candidate_t: float | None = None


def _default_separation() -> dict[str, float]:
    return {"high": 15.0, "default": 30.0}


def _default_rounds() -> dict[str, int]:
    return {"key_moment": 3, "replay": 1, "user": 2}


@dataclass(frozen=True)
class SchedulerConfig:
    separation_s: Mapping[str, float] = field(default_factory=_default_separation)
    rounds: Mapping[str, int] = field(default_factory=_default_rounds)
    max_messages_per_round: int = 3
    intensity_map: Mapping[str, str] = field(default_factory=lambda: dict(DEFAULT_INTENSITY_MAP))
    directives: Mapping[str, str] = field(default_factory=lambda: dict(DEFAULT_DIRECTIVES))


DEFAULT_SCHEDULER_CONFIG = SchedulerConfig()

TriggerSource = Union[KeyMoment, ReplaySegment, UserMessage]


def classify_scenario(source: TriggerSource, config: SchedulerConfig = DEFAULT_SCHEDULER_CONFIG) -> ScenarioContext:
    """Map a trigger source onto its scenario (kind, intensity, round budget)."""
    if isinstance(source, KeyMoment):
        kind = source.kind
        rounds_total = int(config.rounds["key_moment"])
    elif isinstance(source, ReplaySegment):
        kind = "replay"
        rounds_total = int(config.rounds["replay"])
    elif isinstance(source, UserMessage):
        kind = "user_initiated"
        rounds_total = int(config.rounds["user"])
    else:
        raise TypeError(f"unsupported trigger source: {type(source).__name__}")
    intensity = config.intensity_map.get(kind, "low")
    directive = config.directives.get(kind, DEFAULT_DIRECTIVES["other"])
    return ScenarioContext(
        kind=kind,
        intensity=intensity,
        rounds_total=rounds_total,
        max_messages_per_round=int(config.max_messages_per_round),
        directive=directive,
    )


def min_separation(intensity: str, config: SchedulerConfig = DEFAULT_SCHEDULER_CONFIG) -> float:
    """Minimum video-time gap before the next auto trigger may fire."""
    if intensity == "high":
        return float(config.separation_s.get("high", 15.0))
    return float(config.separation_s.get("default", 30.0))


def next_trigger(
    state: SchedulerState,
    candidate_t: float,
    scenario: ScenarioContext,
    config: SchedulerConfig = DEFAULT_SCHEDULER_CONFIG,
) -> TriggerDecision:
    """Decide whether one candidate fires, updating separation state on fire.

    User-initiated scenarios always fire and leave the separation clock
    untouched. Auto candidates must arrive in nondecreasing time order; the
    separation threshold applied is the incoming scenario's intensity.
    """
    if scenario.kind == "user_initiated":
        return TriggerDecision(fire=True, trigger_t=candidate_t, scenario=scenario)

    if state.last_candidate_t is not None and candidate_t < state.last_candidate_t:
        raise SchedulerOrderingError(
            f"auto candidate at t={candidate_t:g} after candidate at t={state.last_candidate_t:g}"
        )
    state.last_candidate_t = candidate_t

    if state.conversation_active:
        return TriggerDecision(
            fire=False,
            trigger_t=candidate_t,
            scenario=scenario,
            suppressed_reason="overlapping_conversation",
        )
    gap = min_separation(scenario.intensity, config)
    if state.last_fired_t is not None and candidate_t - state.last_fired_t < gap:
        return TriggerDecision(
            fire=False,
            trigger_t=candidate_t,
            scenario=scenario,
            suppressed_reason="too_close",
        )
    state.last_fired_t = candidate_t
    return TriggerDecision(fire=True, trigger_t=candidate_t, scenario=scenario)


def trigger_candidates(doc: TimelineDoc) -> list[tuple[float, TriggerSource]]:
    """Merged, time-ordered stream of key moments and replay starts.

    At equal times key moments come before replays (stable, deterministic).
    """
    merged = [(m.t, 0, i, m) for i, m in enumerate(doc.key_moments)]
    merged += [(r.start, 1, i, r) for i, r in enumerate(doc.replays)]
    merged.sort(key=lambda item: (item[0], item[1], item[2]))
    return [(t, source) for t, _, _, source in merged]


def plan_timeline(doc: TimelineDoc, config: SchedulerConfig = DEFAULT_SCHEDULER_CONFIG) -> list[TriggerDecision]:
    """Offline batch plan: one TriggerDecision per candidate, in time order.

    Pure function of (doc, config); used by the CLI and as the reference for
    what a live session fires while playing straight through.
    """
    state = SchedulerState()
    decisions = []
    for t, source in trigger_candidates(doc):
        scenario = classify_scenario(source, config)
        decisions.append(next_trigger(state, t, scenario, config))
    return decisions
