"""Agent personas, prompt assembly, and multi-round conversation execution.

A conversation runs up to scenario.rounds_total rounds. Agents speak in
fixed roster order within a round, each seeing the game context, every
earlier turn of the conversation (including the current round so far), and
the evaluator's feedback from the previous round as a shared note. Only the
final round is presented to the viewer; earlier rounds stay in the
transcript.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .backends import ChatBackend, ChatBackendError
from .judge import EvaluationReport, JudgeHandle, evaluate, refine_feedback
from .scheduler import ScenarioContext, TriggerDecision
from .timeline import DEFAULT_WINDOW_S, TimelineDoc, context_window, format_context, score_at

logger = logging.getLogger(__name__)

ROLE_KINDS = ("diehard", "analyst", "comedian")
ALLEGIANCES = ("user_team", "opponent_team", "neutral")

MAX_TURN_CHARS = 280


@dataclass(frozen=True)
class AgentPersona:
    id: str
    role_kind: str
    allegiance: str
    style_prompt: str
    temperature: float = 0.7
    voice_profile_id: str = ""
    spatial_azimuth_deg: float | None = None  # None -> role default at staging time

    def __post_init__(self) -> None:
        if self.role_kind not in ROLE_KINDS:
            raise ValueError(f"persona {self.id}: unknown role_kind {self.role_kind!r}")
        if self.allegiance not in ALLEGIANCES:
            raise ValueError(f"persona {self.id}: unknown allegiance {self.allegiance!r}")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"persona {self.id}: temperature {self.temperature:g} outside [0, 2]")
        if self.spatial_azimuth_deg is not None and not -180.0 < self.spatial_azimuth_deg <= 180.0:
            raise ValueError(
                f"persona {self.id}: azimuth {self.spatial_azimuth_deg:g} outside (-180, 180]"
            )


@dataclass(frozen=True)
class Turn:
    agent_id: str
    round_index: int
    text: str
    t_video: float
    seq: int  # global ordinal within the conversation


@dataclass
class Conversation:
    conv_id: str
    scenario: ScenarioContext
    trigger_t: float
    turns: list[Turn] = field(default_factory=list)
    reports: list[EvaluationReport] = field(default_factory=list)
    final: bool = False
    feedback_rounds: list[int] = field(default_factory=list)  # rounds that got evaluator feedback
    error: str | None = None

    def round_turns(self, round_index: int) -> list[Turn]:
        return [t for t in self.turns if t.round_index == round_index]

    def last_round_index(self) -> int | None:
        return self.turns[-1].round_index if self.turns else None


class RoundExecutionError(RuntimeError):
    """A round could not finish; carries the agent that failed."""

    def __init__(self, agent_id: str, round_index: int, cause: Exception):
        super().__init__(f"round {round_index} failed at agent {agent_id}: {cause}")
        self.agent_id = agent_id
        self.round_index = round_index


def resolve_team_side(allegiance: str, supported_team: str) -> str:
    """Resolve a persona allegiance against the viewer's supported side."""
    if supported_team not in ("home", "away"):
        raise ValueError(f"supported_team must be home or away, got {supported_team!r}")
    if allegiance == "user_team":
        return supported_team
    if allegiance == "opponent_team":
        return "away" if supported_team == "home" else "home"
    return "neutral"


def team_display(doc: TimelineDoc, side: str) -> str:
    if side == "home":
        return doc.home_team
    if side == "away":
        return doc.away_team
    return "neither side"


def truncate_turn(text: str, limit: int = MAX_TURN_CHARS) -> str:
    """Cap a turn at `limit` characters, preferring a sentence boundary."""
    text = text.strip()
    if len(text) <= limit:
        return text
    head = text[:limit]
    cut = max(head.rfind("."), head.rfind("!"), head.rfind("?"))
    if cut > 0:
        return head[: cut + 1]
    return head.rstrip()


def build_system_prompt(
    persona: AgentPersona,
    scenario: ScenarioContext,
    doc: TimelineDoc,
    supported_team: str,
    max_chars: int = MAX_TURN_CHARS,
) -> str:
    """Deterministic per-agent system prompt for one conversation."""
    side = resolve_team_side(persona.allegiance, supported_team)
    if side == "neutral":
        allegiance_line = "You take no side; you watch as a neutral."
    else:
        allegiance_line = f"You support {team_display(doc, side)}."
    lines = [
        f"You are {persona.id}, an AI fan watching {doc.home_team} vs {doc.away_team} "
        "together with the viewer and two other fans.",
        f"Character: {persona.style_prompt}",
        allegiance_line,
        f"Scenario: {scenario.kind}, {scenario.intensity} emotional intensity. {scenario.directive}",
        f"Reply with exactly one chat message of at most {max_chars} characters. "
        "No stage directions, no lists, just what you would say out loud.",
    ]
    return "\n".join(lines)


class ConversationRunner:
    """Executes conversations for one session against pluggable backends."""

    def __init__(
        self,
        doc: TimelineDoc,
        roster: list[AgentPersona],
        backend: ChatBackend,
        judge: JudgeHandle | None,
        supported_team: str,
        context_width_s: float = DEFAULT_WINDOW_S,
        max_turn_chars: int = MAX_TURN_CHARS,
        seed: int | None = None,
        early_accept_overall: float | None = None,
    ):
        if not roster:
            raise ValueError("roster must not be empty")
        self.doc = doc
        self.roster = list(roster)
        self.backend = backend
        self.judge = judge
        self.supported_team = supported_team
        self.context_width_s = context_width_s
        self.max_turn_chars = max_turn_chars
        self.seed = seed
        self.early_accept_overall = early_accept_overall

    def build_context(self, trigger_t: float, user_text: str | None = None) -> str:
        score = score_at(self.doc, trigger_t)
        window = context_window(self.doc, trigger_t, self.context_width_s)
        ctx = format_context(window, self.doc, score)
        if user_text:
            ctx = f"Viewer message: {user_text}\n\n{ctx}"
        return ctx

    def _messages(self, conv: Conversation, persona: AgentPersona, context_text: str,
                  feedback: str | None) -> list[dict[str, str]]:
        msgs = [{"role": "user", "content": context_text}]
        for turn in conv.turns:
            role = "assistant" if turn.agent_id == persona.id else "user"
            msgs.append({"role": role, "content": f"[{turn.agent_id}] {turn.text}"})
        if feedback is not None:
            # shared system-level note, identical for every agent in the round
            msgs.append({"role": "system", "content": f"Evaluator feedback on the previous round: {feedback}"})
        msgs.append({"role": "user", "content": f"Your turn, {persona.id}. One message."})
        return msgs

    def run_round(self, conv: Conversation, context_text: str, feedback: str | None = None) -> list[Turn]:
        """Run the next round: up to max_messages_per_round turns in roster order.

        Raises RoundExecutionError if a backend call fails; turns produced
        before the failure are kept and the conversation is marked.
        """
        if conv.final:
            raise ValueError(f"{conv.conv_id} is already final")
        last = conv.last_round_index()
        round_index = 0 if last is None else last + 1
        if round_index >= conv.scenario.rounds_total:
            raise ValueError(f"{conv.conv_id}: round budget ({conv.scenario.rounds_total}) exhausted")
        if feedback is not None:
            conv.feedback_rounds.append(round_index)

        score = score_at(self.doc, conv.trigger_t)
        new_turns: list[Turn] = []
        for persona in self.roster[: conv.scenario.max_messages_per_round]:
            system_prompt = build_system_prompt(
                persona, conv.scenario, self.doc, self.supported_team, self.max_turn_chars
            )
            meta = {
                "agent_id": persona.id,
                "round_index": round_index,
                "scenario_kind": conv.scenario.kind,
                "score": f"{score.home}-{score.away}",
                "team": team_display(self.doc, resolve_team_side(persona.allegiance, self.supported_team)),
                "conv_id": conv.conv_id,
            }
            try:
                raw = self.backend.complete(
                    system_prompt,
                    self._messages(conv, persona, context_text, feedback),
                    persona.temperature,
                    seed=self.seed,
                    meta=meta,
                )
            except ChatBackendError as exc:
                conv.error = f"round {round_index} failed at agent {persona.id}"
                raise RoundExecutionError(persona.id, round_index, exc) from exc
            text = truncate_turn(raw, self.max_turn_chars)
            if not text:
                conv.error = f"round {round_index} failed at agent {persona.id}"
                raise RoundExecutionError(persona.id, round_index, ValueError("empty completion"))
            turn = Turn(
                agent_id=persona.id,
                round_index=round_index,
                text=text,
                t_video=conv.trigger_t,
                seq=len(conv.turns),
            )
            conv.turns.append(turn)
            new_turns.append(turn)
        return new_turns

    def run_conversation(
        self,
        trigger: TriggerDecision,
        conv_id: str,
        user_text: str | None = None,
    ) -> Conversation:
        """Execute a full conversation for a fired trigger.

        Every round is evaluated; all but the last feed refinement feedback
        into the next round. Judge failures degrade (skipped report, no
        feedback); agent-backend failures stop the conversation but keep the
        partial transcript.
        """
        if not trigger.fire:
            raise ValueError("trigger did not fire")
        if self.judge is None:
            raise ValueError("run_conversation needs a judge handle")
        conv = Conversation(conv_id=conv_id, scenario=trigger.scenario, trigger_t=trigger.trigger_t)
        context_text = self.build_context(trigger.trigger_t, user_text)

        feedback: str | None = None
        for round_index in range(trigger.scenario.rounds_total):
            try:
                self.run_round(conv, context_text, feedback)
            except RoundExecutionError as exc:
                logger.error("%s: %s; keeping partial transcript", conv_id, exc)
                break
            report = evaluate(conv, round_index, trigger.scenario, self.judge, seed=self.seed)
            last_round = round_index == trigger.scenario.rounds_total - 1
            feedback = None
            if not last_round and report.judged_by != "skipped":
                feedback = refine_feedback(report, self.judge.rubric)
            if (
                not last_round
                and self.early_accept_overall is not None
                and report.judged_by != "skipped"
                and report.overall >= self.early_accept_overall
            ):
                logger.info("%s: early accept at round %d (overall %.2f)", conv_id, round_index, report.overall)
                break
        conv.final = True
        return conv
