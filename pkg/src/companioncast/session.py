"""Live sessions: clock-driven trigger orchestration and the event log.

The client's video element is the clock master. Each clock report advances a
forward-only watermark; key moments and replay starts crossed by the
watermark are classified, gated by the separation rules, and (when they
fire) run through the full agents -> judge -> staging pipeline. Everything
externally visible lands on the session's append-only event log, which is
also exactly what the realtime stream sends.

A session is owned by a single logical executor: calls into one SessionEngine
must be serialized (the service does this per websocket, the CLI is
sequential). Backends are shared and must be concurrency-safe across
sessions.
"""
from __future__ import annotations

import base64
import logging
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .agents import AgentPersona, Conversation, ConversationRunner
from .backends import ChatBackend
from .config import EngineConfig
from .events import SessionEvent, SessionEventLog
from .judge import JudgeHandle
from .scheduler import (
    SchedulerState,
    TriggerDecision,
    UserMessage,
    classify_scenario,
    next_trigger,
    trigger_candidates,
)
from .staging import PlaybackPlan, TTSBackend, stage_conversation
from .timeline import TimelineDoc

logger = logging.getLogger(__name__)

PHASES = ("idle", "conversing", "staging")


class SessionNotFoundError(KeyError):
    """No session with that id."""


@dataclass
class SessionState:
    session_id: str
    timeline: TimelineDoc
    supported_team: str
    roster: list[AgentPersona]
    scheduler: SchedulerState = field(default_factory=SchedulerState)
    clock_t: float = 0.0
    phase: str = "idle"
    pending_user_msgs: deque = field(default_factory=deque)


class SessionEngine:
    """One viewing session: state, event log, and the conversation pipeline."""

    def __init__(
        self,
        session_id: str,
        doc: TimelineDoc,
        config: EngineConfig,
        supported_team: str,
        chat_backend: ChatBackend,
        judge_backend: ChatBackend,
        tts_backend: TTSBackend,
        log_path: Path | None = None,
        now: Callable[[], float] = time.time,
        seed: int | None = None,
    ):
        if supported_team not in ("home", "away"):
            raise ValueError(f"supported_team must be home or away, got {supported_team!r}")
        self.config = config
        self.state = SessionState(
            session_id=session_id,
            timeline=doc,
            supported_team=supported_team,
            roster=list(config.roster),
        )
        self.tts = tts_backend
        self.judge = JudgeHandle(rubric=config.rubric, backend=judge_backend, temperature=config.judge_temperature)
        self.runner = ConversationRunner(
            doc=doc,
            roster=self.state.roster,
            backend=chat_backend,
            judge=self.judge,
            supported_team=supported_team,
            context_width_s=config.context_width_s,
            max_turn_chars=config.max_turn_chars,
            seed=seed,
            early_accept_overall=config.early_accept_overall,
        )
        self.conversations: list[Conversation] = []
        self.plans: list[PlaybackPlan] = []
        self.blobs: dict[str, bytes] = {}
        self.log = SessionEventLog(path=log_path, now=now)
        self._candidates = trigger_candidates(doc)
        self._watermark: float | None = None
        self._conv_counter = 0
        self.log.append(
            "session_created",
            {
                "session_id": session_id,
                "timeline_id": doc.video_id,
                "supported_team": supported_team,
                "roster": [p.id for p in self.state.roster],
            },
        )

    # ------------------------------------------------------------------ clock

    def on_clock(self, video_t: float) -> list[SessionEvent]:
        """Handle one client clock report; returns the newly emitted events.

        Forward motion past the watermark fires crossed triggers in time
        order. Backward seeks are logged and never re-fire anything.
        """
        emitted: list[SessionEvent] = []
        clamped = min(max(video_t, 0.0), self.state.timeline.duration_s)
        if clamped != video_t:
            logger.info("session %s: clock %g clamped to %g", self.state.session_id, video_t, clamped)
        if clamped < self.state.clock_t:
            logger.info(
                "session %s: clock regressed %g -> %g (seek)",
                self.state.session_id, self.state.clock_t, clamped,
            )
        self.state.clock_t = clamped
        emitted.append(self.log.append("clock_sync", {"video_t": clamped}))

        prev = self._watermark
        if prev is None or clamped > prev:
            for t, source in self._candidates:
                if t > clamped:
                    break
                if prev is not None and t <= prev:
                    continue
                scenario = classify_scenario(source, self.config.scheduler)
                decision = next_trigger(self.state.scheduler, t, scenario, self.config.scheduler)
                if decision.fire:
                    self._run_pipeline(decision, None, emitted)
                else:
                    logger.info(
                        "session %s: %s at t=%g suppressed (%s)",
                        self.state.session_id, scenario.kind, t, decision.suppressed_reason,
                    )
            self._watermark = clamped
        self._drain_pending(emitted)
        return emitted

    # ---------------------------------------------------------- user messages

    def on_user_message(self, text: str) -> list[SessionEvent]:
        """Handle viewer chat input; starts or queues a user conversation."""
        if not text or not text.strip():
            raise ValueError("user message must not be empty")
        text = text.strip()
        emitted: list[SessionEvent] = [self.log.append("user_message", {"text": text})]
        if self.state.phase != "idle":
            self.state.pending_user_msgs.append(text)
            logger.info("session %s: user message queued during %s", self.state.session_id, self.state.phase)
            return emitted
        self._start_user_conversation(text, emitted)
        self._drain_pending(emitted)
        return emitted

    def _start_user_conversation(self, text: str, emitted: list[SessionEvent]) -> None:
        source = UserMessage(text=text, t_video=self.state.clock_t)
        scenario = classify_scenario(source, self.config.scheduler)
        decision = next_trigger(self.state.scheduler, self.state.clock_t, scenario, self.config.scheduler)
        self._run_pipeline(decision, text, emitted)

    def _drain_pending(self, emitted: list[SessionEvent]) -> None:
        while self.state.pending_user_msgs and self.state.phase == "idle":
            self._start_user_conversation(self.state.pending_user_msgs.popleft(), emitted)

    # -------------------------------------------------------------- pipeline

    def _run_pipeline(self, decision: TriggerDecision, user_text: str | None,
                      emitted: list[SessionEvent]) -> None:
        self.state.phase = "conversing"
        self.state.scheduler.conversation_active = True
        conv_id = f"conv-{self._conv_counter:04d}"
        self._conv_counter += 1
        scenario = decision.scenario
        emitted.append(
            self.log.append(
                "conversation_started",
                {
                    "conv_id": conv_id,
                    "trigger_t": decision.trigger_t,
                    "scenario": {
                        "kind": scenario.kind,
                        "intensity": scenario.intensity,
                        "rounds_total": scenario.rounds_total,
                        "max_messages_per_round": scenario.max_messages_per_round,
                    },
                },
            )
        )
        try:
            conv = self.runner.run_conversation(decision, conv_id=conv_id, user_text=user_text)
            if conv.error:
                emitted.append(self.log.append("error", {"conv_id": conv_id, "message": conv.error}))
            self.state.phase = "staging"
            plan = stage_conversation(conv, self.state.roster, self.tts, gap_s=self.config.inter_turn_gap_s)
            self._emit_presentation(conv, plan, emitted)
            self.conversations.append(conv)
            self.plans.append(plan)
        finally:
            self.state.phase = "idle"
            self.state.scheduler.conversation_active = False

    def _emit_presentation(self, conv: Conversation, plan: PlaybackPlan,
                           emitted: list[SessionEvent]) -> None:
        """Present one finished conversation: turns, duck pair, reports, end."""
        staged = {item.turn.seq: item for item in plan.items}
        cues = {item.cue.agent_id: item.cue for item in plan.items}
        for turn in conv.turns:
            item = staged.get(turn.seq)
            audio_b64 = None
            audio_ref = None
            start_offset = None
            duration = None
            if item is not None:
                start_offset = item.start_offset_s
                if item.clip is not None:
                    duration = item.clip.duration_s
                    if len(item.clip.data) > self.config.inline_audio_limit_bytes:
                        blob_id = f"{conv.conv_id}-t{turn.seq}.wav"
                        self.blobs[blob_id] = item.clip.data
                        audio_ref = f"blobs/{blob_id}"
                    else:
                        audio_b64 = base64.b64encode(item.clip.data).decode("ascii")
            cue = cues.get(turn.agent_id)
            emitted.append(
                self.log.append(
                    "agent_turn",
                    {
                        "conv_id": conv.conv_id,
                        "agent_id": turn.agent_id,
                        "text": turn.text,
                        "round_index": turn.round_index,
                        "turn_seq": turn.seq,
                        "t_video": turn.t_video,
                        "presented": item is not None,
                        "audio_b64": audio_b64,
                        "audio_ref": audio_ref,
                        "start_offset_s": start_offset,
                        "duration_s": duration,
                        "cue": (
                            {"azimuth_deg": cue.azimuth_deg, "gain": cue.gain} if cue is not None else None
                        ),
                    },
                )
            )
        if plan.duck_on_at is not None:
            emitted.append(self.log.append("duck_on", {"conv_id": conv.conv_id, "at_offset_s": plan.duck_on_at}))
            emitted.append(self.log.append("duck_off", {"conv_id": conv.conv_id, "at_offset_s": plan.duck_off_at}))
        for report in conv.reports:
            emitted.append(
                self.log.append(
                    "evaluation_report",
                    {
                        "conv_id": report.conv_id,
                        "round_index": report.round_index,
                        "scores": dict(report.scores),
                        "overall": report.overall,
                        "feedback": report.feedback,
                        "judged_by": report.judged_by,
                    },
                )
            )
        scored = [r for r in conv.reports if r.judged_by != "skipped"]
        emitted.append(
            self.log.append(
                "conversation_ended",
                {
                    "conv_id": conv.conv_id,
                    "rounds_executed": (conv.last_round_index() + 1) if conv.turns else 0,
                    "turns_total": len(conv.turns),
                    "final_overall": scored[-1].overall if scored else None,
                },
            )
        )

    # ------------------------------------------------------------- transcript

    def transcript_events(self) -> list[SessionEvent]:
        """Full event log, seq-ordered."""
        return self.log.events

    def transcript_jsonl(self) -> str:
        return self.log.to_jsonl()

    def close(self) -> None:
        self.log.close()


class SessionManager:
    """In-memory registry of timelines and sessions behind the service API."""

    def __init__(self, config: EngineConfig, data_dir: Path | None = None):
        self.config = config
        self.data_dir = Path(data_dir) if data_dir is not None else None
        self.timelines: dict[str, TimelineDoc] = {}
        self.engines: dict[str, SessionEngine] = {}
        # shared, concurrency-safe across sessions
        self.chat_backend = config.build_chat_backend()
        self.judge_backend = config.build_judge_backend()
        self.tts_backend = config.build_tts_backend()

    def add_timeline(self, doc: TimelineDoc) -> str:
        if doc.video_id in self.timelines:
            logger.info("timeline %s replaced", doc.video_id)
        self.timelines[doc.video_id] = doc
        return doc.video_id

    def create_session(self, timeline_id: str, supported_team: str, session_id: str,
                       seed: int | None = None) -> SessionEngine:
        doc = self.timelines.get(timeline_id)
        if doc is None:
            raise SessionNotFoundError(f"unknown timeline {timeline_id!r}")
        log_path = None
        if self.data_dir is not None:
            log_path = self.data_dir / "sessions" / f"{session_id}.jsonl"
        engine = SessionEngine(
            session_id=session_id,
            doc=doc,
            config=self.config,
            supported_team=supported_team,
            chat_backend=self.chat_backend,
            judge_backend=self.judge_backend,
            tts_backend=self.tts_backend,
            log_path=log_path,
            seed=seed,
        )
        self.engines[session_id] = engine
        return engine

    def get(self, session_id: str) -> SessionEngine:
        engine = self.engines.get(session_id)
        if engine is None:
            raise SessionNotFoundError(f"unknown session {session_id!r}")
        return engine
