"""companioncast: multi-agent co-viewing engine for sports video.

Role-specialized AI fan agents converse at detected key moments, every
conversation is refined through an evaluator feedback loop before it is
presented, and the result reaches the viewer as spatially-staged speech plus
on-screen text via a session API.
"""
from .agents import AgentPersona, Conversation, ConversationRunner, Turn, build_system_prompt
from .backends import ChatBackend, HttpChatBackend, ScriptedChatBackend, ScriptedJudgeBackend
from .config import EngineConfig, load_config
from .events import SessionEvent, event_to_json
from .judge import EvaluationReport, JudgeHandle, Rubric, RUBRIC_PRESETS, evaluate, refine_feedback
from .scheduler import (
    ScenarioContext,
    SchedulerConfig,
    SchedulerState,
    TriggerDecision,
    UserMessage,
    classify_scenario,
    min_separation,
    next_trigger,
    plan_timeline,
)
from .session import SessionEngine, SessionManager
from .staging import (
    AudioClip,
    MockTTSBackend,
    PlaybackPlan,
    SpatialCue,
    TTSBackend,
    spatial_cue,
    stage_conversation,
)
from .timeline import (
    CaptionEvent,
    ContextWindow,
    GameScore,
    KeyMoment,
    ReplaySegment,
    TimelineDoc,
    context_window,
    format_context,
    parse_timeline,
    score_at,
    serialize_timeline,
)

__version__ = "0.1.0"
