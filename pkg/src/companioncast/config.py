"""Engine configuration: one JSON file for personas, scheduler, judge, and backends.

Secrets never live in the file; live backends read CC_CHAT_KEY / CC_TTS_URL /
CC_TTS_KEY from the environment. Every section is optional and falls back to
the defaults the system was validated with.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .agents import AgentPersona, MAX_TURN_CHARS
from .backends import ChatBackend, HttpChatBackend, ScriptedChatBackend, ScriptedJudgeBackend
from .judge import DEFAULT_JUDGE_TEMPERATURE, DEFAULT_RUBRIC_PRESET, RUBRIC_PRESETS, Rubric
from .scheduler import SchedulerConfig
from .staging import (
    DEFAULT_GAP_S,
    DEFAULT_SAMPLE_RATE_HZ,
    HttpTTSBackend,
    MockTTSBackend,
    TTSBackend,
    validate_roster,
)
from .timeline import DEFAULT_WINDOW_S

logger = logging.getLogger(__name__)

INLINE_AUDIO_LIMIT_BYTES = 512 * 1024
DEFAULT_CLOCK_STEP_S = 0.5


class ConfigError(ValueError):
    """The engine config file is invalid."""


def default_roster() -> list[AgentPersona]:
    return [
        AgentPersona(
            id="diehard",
            role_kind="diehard",
            allegiance="user_team",
            style_prompt="An enthusiastic supporter: loud, emotional, celebrates every touch and suffers every miss.",
            voice_profile_id="voice-diehard",
        ),
        AgentPersona(
            id="analyst",
            role_kind="analyst",
            allegiance="user_team",
            style_prompt="A tactical analyst: calm, precise, reads shape and pressing patterns, backs claims with what just happened.",
            voice_profile_id="voice-analyst",
        ),
        AgentPersona(
            id="comedian",
            role_kind="comedian",
            allegiance="opponent_team",
            style_prompt="A sarcastic rival fan: playful needling, quick one-liners, enjoys the hosts' misery a little too much.",
            voice_profile_id="voice-comedian",
        ),
    ]


@dataclass
class EngineConfig:
    roster: list[AgentPersona] = field(default_factory=default_roster)
    scheduler: SchedulerConfig = field(default_factory=SchedulerConfig)
    rubric: Rubric = field(default_factory=lambda: RUBRIC_PRESETS[DEFAULT_RUBRIC_PRESET])
    judge_temperature: float = DEFAULT_JUDGE_TEMPERATURE
    early_accept_overall: float | None = None  # disabled by default
    max_turn_chars: int = MAX_TURN_CHARS
    context_width_s: float = DEFAULT_WINDOW_S
    inter_turn_gap_s: float = DEFAULT_GAP_S
    tts_sample_rate_hz: int = DEFAULT_SAMPLE_RATE_HZ
    inline_audio_limit_bytes: int = INLINE_AUDIO_LIMIT_BYTES
    clock_step_s: float = DEFAULT_CLOCK_STEP_S
    backends: dict[str, Any] = field(default_factory=dict)
    base_dir: Path = field(default_factory=Path.cwd)

    def __post_init__(self) -> None:
        validate_roster(self.roster)

    def build_chat_backend(self) -> ChatBackend:
        return _build_chat(self.backends.get("chat", {"kind": "scripted"}), self.base_dir)

    def build_judge_backend(self) -> ChatBackend:
        return _build_judge(self.backends.get("judge", {"kind": "scripted"}))

    def build_tts_backend(self) -> TTSBackend:
        return _build_tts(self.backends.get("tts", {"kind": "mock"}), self.tts_sample_rate_hz)


def _build_chat(options: Mapping[str, Any], base_dir: Path) -> ChatBackend:
    kind = options.get("kind", "scripted")
    if kind == "scripted":
        script_path = options.get("script_path")
        if script_path:
            return ScriptedChatBackend.from_file((base_dir / script_path) if not Path(script_path).is_absolute() else script_path)
        return ScriptedChatBackend(options.get("script"))
    if kind == "http":
        if "base_url" not in options:
            raise ConfigError("backends.chat: http backend needs base_url")
        return HttpChatBackend(
            base_url=options["base_url"],
            model=options.get("model", "default"),
            timeout_s=float(options.get("timeout_s", 20.0)),
            retries=int(options.get("retries", 2)),
        )
    raise ConfigError(f"backends.chat: unknown kind {kind!r}")


def _build_judge(options: Mapping[str, Any]) -> ChatBackend:
    kind = options.get("kind", "scripted")
    if kind == "scripted":
        return ScriptedJudgeBackend(
            base_score=float(options.get("base_score", 6.0)),
            step=float(options.get("step", 1.0)),
        )
    if kind == "http":
        if "base_url" not in options:
            raise ConfigError("backends.judge: http backend needs base_url")
        return HttpChatBackend(
            base_url=options["base_url"],
            model=options.get("model", "default"),
            timeout_s=float(options.get("timeout_s", 20.0)),
            retries=int(options.get("retries", 2)),
        )
    raise ConfigError(f"backends.judge: unknown kind {kind!r}")


def _build_tts(options: Mapping[str, Any], sample_rate_hz: int) -> TTSBackend:
    kind = options.get("kind", "mock")
    if kind == "mock":
        return MockTTSBackend(sample_rate_hz=sample_rate_hz)
    if kind == "http":
        return HttpTTSBackend(base_url=options.get("base_url"))
    raise ConfigError(f"backends.tts: unknown kind {kind!r}")


def _parse_persona(rec: Mapping[str, Any], where: str) -> AgentPersona:
    try:
        return AgentPersona(
            id=rec["id"],
            role_kind=rec["role_kind"],
            allegiance=rec["allegiance"],
            style_prompt=rec.get("style_prompt", ""),
            temperature=float(rec.get("temperature", 0.7)),
            voice_profile_id=rec.get("voice_profile_id", f"voice-{rec['id']}"),
            spatial_azimuth_deg=(
                float(rec["spatial_azimuth_deg"]) if rec.get("spatial_azimuth_deg") is not None else None
            ),
        )
    except KeyError as exc:
        raise ConfigError(f"{where}: missing field {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def load_config(path: str | Path) -> EngineConfig:
    """Load and validate the engine config file."""
    path = Path(path)
    try:
        body = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(body, dict):
        raise ConfigError(f"{path}: top level must be an object")

    known = (
        "roster", "scheduler", "judge", "agents", "staging", "backends", "clock_step_s",
    )
    unknown = sorted(set(body) - set(known))
    if unknown:
        logger.warning("%s: ignoring unknown config fields %s", path, unknown)

    cfg = EngineConfig(base_dir=path.parent.resolve())

    if "roster" in body:
        if not isinstance(body["roster"], list) or not body["roster"]:
            raise ConfigError("roster: must be a non-empty array")
        cfg.roster = [_parse_persona(rec, f"roster[{i}]") for i, rec in enumerate(body["roster"])]
        validate_roster(cfg.roster)

    sched = body.get("scheduler", {})
    if sched:
        defaults = SchedulerConfig()
        cfg.scheduler = SchedulerConfig(
            separation_s={**defaults.separation_s, **sched.get("separation_s", {})},
            rounds={**defaults.rounds, **sched.get("rounds", {})},
            max_messages_per_round=int(sched.get("max_messages_per_round", defaults.max_messages_per_round)),
            intensity_map={**defaults.intensity_map, **sched.get("intensity_map", {})},
            directives={**defaults.directives, **sched.get("directives", {})},
        )

    judge_cfg = body.get("judge", {})
    if judge_cfg:
        preset = judge_cfg.get("rubric_preset", DEFAULT_RUBRIC_PRESET)
        if preset not in RUBRIC_PRESETS:
            raise ConfigError(f"judge.rubric_preset: unknown preset {preset!r} (have {sorted(RUBRIC_PRESETS)})")
        cfg.rubric = RUBRIC_PRESETS[preset]
        cfg.judge_temperature = float(judge_cfg.get("temperature", DEFAULT_JUDGE_TEMPERATURE))
        if judge_cfg.get("early_accept_overall") is not None:
            cfg.early_accept_overall = float(judge_cfg["early_accept_overall"])

    agents_cfg = body.get("agents", {})
    if agents_cfg:
        cfg.max_turn_chars = int(agents_cfg.get("max_turn_chars", MAX_TURN_CHARS))
        cfg.context_width_s = float(agents_cfg.get("context_width_s", DEFAULT_WINDOW_S))

    staging_cfg = body.get("staging", {})
    if staging_cfg:
        cfg.inter_turn_gap_s = float(staging_cfg.get("inter_turn_gap_s", DEFAULT_GAP_S))
        cfg.tts_sample_rate_hz = int(staging_cfg.get("sample_rate_hz", DEFAULT_SAMPLE_RATE_HZ))
        cfg.inline_audio_limit_bytes = int(staging_cfg.get("inline_audio_limit_bytes", INLINE_AUDIO_LIMIT_BYTES))

    cfg.clock_step_s = float(body.get("clock_step_s", DEFAULT_CLOCK_STEP_S))
    if cfg.clock_step_s <= 0:
        raise ConfigError("clock_step_s must be positive")

    backends = body.get("backends", {})
    if not isinstance(backends, dict):
        raise ConfigError("backends: must be an object")
    cfg.backends = backends
    return cfg
