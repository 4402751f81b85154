"""Voice staging: speech clips, spatial cues, and the timed playback plan.

Final-round turns become mono WAV clips played back to back with a fixed
inter-turn gap; the match audio is ducked (fully muted) from the first clip
to the end of the last one. Binaural rendering happens client-side from
(azimuth, gain), so the engine only ships cues plus mono clips.
"""
from __future__ import annotations

import io
import logging
import os
import time
import wave
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace

import httpx

from .agents import AgentPersona, Conversation, Turn

logger = logging.getLogger(__name__)

DEFAULT_GAP_S = 0.3
DEFAULT_SAMPLE_RATE_HZ = 16000

# mock speech-rate model: ~15 chars per second, never shorter than half a second
MOCK_CHARS_PER_SECOND = 15.0
MOCK_MIN_CLIP_S = 0.5

# allies beside the viewer, the rival behind
DEFAULT_AZIMUTHS = {"diehard": -60.0, "analyst": 60.0, "comedian": 180.0}

TTS_URL_ENV = "CC_TTS_URL"
TTS_KEY_ENV = "CC_TTS_KEY"


class TTSBackendError(RuntimeError):
    """Speech synthesis failed for one request."""


class RosterValidationError(ValueError):
    """The persona roster cannot be staged (duplicate ids or azimuths)."""


@dataclass(frozen=True)
class AudioClip:
    turn_seq: int
    sample_rate_hz: int
    duration_s: float
    data: bytes  # complete mono PCM16 WAV file

    def __post_init__(self) -> None:
        if not self.data:
            raise ValueError("audio clip has no data")
        if self.duration_s <= 0:
            raise ValueError(f"audio clip duration must be positive, got {self.duration_s:g}")


@dataclass(frozen=True)
class SpatialCue:
    agent_id: str
    azimuth_deg: float
    gain: float = 1.0


@dataclass(frozen=True)
class PlanItem:
    start_offset_s: float
    turn: Turn
    clip: AudioClip | None  # None -> text-only (TTS failed)
    cue: SpatialCue


@dataclass(frozen=True)
class PlaybackPlan:
    conv_id: str
    items: tuple[PlanItem, ...]
    duck_on_at: float | None  # None when the plan has no audio at all
    duck_off_at: float | None


class TTSBackend(ABC):
    kind = "live"

    @abstractmethod
    def synthesize(self, text: str, voice_profile_id: str) -> AudioClip:
        """Synthesize one clip; turn_seq is assigned by the stager."""


def _silence_wav(sample_rate_hz: int, frames: int) -> bytes:
    buf = io.BytesIO()
    with wave.open(buf, "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(sample_rate_hz)
        wf.writeframes(b"\x00\x00" * frames)
    return buf.getvalue()


class MockTTSBackend(TTSBackend):
    """Deterministic silence generator with a character-count duration model."""

    kind = "mock"

    def __init__(self, sample_rate_hz: int = DEFAULT_SAMPLE_RATE_HZ):
        self.sample_rate_hz = sample_rate_hz

    def synthesize(self, text: str, voice_profile_id: str) -> AudioClip:
        duration = max(MOCK_MIN_CLIP_S, len(text) / MOCK_CHARS_PER_SECOND)
        frames = round(duration * self.sample_rate_hz)
        return AudioClip(
            turn_seq=-1,
            sample_rate_hz=self.sample_rate_hz,
            duration_s=frames / self.sample_rate_hz,
            data=_silence_wav(self.sample_rate_hz, frames),
        )


class HttpTTSBackend(TTSBackend):
    """Live synthesis over HTTP; endpoint and key come from the environment."""

    kind = "live"

    def __init__(
        self,
        base_url: str | None = None,
        api_key: str | None = None,
        timeout_s: float = 20.0,
        retries: int = 2,
        backoff_s: float = 0.5,
        client: httpx.Client | None = None,
    ):
        self.base_url = (base_url or os.environ.get(TTS_URL_ENV, "")).rstrip("/")
        if not self.base_url:
            raise ValueError(f"no TTS endpoint configured (set {TTS_URL_ENV})")
        self.api_key = api_key if api_key is not None else os.environ.get(TTS_KEY_ENV)
        self.retries = retries
        self.backoff_s = backoff_s
        self._client = client or httpx.Client(timeout=timeout_s)

    def synthesize(self, text: str, voice_profile_id: str) -> AudioClip:
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = {"text": text, "voice": voice_profile_id}
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff_s * 2 ** (attempt - 1))
            try:
                resp = self._client.post(f"{self.base_url}/synthesize", json=payload, headers=headers)
            except httpx.TransportError as exc:
                last_error = exc
                continue
            if resp.status_code >= 500:
                last_error = TTSBackendError(f"server error {resp.status_code}")
                continue
            if resp.status_code >= 400:
                raise TTSBackendError(f"TTS backend rejected request: {resp.status_code}")
            return _clip_from_wav(resp.content)
        raise TTSBackendError(f"TTS backend failed after {self.retries} retries: {last_error}")

    def close(self) -> None:
        self._client.close()


def _clip_from_wav(data: bytes) -> AudioClip:
    try:
        with wave.open(io.BytesIO(data), "rb") as wf:
            frames = wf.getnframes()
            rate = wf.getframerate()
    except (wave.Error, EOFError) as exc:
        raise TTSBackendError(f"TTS backend returned invalid WAV: {exc}") from exc
    if frames == 0 or rate == 0:
        raise TTSBackendError("TTS backend returned an empty WAV")
    return AudioClip(turn_seq=-1, sample_rate_hz=rate, duration_s=frames / rate, data=data)


def resolve_azimuth(persona: AgentPersona) -> float:
    """Configured azimuth wins; otherwise the role default."""
    if persona.spatial_azimuth_deg is not None:
        return persona.spatial_azimuth_deg
    try:
        return DEFAULT_AZIMUTHS[persona.role_kind]
    except KeyError:
        raise RosterValidationError(
            f"persona {persona.id}: no azimuth configured and no default for role {persona.role_kind!r}"
        ) from None


def spatial_cue(persona: AgentPersona) -> SpatialCue:
    return SpatialCue(agent_id=persona.id, azimuth_deg=resolve_azimuth(persona), gain=1.0)


def validate_roster(roster: list[AgentPersona]) -> None:
    """Ids unique, resolved azimuths pairwise distinct."""
    ids = [p.id for p in roster]
    if len(set(ids)) != len(ids):
        raise RosterValidationError(f"duplicate persona ids in roster: {ids}")
    azimuths = {}
    for persona in roster:
        az = resolve_azimuth(persona)
        if az in azimuths:
            raise RosterValidationError(
                f"personas {azimuths[az]} and {persona.id} share azimuth {az:g}"
            )
        azimuths[az] = persona.id


def stage_conversation(
    conv: Conversation,
    roster: list[AgentPersona],
    tts: TTSBackend,
    gap_s: float = DEFAULT_GAP_S,
) -> PlaybackPlan:
    """Build the timed playback plan for a finished conversation.

    One clip per final-round turn in seq order, sequential with `gap_s`
    between clips. A failed synthesis degrades that turn to text-only at the
    same slot without consuming playback time; if nothing synthesizes, the
    plan carries no duck events.
    """
    if not conv.final:
        raise ValueError(f"{conv.conv_id} is not final; refusing to stage")
    validate_roster(roster)
    personas = {p.id: p for p in roster}
    cues = {p.id: spatial_cue(p) for p in roster}

    final_round = conv.last_round_index()
    items: list[PlanItem] = []
    next_start = 0.0
    last_clip_end: float | None = None
    if final_round is not None:
        for turn in conv.round_turns(final_round):
            persona = personas.get(turn.agent_id)
            if persona is None:
                raise RosterValidationError(f"turn by unknown agent {turn.agent_id!r}")
            clip: AudioClip | None
            try:
                clip = replace(tts.synthesize(turn.text, persona.voice_profile_id), turn_seq=turn.seq)
            except TTSBackendError as exc:
                logger.warning("TTS failed for %s turn %d, going text-only: %s", conv.conv_id, turn.seq, exc)
                clip = None
            items.append(PlanItem(start_offset_s=next_start, turn=turn, clip=clip, cue=cues[turn.agent_id]))
            if clip is not None:
                last_clip_end = next_start + clip.duration_s
                next_start = last_clip_end + gap_s

    return PlaybackPlan(
        conv_id=conv.conv_id,
        items=tuple(items),
        duck_on_at=0.0 if last_clip_end is not None else None,
        duck_off_at=last_clip_end,
    )
