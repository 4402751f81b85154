"""Timeline annotation files and the rolling caption context window.

A timeline file is the normalized JSON export of one match clip: caption
lines, key moments (goals, fouls, ...) and replay segments, all on the
video-time axis. Parsed documents are immutable and safe to share across
sessions.
"""
from __future__ import annotations

import json
import logging
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Any, BinaryIO, Union

logger = logging.getLogger(__name__)

KEY_MOMENT_KINDS = ("goal", "penalty", "foul", "corner", "substitution", "other")
TEAM_SIDES = ("home", "away", "neutral")

DEFAULT_WINDOW_S = 60.0


class TimelineParseError(ValueError):
    """The document is not well-formed (bad JSON, wrong type, missing field)."""


class TimelineValidationError(ValueError):
    """The document parsed but violates a timeline invariant."""


@dataclass(frozen=True)
class CaptionEvent:
    t: float
    text: str
    important: bool = False


@dataclass(frozen=True)
class KeyMoment:
    t: float
    kind: str
    team: str
    label: str = ""


@dataclass(frozen=True)
class ReplaySegment:
    start: float
    end: float
    links_to: float | None = None


@dataclass(frozen=True)
class GameScore:
    home: int = 0
    away: int = 0


@dataclass(frozen=True)
class TimelineDoc:
    video_id: str
    duration_s: float
    home_team: str
    away_team: str
    captions: tuple[CaptionEvent, ...] = ()
    key_moments: tuple[KeyMoment, ...] = ()
    replays: tuple[ReplaySegment, ...] = ()

    def __post_init__(self) -> None:
        # caption times cached once; the doc is frozen so this never goes stale
        object.__setattr__(self, "_caption_times", tuple(c.t for c in self.captions))


@dataclass(frozen=True)
class ContextWindow:
    query_t: float
    width_s: float
    entries: tuple[CaptionEvent, ...]


def _as_number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise TimelineParseError(f"{where}: expected a number, got {type(value).__name__}")
    return float(value)


def _as_string(value: Any, where: str) -> str:
    if not isinstance(value, str):
        raise TimelineParseError(f"{where}: expected a string, got {type(value).__name__}")
    return value


def _as_object(value: Any, where: str) -> dict:
    if not isinstance(value, dict):
        raise TimelineParseError(f"{where}: expected an object, got {type(value).__name__}")
    return value


def _as_list(value: Any, where: str) -> list:
    if value is None:
        return []
    if not isinstance(value, list):
        raise TimelineParseError(f"{where}: expected an array, got {type(value).__name__}")
    return value


def _warn_unknown(obj: dict, known: tuple[str, ...], where: str) -> None:
    unknown = sorted(set(obj) - set(known))
    if unknown:
        logger.warning("%s: ignoring unknown fields %s", where, unknown)


def _check_time(t: float, duration_s: float, where: str) -> float:
    if not 0.0 <= t <= duration_s:
        raise TimelineValidationError(
            f"{where}: timestamp {t:g} outside [0, {duration_s:g}]"
        )
    return t


def parse_timeline(raw: Union[bytes, str, BinaryIO]) -> TimelineDoc:
    """Parse and validate a timeline document from bytes, text, or a file object.

    Records may arrive unsorted; they are stably re-sorted by time. Unknown
    fields are ignored with a warning, and optional fields take their
    defaults (important=false, links_to=null).
    """
    if hasattr(raw, "read"):
        raw = raw.read()  # type: ignore[union-attr]
    if isinstance(raw, bytes):
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise TimelineParseError(f"document is not valid UTF-8: {exc}") from exc
    else:
        text = raw  # type: ignore[assignment]
    try:
        body = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TimelineParseError(
            f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc

    body = _as_object(body, "top level")
    _warn_unknown(body, ("video", "captions", "key_moments", "replays"), "top level")

    video = _as_object(body.get("video"), "video")
    _warn_unknown(video, ("id", "duration_s", "home_team", "away_team"), "video")
    video_id = _as_string(video.get("id"), "video.id")
    duration_s = _as_number(video.get("duration_s"), "video.duration_s")
    if duration_s < 0:
        raise TimelineValidationError(f"video.duration_s: must be >= 0, got {duration_s:g}")
    home_team = _as_string(video.get("home_team"), "video.home_team")
    away_team = _as_string(video.get("away_team"), "video.away_team")

    captions = []
    for i, rec in enumerate(_as_list(body.get("captions"), "captions")):
        where = f"captions[{i}]"
        rec = _as_object(rec, where)
        _warn_unknown(rec, ("t", "text", "important"), where)
        t = _check_time(_as_number(rec.get("t"), f"{where}.t"), duration_s, f"{where}.t")
        cap_text = _as_string(rec.get("text"), f"{where}.text")
        if not cap_text.strip():
            raise TimelineValidationError(f"{where}.text: caption text is empty")
        important = rec.get("important", False)
        if not isinstance(important, bool):
            raise TimelineParseError(f"{where}.important: expected a boolean")
        captions.append(CaptionEvent(t=t, text=cap_text, important=important))

    key_moments = []
    for i, rec in enumerate(_as_list(body.get("key_moments"), "key_moments")):
        where = f"key_moments[{i}]"
        rec = _as_object(rec, where)
        _warn_unknown(rec, ("t", "kind", "team", "label"), where)
        t = _check_time(_as_number(rec.get("t"), f"{where}.t"), duration_s, f"{where}.t")
        kind = _as_string(rec.get("kind"), f"{where}.kind")
        if kind not in KEY_MOMENT_KINDS:
            raise TimelineValidationError(
                f"{where}.kind: {kind!r} is not one of {list(KEY_MOMENT_KINDS)}"
            )
        team = _as_string(rec.get("team"), f"{where}.team")
        if team not in TEAM_SIDES:
            raise TimelineValidationError(
                f"{where}.team: {team!r} is not one of {list(TEAM_SIDES)}"
            )
        label = _as_string(rec.get("label", ""), f"{where}.label")
        key_moments.append(KeyMoment(t=t, kind=kind, team=team, label=label))

    replays = []
    for i, rec in enumerate(_as_list(body.get("replays"), "replays")):
        where = f"replays[{i}]"
        rec = _as_object(rec, where)
        _warn_unknown(rec, ("start", "end", "links_to"), where)
        start = _check_time(_as_number(rec.get("start"), f"{where}.start"), duration_s, f"{where}.start")
        end = _check_time(_as_number(rec.get("end"), f"{where}.end"), duration_s, f"{where}.end")
        if not start < end:
            raise TimelineValidationError(
                f"{where}: start ({start:g}) must be < end ({end:g})"
            )
        links_to = rec.get("links_to")
        if links_to is not None:
            links_to = _as_number(links_to, f"{where}.links_to")
            _check_time(links_to, duration_s, f"{where}.links_to")
            if links_to > start:
                raise TimelineValidationError(
                    f"{where}.links_to: {links_to:g} must be <= start ({start:g})"
                )
        replays.append(ReplaySegment(start=start, end=end, links_to=links_to))

    # stable sorts: duplicate timestamps keep file order
    captions.sort(key=lambda c: c.t)
    key_moments.sort(key=lambda m: m.t)
    replays.sort(key=lambda r: r.start)

    return TimelineDoc(
        video_id=video_id,
        duration_s=duration_s,
        home_team=home_team,
        away_team=away_team,
        captions=tuple(captions),
        key_moments=tuple(key_moments),
        replays=tuple(replays),
    )


def serialize_timeline(doc: TimelineDoc) -> bytes:
    """Serialize a TimelineDoc back to the timeline file schema.

    ``parse_timeline(serialize_timeline(doc))`` round-trips to an equal doc.
    """
    body = {
        "video": {
            "id": doc.video_id,
            "duration_s": doc.duration_s,
            "home_team": doc.home_team,
            "away_team": doc.away_team,
        },
        "captions": [
            {"t": c.t, "text": c.text, "important": c.important} for c in doc.captions
        ],
        "key_moments": [
            {"t": m.t, "kind": m.kind, "team": m.team, "label": m.label}
            for m in doc.key_moments
        ],
        "replays": [
            {"start": r.start, "end": r.end, "links_to": r.links_to} for r in doc.replays
        ],
    }
    return json.dumps(body, ensure_ascii=False, indent=2).encode("utf-8")


def context_window(doc: TimelineDoc, query_t: float, width_s: float = DEFAULT_WINDOW_S) -> ContextWindow:
    """Captions in the closed interval [query_t - width_s, query_t], ascending.

    Out-of-range query times clamp to [0, duration_s]. Both interval ends are
    closed, so a caption at exactly query_t - width_s is included.
    """
    if width_s <= 0:
        raise ValueError(f"width_s must be positive, got {width_s:g}")
    clamped = min(max(query_t, 0.0), doc.duration_s)
    if clamped != query_t:
        logger.info("context query %g clamped to %g", query_t, clamped)
    times = doc._caption_times  # type: ignore[attr-defined]
    lo = bisect_left(times, clamped - width_s)
    hi = bisect_right(times, clamped)
    return ContextWindow(query_t=clamped, width_s=width_s, entries=doc.captions[lo:hi])


def score_at(doc: TimelineDoc, query_t: float) -> GameScore:
    """Score derived from goal moments up to and including query_t."""
    home = sum(1 for m in doc.key_moments if m.kind == "goal" and m.team == "home" and m.t <= query_t)
    away = sum(1 for m in doc.key_moments if m.kind == "goal" and m.team == "away" and m.t <= query_t)
    return GameScore(home=home, away=away)


def _mmss(t: float) -> str:
    minutes, seconds = divmod(int(t), 60)
    return f"{minutes:02d}:{seconds:02d}"


def format_context(window: ContextWindow, doc: TimelineDoc, score: GameScore) -> str:
    """Deterministic game-information block handed to the agents.

    Header lines (teams, score) followed by one "[mm:ss] text" line per
    caption in the window. Identical inputs produce identical bytes.
    """
    lines = [
        f"Match: {doc.home_team} (home) vs {doc.away_team} (away)",
        f"Score: {doc.home_team} {score.home} - {score.away} {doc.away_team}",
        f"Commentary from the last {window.width_s:g} seconds:",
    ]
    for entry in window.entries:
        lines.append(f"[{_mmss(entry.t)}] {entry.text}")
    return "\n".join(lines) + "\n"
