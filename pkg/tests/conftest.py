"""Shared builders for the test suite."""
from __future__ import annotations

import pytest

from companioncast.config import EngineConfig
from companioncast.scheduler import ScenarioContext
from companioncast.timeline import CaptionEvent, KeyMoment, ReplaySegment, TimelineDoc


def make_doc(captions=(), key_moments=(), replays=(), duration_s=300.0,
             video_id="match", home="Home FC", away="Away United") -> TimelineDoc:
    return TimelineDoc(
        video_id=video_id,
        duration_s=duration_s,
        home_team=home,
        away_team=away,
        captions=tuple(sorted(captions, key=lambda c: c.t)),
        key_moments=tuple(sorted(key_moments, key=lambda m: m.t)),
        replays=tuple(sorted(replays, key=lambda r: r.start)),
    )


def make_scenario(kind="goal", intensity="high", rounds_total=3,
                  max_messages_per_round=3, directive="React to the moment.") -> ScenarioContext:
    return ScenarioContext(
        kind=kind,
        intensity=intensity,
        rounds_total=rounds_total,
        max_messages_per_round=max_messages_per_round,
        directive=directive,
    )


@pytest.fixture
def goal_doc() -> TimelineDoc:
    return make_doc(
        captions=[
            CaptionEvent(40.0, "Midfield battle, no space for either side."),
            CaptionEvent(83.0, "The cross comes in low."),
            CaptionEvent(100.0, "GOAL for the hosts!", important=True),
        ],
        key_moments=[KeyMoment(100.0, "goal", "home", "opener")],
        replays=[ReplaySegment(140.0, 152.0, links_to=100.0)],
    )


@pytest.fixture
def config() -> EngineConfig:
    return EngineConfig()
