"""HTTP endpoints and the realtime stream protocol."""
from __future__ import annotations

import base64
import io
import json
import wave

import pytest
from fastapi.testclient import TestClient

from companioncast.config import EngineConfig
from companioncast.service import create_app

TIMELINE = {
    "video": {"id": "svc-match", "duration_s": 300.0, "home_team": "Home FC", "away_team": "Away United"},
    "captions": [
        {"t": 80.0, "text": "Chance building down the left."},
        {"t": 100.0, "text": "GOAL for the hosts!", "important": True},
    ],
    "key_moments": [{"t": 100.0, "kind": "goal", "team": "home", "label": "opener"}],
    "replays": [],
}


@pytest.fixture
def client(tmp_path):
    app = create_app(EngineConfig(), data_dir=tmp_path)
    with TestClient(app) as c:
        yield c


def make_session(client, team="home"):
    resp = client.post("/timelines", content=json.dumps(TIMELINE).encode())
    assert resp.status_code == 200
    timeline_id = resp.json()["timeline_id"]
    resp = client.post("/sessions", json={"timeline_id": timeline_id, "supported_team": team})
    assert resp.status_code == 200
    return resp.json()["session_id"]


def recv_conversation(ws):
    """Collect frames up to and including conversation_ended."""
    frames = []
    while True:
        frame = json.loads(ws.receive_text())
        frames.append(frame)
        if frame["kind"] == "conversation_ended":
            return frames


# -------------------------------------------------------------------- http

def test_upload_and_list_timelines(client):
    resp = client.post("/timelines", content=json.dumps(TIMELINE).encode())
    assert resp.status_code == 200
    assert resp.json() == {"timeline_id": "svc-match"}
    listing = client.get("/timelines").json()
    assert listing == [{"timeline_id": "svc-match", "duration_s": 300.0,
                        "home_team": "Home FC", "away_team": "Away United"}]


def test_upload_invalid_timeline_rejected(client):
    resp = client.post("/timelines", content=b'{"video": {}}')
    assert resp.status_code == 400
    assert "detail" in resp.json()


def test_create_session_unknown_timeline_404(client):
    resp = client.post("/sessions", json={"timeline_id": "nope", "supported_team": "home"})
    assert resp.status_code == 404


def test_transcript_endpoint(client):
    session_id = make_session(client)
    resp = client.get(f"/sessions/{session_id}/transcript")
    assert resp.status_code == 200
    lines = [json.loads(line) for line in resp.text.splitlines()]
    assert lines[0]["kind"] == "session_created"
    assert client.get("/sessions/absent/transcript").status_code == 404


def test_transcript_is_byte_stable(client):
    session_id = make_session(client)
    a = client.get(f"/sessions/{session_id}/transcript").content
    b = client.get(f"/sessions/{session_id}/transcript").content
    assert a == b


# ------------------------------------------------------------------ stream

def test_stream_goal_then_user_message(client):
    session_id = make_session(client)
    with client.websocket_connect(f"/sessions/{session_id}/stream") as ws:
        ws.send_text(json.dumps({"kind": "clock_sync", "video_t": 50.0}))
        ws.send_text(json.dumps({"kind": "clock_sync", "video_t": 101.0}))
        frames = recv_conversation(ws)
        kinds = [f["kind"] for f in frames]
        assert kinds == (["conversation_started"] + ["agent_turn"] * 9
                         + ["duck_on", "duck_off"] + ["evaluation_report"] * 3
                         + ["conversation_ended"])
        assert "clock_sync" not in kinds  # never echoed
        turn = frames[1]
        assert turn["agent_id"] == "diehard" and turn["round_index"] == 0
        assert set(turn) >= {"kind", "seq", "agent_id", "text", "round_index", "audio_b64", "cue"}

        ws.send_text(json.dumps({"kind": "user_message", "text": "was that offside?"}))
        echo = json.loads(ws.receive_text())
        assert echo["kind"] == "user_message" and echo["text"] == "was that offside?"
        frames = recv_conversation(ws)
        started = frames[0]
        assert started["scenario"]["kind"] == "user_initiated"
        assert started["scenario"]["rounds_total"] == 2
        assert sum(1 for f in frames if f["kind"] == "agent_turn") == 6


def test_stream_bad_frames_yield_errors(client):
    session_id = make_session(client)
    with client.websocket_connect(f"/sessions/{session_id}/stream") as ws:
        ws.send_text("not json")
        assert json.loads(ws.receive_text())["kind"] == "error"
        ws.send_text(json.dumps({"kind": "mystery"}))
        assert json.loads(ws.receive_text())["kind"] == "error"
        ws.send_text(json.dumps({"kind": "user_message", "text": "  "}))
        assert json.loads(ws.receive_text())["kind"] == "error"


def test_stream_unknown_session_closed(client):
    with client.websocket_connect("/sessions/ghost/stream") as ws:
        frame = json.loads(ws.receive_text())
        assert frame["kind"] == "error"


def test_stream_audio_decodes_as_wav(client):
    session_id = make_session(client)
    with client.websocket_connect(f"/sessions/{session_id}/stream") as ws:
        ws.send_text(json.dumps({"kind": "clock_sync", "video_t": 101.0}))
        frames = recv_conversation(ws)
    staged = [f for f in frames if f["kind"] == "agent_turn" and f["audio_b64"]]
    assert staged
    data = base64.b64decode(staged[0]["audio_b64"])
    with wave.open(io.BytesIO(data), "rb") as wf:
        assert wf.getnchannels() == 1
        assert wf.getnframes() > 0


# -------------------------------------------------------------------- blobs

def test_oversize_clip_served_as_blob(tmp_path):
    config = EngineConfig(inline_audio_limit_bytes=1_000)  # force everything to blob
    app = create_app(config, data_dir=tmp_path)
    with TestClient(app) as client:
        session_id = make_session(client)
        with client.websocket_connect(f"/sessions/{session_id}/stream") as ws:
            ws.send_text(json.dumps({"kind": "clock_sync", "video_t": 101.0}))
            frames = recv_conversation(ws)
        refs = [f["audio_ref"] for f in frames if f["kind"] == "agent_turn" and f.get("audio_ref")]
        assert refs
        blob_id = refs[0].split("/", 1)[1]
        resp = client.get(f"/sessions/{session_id}/blobs/{blob_id}")
        assert resp.status_code == 200
        assert resp.headers["content-type"] == "audio/wav"
        with wave.open(io.BytesIO(resp.content), "rb") as wf:
            assert wf.getnframes() > 0
        assert client.get(f"/sessions/{session_id}/blobs/none.wav").status_code == 404
