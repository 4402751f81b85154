"""Chat-completion backends: deterministic scripted stand-ins and a live HTTP client.

The scripted backends make every test and the whole `simulate` CLI
byte-reproducible; the HTTP backend speaks the common chat-completions wire
shape with timeout/retry/backoff.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import time
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Mapping, Sequence

import httpx

logger = logging.getLogger(__name__)

Message = Mapping[str, str]  # {"role": ..., "content": ...}


class ChatBackendError(RuntimeError):
    """A completion could not be produced (after any retries)."""


class ChatBackend(ABC):
    """Behavior contract for anything that can complete a chat request."""

    kind = "live"

    @abstractmethod
    def complete(
        self,
        system_prompt: str,
        messages: Sequence[Message],
        temperature: float,
        seed: int | None = None,
        meta: Mapping[str, Any] | None = None,
    ) -> str:
        """Return the assistant text for one request.

        ``meta`` carries trigger metadata (agent id, round index, scenario
        kind, score, team, rubric keys). Scripted backends key off it; live
        backends ignore it.
        """


_SCRIPT_VARS = ("scenario_kind", "score", "team", "agent_id", "round_index")
_VAR_RE = re.compile(r"\{(" + "|".join(_SCRIPT_VARS) + r")\}")

_DEFAULT_LINE = "Big {scenario_kind} moment at {score}, {team} point of view from {agent_id}."

# seed-picked suffix so different seeds give visibly different transcripts
_FLOURISHES = ("", " Scenes!", " I called it.", " Take a bow.", " No words.")


def _substitute(template: str, variables: Mapping[str, Any]) -> str:
    # only the documented variables are substituted; other braces (e.g. JSON
    # in a scripted judge line) pass through untouched
    return _VAR_RE.sub(lambda m: str(variables[m.group(1)]), template)


class ScriptedChatBackend(ChatBackend):
    """Deterministic template-driven agent backend.

    The script file is a JSON object mapping ``"<agent_id>:<round_index>"``
    (or just ``"<agent_id>"``, or ``"default"``) to a response template.
    Templates may use {scenario_kind}, {score}, {team}, {agent_id} and
    {round_index}. Anything unmatched falls back to a deterministic line.
    """

    kind = "scripted"

    def __init__(self, script: Mapping[str, str] | None = None):
        self.script = dict(script or {})
        for key, value in self.script.items():
            if not isinstance(value, str):
                raise ValueError(f"script entry {key!r}: template must be a string")

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedChatBackend":
        with open(path, "r", encoding="utf-8") as fh:
            body = json.load(fh)
        if not isinstance(body, dict):
            raise ValueError(f"{path}: script file must be a JSON object")
        return cls(body)

    def complete(self, system_prompt, messages, temperature, seed=None, meta=None) -> str:
        meta = meta or {}
        agent_id = str(meta.get("agent_id", "agent"))
        round_index = int(meta.get("round_index", 0))
        variables = {
            "scenario_kind": meta.get("scenario_kind", "other"),
            "score": meta.get("score", "0-0"),
            "team": meta.get("team", "neutral"),
            "agent_id": agent_id,
            "round_index": round_index,
        }
        template = (
            self.script.get(f"{agent_id}:{round_index}")
            or self.script.get(agent_id)
            or self.script.get("default")
        )
        if template is None:
            digest = hashlib.sha256(f"{seed}:{agent_id}:{round_index}".encode()).digest()
            template = _DEFAULT_LINE + _FLOURISHES[digest[0] % len(_FLOURISHES)]
        return _substitute(template, variables)


class ScriptedJudgeBackend(ChatBackend):
    """Deterministic evaluator stand-in emitting strict JSON.

    Scores every rubric dimension ``base_score + step * round_index``
    (clamped to the scale), so multi-round conversations see a strictly
    increasing schedule by default.
    """

    kind = "scripted"

    def __init__(
        self,
        base_score: float = 6.0,
        step: float = 1.0,
        feedback_template: str = "Round {round_index}: reference the live play more directly and vary the openings.",
    ):
        self.base_score = float(base_score)
        self.step = float(step)
        self.feedback_template = feedback_template

    def complete(self, system_prompt, messages, temperature, seed=None, meta=None) -> str:
        meta = meta or {}
        keys = list(meta.get("rubric_keys", []))
        if not keys:
            raise ChatBackendError("scripted judge needs meta['rubric_keys']")
        round_index = int(meta.get("round_index", 0))
        scale_max = float(meta.get("scale_max", 10))
        score = min(scale_max, self.base_score + self.step * round_index)
        body: dict[str, Any] = {key: score for key in keys}
        body["feedback"] = _substitute(self.feedback_template, {"round_index": round_index,
                                                                "scenario_kind": meta.get("scenario_kind", "other"),
                                                                "score": meta.get("score", "0-0"),
                                                                "team": meta.get("team", "neutral"),
                                                                "agent_id": meta.get("agent_id", "judge")})
        return json.dumps(body)


class HttpChatBackend(ChatBackend):
    """Live chat-completions client: 20 s timeout, 2 retries, exponential backoff.

    Retries transport errors and 5xx; 4xx fails immediately. The bearer token
    comes from the CC_CHAT_KEY environment variable unless passed explicitly.
    """

    kind = "live"

    def __init__(
        self,
        base_url: str,
        model: str = "default",
        api_key: str | None = None,
        timeout_s: float = 20.0,
        retries: int = 2,
        backoff_s: float = 0.5,
        client: httpx.Client | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key if api_key is not None else os.environ.get("CC_CHAT_KEY")
        self.retries = retries
        self.backoff_s = backoff_s
        self._client = client or httpx.Client(timeout=timeout_s)

    def complete(self, system_prompt, messages, temperature, seed=None, meta=None) -> str:
        payload: dict[str, Any] = {
            "model": self.model,
            "messages": [{"role": "system", "content": system_prompt}, *messages],
            "temperature": temperature,
        }
        if seed is not None:
            payload["seed"] = seed
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        url = f"{self.base_url}/v1/chat/completions"

        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff_s * 2 ** (attempt - 1))
            try:
                resp = self._client.post(url, json=payload, headers=headers)
            except httpx.TransportError as exc:
                last_error = exc
                logger.warning("chat backend attempt %d failed: %s", attempt + 1, exc)
                continue
            if resp.status_code >= 500:
                last_error = ChatBackendError(f"server error {resp.status_code}")
                logger.warning("chat backend attempt %d got %d", attempt + 1, resp.status_code)
                continue
            if resp.status_code >= 400:
                raise ChatBackendError(f"chat backend rejected request: {resp.status_code}")
            try:
                return resp.json()["choices"][0]["message"]["content"]
            except (KeyError, IndexError, TypeError, ValueError) as exc:
                raise ChatBackendError(f"unexpected chat response shape: {exc}") from exc
        raise ChatBackendError(f"chat backend failed after {self.retries} retries: {last_error}")

    def close(self) -> None:
        self._client.close()
