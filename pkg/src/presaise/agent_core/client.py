"""Pluggable text-completion endpoint.

Any service implementing ``POST {prompt, temperature, max_tokens} ->
{text}`` works. Each NLP task (dialog, intent, slots) carries its own
prompt template and temperature, mirroring the one-model-per-task setup;
tool tasks run at temperature 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources

import httpx

from ..errors import ClientTimeout, MalformedCompletion

_PROMPT_CACHE: dict[str, str] = {}

TASKS = ("dialog", "intent", "slots")


def load_prompt(task: str) -> str:
    if task not in TASKS:
        raise ValueError(f"unknown prompt task {task!r}")
    if task not in _PROMPT_CACHE:
        ref = resources.files("presaise.agent_core").joinpath(
            f"prompts/{task}.txt")
        _PROMPT_CACHE[task] = ref.read_text()
    return _PROMPT_CACHE[task]


@dataclass
class CompletionClient:
    endpoint: str
    timeout: float = 10.0
    max_tokens: int = 256
    temperatures: dict[str, float] = field(
        default_factory=lambda: {"dialog": 0.7, "intent": 0.0, "slots": 0.0})
    transport: httpx.BaseTransport | None = None  # injection point for tests

    def complete(self, task: str, user_text: str) -> str:
        prompt = load_prompt(task) + "\n" + user_text.strip() + "\n"
        payload = {
            "prompt": prompt,
            "temperature": self.temperatures.get(task, 0.0),
            "max_tokens": self.max_tokens,
        }
        try:
            with httpx.Client(transport=self.transport,
                              timeout=self.timeout) as client:
                resp = client.post(self.endpoint, json=payload)
                resp.raise_for_status()
                body = resp.json()
        except (httpx.TimeoutException, httpx.TransportError) as e:
            raise ClientTimeout(str(e)) from e
        except Exception as e:  # bad status, bad json
            raise MalformedCompletion(str(e)) from e
        if not isinstance(body, dict) or not isinstance(body.get("text"), str):
            raise MalformedCompletion(f"expected {{'text': str}}, got {body!r}")
        return body["text"]
