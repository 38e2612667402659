"""Judgment collection from chat-completion endpoints and synthetic agents."""

from __future__ import annotations

import json
import logging
import math
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from string import Template
from typing import Optional

import httpx
import numpy as np

from .collider import ColliderParams
from .data_io import Dataset, JudgmentRecord
from .tasks import TASK_IDS, TASKS, TaskId, predict_all

log = logging.getLogger(__name__)

DEFAULT_API_KEY_ENV = "LLM_API_KEY"

NEUTRAL_COVER_STORY = (
    "Researchers study a system with two possible causes, C1 and C2, and one "
    "effect, E. Each cause, when present, can independently bring about E, and "
    "E can also occur for other reasons. C1 and C2 occur independently of each other."
)

_NODE_TEXT = {
    "C1": ("C1 is absent", "C1 is present"),
    "C2": ("C2 is absent", "C2 is present"),
    "E": ("E is absent", "E is present"),
}

DIRECT_TEMPLATE = """$cover_story

Suppose that $evidence.
$query

Respond with a single number between 0 and 100, where 0 means certainly not \
and 100 means certainly. Reply with the number only."""

COT_TEMPLATE = """$cover_story

Suppose that $evidence.
$query

Think step by step and explain your reasoning. Then give your final judgment \
as a number between 0 and 100, where 0 means certainly not and 100 means \
certainly, on a last line of the form
ANSWER: <number>"""


class ParseError(ValueError):
    """A response from which no valid judgment could be extracted."""

    def __init__(self, message: str, text: str):
        self.text = text
        super().__init__(f"{message}: {text!r}")


class SweepError(RuntimeError):
    def __init__(self, message: str, errors):
        self.errors = list(errors)
        super().__init__(message)


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    model_name: str
    api_key_env: str = DEFAULT_API_KEY_ENV
    max_in_flight: int = 4
    timeout: float = 60.0
    retries: int = 3
    backoff_initial: float = 1.0
    temperature: Optional[float] = 0.0

    def __post_init__(self):
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be at least 1")
        if self.retries < 0:
            raise ValueError("retries must be non-negative")

    @property
    def url(self) -> str:
        url = self.base_url.rstrip("/")
        return url if url.endswith("/chat/completions") else url + "/chat/completions"

    @property
    def api_key(self) -> Optional[str]:
        return os.environ.get(self.api_key_env)


def _phrase_evidence(task) -> str:
    obs = task.evidence.observed()
    return " and ".join(_NODE_TEXT[n][v] for n, v in obs.items())


def _phrase_query(task) -> str:
    node, value = task.target
    state = "present" if value else "absent"
    return f"How likely is it that {node} is {state}?"


@dataclass(frozen=True)
class PromptTemplate:
    """Prompt skeleton with ``$cover_story``, ``$evidence`` and ``$query`` slots."""

    style: str
    text: str
    cover_story: str = NEUTRAL_COVER_STORY

    def __post_init__(self):
        if self.style not in ("direct", "cot"):
            raise ValueError(f"unknown prompt style {self.style!r}")

    @classmethod
    def default(cls, style: str) -> "PromptTemplate":
        return cls(style, DIRECT_TEMPLATE if style == "direct" else COT_TEMPLATE)

    @classmethod
    def from_file(cls, path, style: str, cover_story: Optional[str] = None) -> "PromptTemplate":
        text = Path(path).read_text()
        return cls(style, text, cover_story or NEUTRAL_COVER_STORY)

    def render(self, task_id: TaskId) -> str:
        task = TASKS[TaskId(task_id)]
        return Template(self.text).substitute(
            cover_story=self.cover_story,
            evidence=_phrase_evidence(task),
            query=_phrase_query(task),
            task_id=str(task.id),
        )


_NUMBER = re.compile(r"[-+]?\d+(?:\.\d+)?")
_ANSWER = re.compile(r"ANSWER\s*[:=]\s*\**\s*([-+]?\d+(?:\.\d+)?)", re.IGNORECASE)


def _in_range(value: float, text: str) -> float:
    if not 0.0 <= value <= 100.0:
        raise ParseError(f"judgment {value:g} lies outside [0, 100]", text)
    return value


def parse_response_with_method(style: str, text: str) -> tuple[float, str]:
    if not text or not text.strip():
        raise ParseError("empty response", text or "")
    if style == "direct":
        numbers = _NUMBER.findall(text.strip().strip(".,;:!?%\"'`*"))
        if not numbers:
            raise ParseError("no number in response", text)
        if len(numbers) > 1:
            raise ParseError("ambiguous response with several numbers", text)
        return _in_range(float(numbers[0]), text), "single-number"
    if style == "cot":
        for line in reversed(text.strip().splitlines()):
            match = _ANSWER.search(line)
            if match:
                return _in_range(float(match.group(1)), text), "answer-line"
        numbers = _NUMBER.findall(text)
        if not numbers:
            raise ParseError("no number in response", text)
        return _in_range(float(numbers[-1]), text), "last-number"
    raise ValueError(f"unknown prompt style {style!r}")


def parse_response(style: str, text: str) -> float:
    """Extract a 0-100 judgment from a model reply.

    Direct replies must contain exactly one number.  CoT replies use the
    last ``ANSWER: <n>`` line, falling back to the last number anywhere.
    """
    return parse_response_with_method(style, text)[0]


@dataclass(frozen=True)
class RequestError:
    """A failed request or unparseable reply, located by task and trial."""

    task_id: TaskId
    trial_index: int
    kind: str  # "transport" or "parse"
    message: str
    text: Optional[str] = None

    def __str__(self):
        return f"task {self.task_id} trial {self.trial_index}: {self.kind} error: {self.message}"


@dataclass
class SweepResult:
    dataset: Dataset
    errors: list[RequestError] = field(default_factory=list)


class _TranscriptWriter:
    def __init__(self, path):
        self._fh = open(path, "a")
        self._lock = threading.Lock()

    def write(self, entry: dict) -> None:
        line = json.dumps(entry, sort_keys=True)
        with self._lock:
            self._fh.write(line + "\n")
            self._fh.flush()

    def close(self):
        self._fh.close()


def _retry_after(response: httpx.Response) -> Optional[float]:
    value = response.headers.get("retry-after")
    try:
        return max(0.0, float(value)) if value is not None else None
    except ValueError:
        return None


def _post_with_retries(client: httpx.Client, config: EndpointConfig, body: dict):
    """Return ``(status, text, error, attempts)`` for the final attempt."""
    headers = {"Content-Type": "application/json"}
    if config.api_key:
        headers["Authorization"] = f"Bearer {config.api_key}"
    delay = config.backoff_initial
    attempt = 0
    while True:
        attempt += 1
        wait = delay
        try:
            response = client.post(config.url, json=body, headers=headers, timeout=config.timeout)
        except httpx.HTTPError as exc:
            status, text, error = None, None, f"{type(exc).__name__}: {exc}"
        else:
            status = response.status_code
            if status == 200:
                try:
                    text = response.json()["choices"][0]["message"]["content"]
                    return status, text, None, attempt
                except (ValueError, KeyError, IndexError, TypeError) as exc:
                    return status, response.text, f"malformed completion: {exc!r}", attempt
            text, error = response.text, f"HTTP {status}"
            if status != 429 and status < 500:
                return status, text, error, attempt
            wait = _retry_after(response) if _retry_after(response) is not None else delay
        if attempt > config.retries:
            return status, text, error, attempt
        time.sleep(wait)
        delay *= 2


def run_sweep(
    config: EndpointConfig,
    template: PromptTemplate,
    repeats: int,
    transcript,
    agent_id: Optional[str] = None,
    content_domain: str = "rw17",
    tasks=TASK_IDS,
    transport: Optional[httpx.BaseTransport] = None,
) -> SweepResult:
    """Ask every task ``repeats`` times and parse the replies.

    Each request's final outcome is appended to the JSONL ``transcript``
    before it is parsed.  Records come back task-major, trial-minor no
    matter in which order the requests complete.

    Raises:
        SweepError: if every request for some task failed.
    """
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    agent_id = agent_id or config.model_name
    jobs = [(TaskId(t), trial) for t in tasks for trial in range(repeats)]
    writer = _TranscriptWriter(transcript)
    client = httpx.Client(transport=transport, timeout=config.timeout)

    def run(job):
        task, trial = job
        prompt = template.render(task)
        body = {"model": config.model_name, "messages": [{"role": "user", "content": prompt}]}
        if config.temperature is not None:
            body["temperature"] = config.temperature
        status, text, error, attempts = _post_with_retries(client, config, body)
        entry = {
            "agent_id": agent_id,
            "model": config.model_name,
            "prompt_style": template.style,
            "content_domain": content_domain,
            "task_id": str(task),
            "trial_index": trial,
            "url": config.url,
            "request": body,
            "status": status,
            "attempts": attempts,
            "response_text": text,
            "error": error,
            "time": time.time(),
        }
        writer.write(entry)
        return entry

    try:
        with ThreadPoolExecutor(max_workers=config.max_in_flight) as pool:
            entries = list(pool.map(run, jobs))
    finally:
        client.close()
        writer.close()
    return _collect(entries)


def _collect(entries) -> SweepResult:
    records, errors = [], []
    attempted, succeeded = {}, {}
    for e in entries:
        task = TaskId.parse(e["task_id"])
        attempted[task] = attempted.get(task, 0) + 1
        if e["error"] is not None:
            errors.append(RequestError(task, e["trial_index"], "transport", e["error"], e["response_text"]))
            continue
        try:
            value, method = parse_response_with_method(e["prompt_style"], e["response_text"])
        except ParseError as exc:
            errors.append(RequestError(task, e["trial_index"], "parse", str(exc), exc.text))
            continue
        log.debug("task %s trial %d parsed by %s", task, e["trial_index"], method)
        succeeded[task] = succeeded.get(task, 0) + 1
        records.append(JudgmentRecord(
            e["agent_id"], e["prompt_style"], e["content_domain"], task, value, e["trial_index"],
            time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(e["time"])) if e.get("time") else None,
        ))
    dead = [t for t in attempted if not succeeded.get(t)]
    if dead:
        names = ", ".join(str(t) for t in sorted(dead))
        raise SweepError(f"every request failed for task(s) {names}", errors)
    return SweepResult(Dataset(records), errors)


def dataset_from_transcript(path) -> SweepResult:
    """Rebuild the parsed dataset from a JSONL transcript alone."""
    with open(path) as fh:
        entries = [json.loads(line) for line in fh if line.strip()]
    entries.sort(key=lambda e: (e["agent_id"], e["prompt_style"], TaskId.parse(e["task_id"]), e["trial_index"]))
    return _collect(entries)


@dataclass(frozen=True)
class SyntheticAgent:
    """A CBN-rational agent with optional Gaussian response noise."""

    params: ColliderParams
    noise_sigma: float = 0.0
    seed: int = 0
    agent_id: str = "synthetic"
    prompt_style: str = "direct"
    content_domain: str = "synthetic"

    def __post_init__(self):
        if not self.noise_sigma >= 0.0 or math.isinf(self.noise_sigma):
            raise ValueError("noise_sigma must be a finite non-negative number")


def simulate_agent(agent: SyntheticAgent, repeats: int) -> Dataset:
    """Responses 100 * clamp(prediction + N(0, sigma)), task-major."""
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    rng = np.random.default_rng(agent.seed)
    predictions = predict_all(agent.params)
    records = []
    for i, task in enumerate(TASK_IDS):
        noise = rng.normal(0.0, agent.noise_sigma, size=repeats) if agent.noise_sigma else np.zeros(repeats)
        for trial in range(repeats):
            value = min(1.0, max(0.0, predictions[i] + noise[trial]))
            records.append(JudgmentRecord(
                agent.agent_id, agent.prompt_style, agent.content_domain, task, 100.0 * value, trial))
    return Dataset(records)
