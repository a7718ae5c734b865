"""Completion backends, transcripts, and a scripted mock for offline runs.

Live backends speak the common hosted chat-completions / completions JSON
protocol. Configuration comes from ``LLM_BASE_URL``, ``LLM_MODEL`` and
``LLM_API_KEY``.
"""

from __future__ import annotations

import enum
import itertools
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Tuple, Union

import httpx

from .errors import BackendRefusal, NoScriptMatch, TransportError

logger = logging.getLogger(__name__)

DEFAULT_MAX_TOKENS = 256
DEFAULT_TEMPERATURE = 0


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    stop_sequences: Tuple[str, ...] = ()
    max_tokens: int = DEFAULT_MAX_TOKENS
    temperature: Fraction = Fraction(DEFAULT_TEMPERATURE)

    def __post_init__(self):
        object.__setattr__(self, "stop_sequences", tuple(self.stop_sequences))
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")


class Direction(enum.Enum):
    TO_MODEL = "to_model"
    FROM_MODEL = "from_model"


@dataclass(frozen=True)
class Turn:
    direction: Direction
    text: str
    timestamp: float


class LogicalClock:
    """Counts ticks instead of reading the wall clock, for reproducible transcripts."""

    def __init__(self):
        self._ticks = itertools.count()

    def __call__(self) -> float:
        return float(next(self._ticks))


@dataclass
class Transcript:
    turns: List[Turn] = field(default_factory=list)
    clock: Callable[[], float] = field(default=time.time, repr=False, compare=False)

    def append(self, direction: Direction, text: str) -> Turn:
        if not self.turns and direction is not Direction.TO_MODEL:
            raise ValueError("a transcript must start with a prompt")
        if self.turns and self.turns[-1].direction is direction:
            raise ValueError(f"two consecutive {direction.value} turns")
        turn = Turn(direction, text, self.clock())
        self.turns.append(turn)
        return turn

    def prompts(self) -> List[str]:
        return [t.text for t in self.turns if t.direction is Direction.TO_MODEL]

    def replies(self) -> List[str]:
        return [t.text for t in self.turns if t.direction is Direction.FROM_MODEL]

    def to_dict(self) -> dict:
        return {"turns": [{"direction": t.direction.value, "text": t.text, "timestamp": t.timestamp}
                          for t in self.turns]}

    @classmethod
    def from_dict(cls, data: dict) -> "Transcript":
        turns = [Turn(Direction(t["direction"]), t["text"], t["timestamp"]) for t in data["turns"]]
        return cls(turns)


class Backend:
    """Something that turns a :class:`CompletionRequest` into raw model text.

    Subclasses implement :meth:`generate`. ``max_concurrency`` bounds how many
    requests may be in flight at once across threads.
    """

    name = "backend"
    model = ""
    deterministic = False
    max_concurrency = 1

    def generate(self, request: CompletionRequest) -> str:
        raise NotImplementedError

    def new_transcript(self) -> Transcript:
        return Transcript(clock=LogicalClock() if self.deterministic else time.time)


def truncate_at_stop(text: str, stops: Iterable[str]) -> str:
    cut = len(text)
    for stop in stops:
        if stop:
            pos = text.find(stop)
            if pos != -1:
                cut = min(cut, pos)
    return text[:cut]


def complete(backend: Backend, request: CompletionRequest, transcript: Optional[Transcript] = None,
             *, retries: int = 4, backoff: float = 0.5, max_backoff: float = 8.0,
             sleep: Callable[[float], None] = time.sleep) -> str:
    """Run one completion, cut it at the first stop sequence, and log both turns.

    :class:`TransportError` is retried ``retries`` times with exponential
    backoff capped at ``max_backoff`` seconds; :class:`BackendRefusal` is not.
    """
    delay = backoff
    for attempt in itertools.count():
        try:
            raw = backend.generate(request)
            break
        except TransportError as exc:
            if attempt >= retries:
                raise
            logger.warning("transport error (%s), retry %d in %.1fs", exc, attempt + 1, delay)
            sleep(delay)
            delay = min(delay * 2, max_backoff)
    text = truncate_at_stop(raw, request.stop_sequences)
    if transcript is not None:
        transcript.append(Direction.TO_MODEL, request.prompt)
        transcript.append(Direction.FROM_MODEL, text)
    return text


class ScriptedMock(Backend):
    """Answers from a table of prompt-suffix patterns.

    The longest pattern that ends the prompt wins; trailing whitespace on both
    the prompt and the patterns is ignored.
    """

    name = "mock"
    model = "scripted-mock"
    deterministic = True
    max_concurrency = 64

    def __init__(self, script: Union[Mapping[str, str], Iterable[Tuple[str, str]]]):
        items = script.items() if isinstance(script, Mapping) else script
        self.script: Dict[str, str] = {}
        for pattern, reply in items:
            self.script[pattern.rstrip()] = reply
        # longest first; ties resolved by pattern text so registration order is irrelevant
        self._ordered = sorted(self.script, key=lambda p: (-len(p), p))
        self._lock = threading.Lock()
        self.calls: List[CompletionRequest] = []

    def generate(self, request: CompletionRequest) -> str:
        with self._lock:
            self.calls.append(request)
        prompt = request.prompt.rstrip()
        for pattern in self._ordered:
            if prompt.endswith(pattern):
                return self.script[pattern]
        raise NoScriptMatch(f"no scripted reply for prompt ending {prompt[-60:]!r}")


def scripted_mock(script) -> ScriptedMock:
    return ScriptedMock(script)


def load_script(path) -> ScriptedMock:
    """Read a mock script: a JSON object, or a JSON list of ``[pattern, reply]`` pairs."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        return ScriptedMock(data)
    return ScriptedMock([(p, r) for p, r in data])


class _HttpBackend(Backend):
    path = ""

    def __init__(self, base_url: str, model: str, api_key: str = "", *, timeout: float = 60.0,
                 max_concurrency: int = 4, client: Optional[httpx.Client] = None):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.max_concurrency = max_concurrency
        self._slots = threading.BoundedSemaphore(max_concurrency)
        headers = {"Content-Type": "application/json"}
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        self._client = client or httpx.Client(timeout=timeout)
        self._headers = headers

    def payload(self, request: CompletionRequest) -> dict:
        raise NotImplementedError

    def extract(self, body: dict) -> str:
        raise NotImplementedError

    def generate(self, request: CompletionRequest) -> str:
        with self._slots:
            try:
                resp = self._client.post(self.base_url + self.path, headers=self._headers,
                                         json=self.payload(request))
            except httpx.HTTPError as exc:
                raise TransportError(str(exc)) from exc
        if resp.status_code == 429 or resp.status_code >= 500:
            raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        if resp.status_code >= 400:
            raise BackendRefusal(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return self.extract(resp.json())
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendRefusal(f"malformed response: {exc}") from exc

    def _common(self, request: CompletionRequest) -> dict:
        body = {"model": self.model, "max_tokens": request.max_tokens,
                "temperature": float(request.temperature)}
        if request.stop_sequences:
            body["stop"] = list(request.stop_sequences)
        return body


class ChatBackend(_HttpBackend):
    """Chat-completions adapter.

    With ``layout="flat"`` (the default) the whole prompt goes out as one user
    message. ``layout="system"`` sends the text before the first blank line
    (the instruction) as a system message and the rest as the user message.
    """

    name = "chat"
    path = "/chat/completions"

    def __init__(self, *args, layout: str = "flat", **kwargs):
        if layout not in ("flat", "system"):
            raise ValueError(f"unknown chat layout {layout!r}")
        super().__init__(*args, **kwargs)
        self.layout = layout

    def payload(self, request):
        body = self._common(request)
        head, sep, rest = request.prompt.partition("\n\n")
        if self.layout == "system" and sep:
            body["messages"] = [{"role": "system", "content": head},
                                {"role": "user", "content": rest}]
        else:
            body["messages"] = [{"role": "user", "content": request.prompt}]
        return body

    def extract(self, body):
        content = body["choices"][0]["message"]["content"]
        return content or ""


class CompletionBackend(_HttpBackend):
    name = "completion"
    path = "/completions"

    def payload(self, request):
        body = self._common(request)
        body["prompt"] = request.prompt
        return body

    def extract(self, body):
        return body["choices"][0]["text"] or ""


def backend_from_env(kind: str = "chat", env: Optional[Mapping[str, str]] = None, **kwargs) -> _HttpBackend:
    env = os.environ if env is None else env
    base_url = env.get("LLM_BASE_URL")
    model = env.get("LLM_MODEL")
    if not base_url or not model:
        raise ValueError("LLM_BASE_URL and LLM_MODEL must be set for a live backend")
    cls = {"chat": ChatBackend, "completion": CompletionBackend}[kind]
    return cls(base_url, model, env.get("LLM_API_KEY", ""), **kwargs)
