import json
import threading
from concurrent.futures import ThreadPoolExecutor

import httpx
import pytest

from conftest import FIXTURES
from pigec.errors import BackendRefusal, NoScriptMatch, TransportError
from pigec.llm import (Backend, ChatBackend, CompletionBackend, CompletionRequest, Direction,
                       LogicalClock, ScriptedMock, Transcript, backend_from_env, complete, load_script,
                       scripted_mock, truncate_at_stop)


def test_scripted_echo():
    mock = scripted_mock({"Input: X": "Y"})
    assert complete(mock, CompletionRequest("Input: X")) == "Y"


def test_stop_truncation():
    mock = scripted_mock({"go": "abc\ndef"})
    assert complete(mock, CompletionRequest("go", ["\n"])) == "abc"
    assert complete(mock, CompletionRequest("go")) == "abc\ndef"


@pytest.mark.parametrize("text, stops, expected", [
    ("abc", [], "abc"),
    ("abc\n\ndef", ["\n\n"], "abc"),
    ("a\nb\n\nc", ["\n\n", "\n"], "a"),
    ("xyz", ["q"], "xyz"),
    ("xyz", [""], "xyz"),
    ("\nxyz", ["\n"], ""),
])
def test_truncate_at_stop(text, stops, expected):
    assert truncate_at_stop(text, stops) == expected


def test_empty_script_raises():
    with pytest.raises(NoScriptMatch):
        complete(scripted_mock({}), CompletionRequest("anything"))


def test_longest_suffix_wins():
    mock = scripted_mock({"?:": "short", "disorders ?:": "long"})
    assert complete(mock, CompletionRequest("other disorders ?:")) == "long"
    assert complete(mock, CompletionRequest("x ?:")) == "short"


def test_trailing_whitespace_ignored():
    mock = scripted_mock({"Output: ": "ok"})
    assert complete(mock, CompletionRequest("Input: a\nOutput:")) == "ok"


def test_registration_order_irrelevant():
    pairs = [("alpha", "1"), ("beta", "2"), ("a", "3")]
    forward, backward = ScriptedMock(pairs), ScriptedMock(list(reversed(pairs)))
    for prompt in ["x alpha", "x beta", "x a"]:
        req = CompletionRequest(prompt)
        assert forward.generate(req) == backward.generate(req)


def test_load_script_forms(tmp_path):
    as_dict = tmp_path / "d.json"
    as_dict.write_text(json.dumps({"p": "r"}))
    as_list = tmp_path / "l.json"
    as_list.write_text(json.dumps([["p", "r"]]))
    for path in (as_dict, as_list):
        assert load_script(path).generate(CompletionRequest("p")) == "r"


def test_request_validation():
    with pytest.raises(ValueError):
        CompletionRequest("p", max_tokens=0)
    with pytest.raises(ValueError):
        CompletionRequest("p", temperature=-1)
    assert CompletionRequest("p").max_tokens == 256
    assert CompletionRequest("p").temperature == 0


def test_transcript_records_turns_and_mock_calls():
    mock = scripted_mock({"a": "1", "b": "2"})
    tr = mock.new_transcript()
    complete(mock, CompletionRequest("a"), tr)
    complete(mock, CompletionRequest("b"), tr)
    assert tr.prompts() == ["a", "b"]
    assert tr.replies() == ["1", "2"]
    assert [t.timestamp for t in tr.turns] == [0.0, 1.0, 2.0, 3.0]
    assert [c.prompt for c in mock.calls] == ["a", "b"]


def test_transcript_invariants():
    tr = Transcript()
    with pytest.raises(ValueError):
        tr.append(Direction.FROM_MODEL, "x")
    tr.append(Direction.TO_MODEL, "p")
    with pytest.raises(ValueError):
        tr.append(Direction.TO_MODEL, "q")
    tr.append(Direction.FROM_MODEL, "r")
    assert Transcript.from_dict(json.loads(json.dumps(tr.to_dict()))).turns == tr.turns


def test_logical_clock():
    clock = LogicalClock()
    assert [clock(), clock(), clock()] == [0.0, 1.0, 2.0]


class Flaky(Backend):
    def __init__(self, failures, exc=TransportError):
        self.failures = failures
        self.exc = exc
        self.attempts = 0

    def generate(self, request):
        self.attempts += 1
        if self.attempts <= self.failures:
            raise self.exc("boom")
        return "done"


def test_transport_errors_retried_with_backoff():
    delays = []
    backend = Flaky(3)
    assert complete(backend, CompletionRequest("p"), sleep=delays.append, backoff=0.5) == "done"
    assert delays == [0.5, 1.0, 2.0]


def test_backoff_is_capped_and_gives_up():
    delays = []
    backend = Flaky(10)
    with pytest.raises(TransportError):
        complete(backend, CompletionRequest("p"), retries=5, backoff=1, max_backoff=4, sleep=delays.append)
    assert delays == [1, 2, 4, 4, 4]
    assert backend.attempts == 6


def test_refusal_not_retried():
    backend = Flaky(1, BackendRefusal)
    with pytest.raises(BackendRefusal):
        complete(backend, CompletionRequest("p"), sleep=lambda s: pytest.fail("slept"))
    assert backend.attempts == 1


def client_with(handler):
    return httpx.Client(transport=httpx.MockTransport(handler))


def test_chat_payload_and_parse():
    seen = {}

    def handler(request):
        seen["url"] = str(request.url)
        seen["auth"] = request.headers.get("authorization")
        seen["body"] = json.loads(request.content)
        return httpx.Response(200, json={"choices": [{"message": {"role": "assistant", "content": "ok\nmore"}}]})

    backend = ChatBackend("http://h/v1/", "m", "k", client=client_with(handler))
    assert complete(backend, CompletionRequest("Instr\n\nInput: a", ["\n"], max_tokens=5)) == "ok"
    assert seen["url"] == "http://h/v1/chat/completions"
    assert seen["auth"] == "Bearer k"
    assert seen["body"] == {"model": "m", "max_tokens": 5, "temperature": 0.0, "stop": ["\n"],
                            "messages": [{"role": "user", "content": "Instr\n\nInput: a"}]}


def test_chat_system_layout():
    bodies = []

    def handler(request):
        bodies.append(json.loads(request.content))
        return httpx.Response(200, json={"choices": [{"message": {"content": "x"}}]})

    backend = ChatBackend("http://h", "m", layout="system", client=client_with(handler))
    backend.generate(CompletionRequest("Instr\n\nInput: a"))
    assert bodies[0]["messages"] == [{"role": "system", "content": "Instr"},
                                     {"role": "user", "content": "Input: a"}]
    with pytest.raises(ValueError):
        ChatBackend("http://h", "m", layout="turns")


def test_completion_payload_and_parse():
    bodies = []

    def handler(request):
        assert request.url.path == "/completions"
        assert "authorization" not in request.headers
        bodies.append(json.loads(request.content))
        return httpx.Response(200, json={"choices": [{"text": " disorders ?"}]})

    backend = CompletionBackend("http://h", "m", client=client_with(handler))
    assert backend.generate(CompletionRequest("Output:")) == " disorders ?"
    assert bodies[0]["prompt"] == "Output:"
    assert "stop" not in bodies[0]


@pytest.mark.parametrize("status, exc", [(429, TransportError), (503, TransportError),
                                         (400, BackendRefusal), (401, BackendRefusal)])
def test_http_status_mapping(status, exc):
    backend = CompletionBackend("http://h", "m", client=client_with(lambda r: httpx.Response(status, text="no")))
    with pytest.raises(exc):
        backend.generate(CompletionRequest("p"))


def test_malformed_body_is_refusal():
    backend = ChatBackend("http://h", "m", client=client_with(lambda r: httpx.Response(200, json={"x": 1})))
    with pytest.raises(BackendRefusal):
        backend.generate(CompletionRequest("p"))


def test_connection_error_is_transport():
    def handler(request):
        raise httpx.ConnectError("refused", request=request)

    backend = ChatBackend("http://h", "m", client=client_with(handler))
    with pytest.raises(TransportError):
        backend.generate(CompletionRequest("p"))


def test_concurrency_limit():
    active = []
    peak = [0]
    lock = threading.Lock()
    gate = threading.Event()

    def handler(request):
        with lock:
            active.append(1)
            peak[0] = max(peak[0], len(active))
        gate.wait(0.05)
        with lock:
            active.pop()
        return httpx.Response(200, json={"choices": [{"text": "t"}]})

    backend = CompletionBackend("http://h", "m", max_concurrency=2, client=client_with(handler))
    with ThreadPoolExecutor(8) as pool:
        assert list(pool.map(lambda i: backend.generate(CompletionRequest(str(i))), range(8))) == ["t"] * 8
    assert peak[0] <= 2


def test_replayed_smoke_exchange():
    fixture = json.loads((FIXTURES / "live_smoke.json").read_text())

    def handler(request):
        assert request.url.path == fixture["request"]["path"]
        assert json.loads(request.content) == fixture["request"]["body"]
        return httpx.Response(fixture["status"], json=fixture["response"])

    env = {"LLM_BASE_URL": "https://api.example.test/v1", "LLM_MODEL": "gpt-3.5-turbo"}
    backend = backend_from_env("chat", env, client=client_with(handler))
    out = complete(backend, CompletionRequest("Hello", ["\n"]))
    assert isinstance(out, str) and out.strip()


def test_backend_from_env_requires_config():
    with pytest.raises(ValueError):
        backend_from_env("chat", {})
    backend = backend_from_env("completion", {"LLM_BASE_URL": "http://h", "LLM_MODEL": "m"})
    assert isinstance(backend, CompletionBackend)
