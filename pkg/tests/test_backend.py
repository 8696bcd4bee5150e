import json
import math
import threading
from fractions import Fraction
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cag.backend import (
    CountingBackend,
    HttpBackend,
    MockBackend,
    MockKind,
    MockSpec,
    SessionLimits,
    SessionState,
    close_session,
    compress_ratio,
    echo_backend,
    failing_backend,
    generate,
    open_session,
    parse_backend,
    ratio_backend,
)
from cag.errors import (
    BackendUnavailable,
    ContextOverflow,
    GenerationFailed,
    InvalidConfig,
    SessionClosed,
)
from cag.pipeline import PromptTemplate


def test_default_session_budget():
    s = open_session(echo_backend())
    assert s.limits.max_tokens == 6144
    assert s.limits.tokens_left == 6144
    assert s.limits.tokens_so_far == 0
    assert s.limits.top_k == 3
    assert s.limits.temperature == 1
    assert s.state is SessionState.OPEN


def test_custom_budget():
    assert open_session(echo_backend(), SessionLimits(max_tokens=100)).limits.tokens_left == 100


def test_sessions_do_not_share_budget():
    limits = SessionLimits(max_tokens=100)
    a = open_session(echo_backend(), limits)
    generate(a, "x" * 40)
    b = open_session(echo_backend(), limits)
    assert b.limits.tokens_so_far == 0
    assert limits.tokens_so_far == 0


def test_echo_and_accounting():
    s = open_session(echo_backend())
    assert generate(s, "abc") == "abc"
    assert s.limits.tokens_so_far == 2
    assert s.limits.tokens_so_far + s.limits.tokens_left == s.limits.max_tokens


def test_ratio_payload_half():
    payload = "abc " * 250
    assert len(payload) == 1000
    out = generate(open_session(ratio_backend(Fraction(1, 2))), payload)
    assert abs(len(out) - 500) <= 1
    assert out == generate(open_session(ratio_backend(Fraction(1, 2))), payload)


def test_context_overflow():
    s = open_session(echo_backend())
    with pytest.raises(ContextOverflow) as exc:
        generate(s, "x" * 30_000)
    assert exc.value.needed == 7_500
    assert exc.value.available == 6_144


def test_close_idempotent_and_blocks_generate():
    b = CountingBackend(echo_backend())
    s = open_session(b)
    close_session(s)
    close_session(s)
    assert s.state is SessionState.CLOSED
    assert b.closes == 1
    with pytest.raises(SessionClosed):
        generate(s, "x")


def test_marker():
    assert generate(open_session(MockBackend(MockSpec(MockKind.MARKER))), "ab") == "<<ab>>"


def test_failing_by_call_index():
    b = failing_backend({1})
    assert generate(open_session(b), "a") == "a"
    with pytest.raises(GenerationFailed):
        generate(open_session(b), "b")
    assert generate(open_session(b), "c") == "c"


def test_strip_template_exposes_payload_only():
    t = PromptTemplate("Please shorten:\n{{chunk}}\nThanks")
    b = MockBackend(MockSpec(MockKind.ECHO), strip_template=t)
    assert generate(open_session(b), "Please shorten:\nbody\nThanks") == "body"


@pytest.mark.parametrize("ratio", [0, 1, Fraction(3, 2), -1])
def test_ratio_bounds(ratio):
    with pytest.raises(InvalidConfig):
        MockSpec(MockKind.RATIO, ratio=ratio)


@given(st.text(alphabet=st.sampled_from("ab c\n"), min_size=2, max_size=200),
       st.sampled_from([Fraction(3, 10), Fraction(1, 2), Fraction(9, 10), Fraction(1, 7)]))
def test_ratio_contraction(text, ratio):
    out = compress_ratio(text, ratio)
    assert len(out) <= math.ceil(ratio * len(text))
    assert len(out) < len(text)


@given(st.text(min_size=1, max_size=300), st.sampled_from([Fraction(1, 2), Fraction(9, 10)]))
def test_ratio_repeated_reaches_at_most_one_char(text, ratio):
    for _ in range(len(text) + 1):
        if len(text) <= 1:
            break
        text = compress_ratio(text, ratio)
    assert len(text) <= 1


def test_ratio_without_whitespace_truncates():
    assert compress_ratio("abcdefghij", Fraction(1, 2)) == "abcde"


def test_parse_backend():
    assert parse_backend("echo").spec.kind is MockKind.ECHO
    assert parse_backend("ratio:0.5").spec.ratio == Fraction(1, 2)
    assert parse_backend("fail:1,3").spec.fail_indices == {1, 3}
    assert isinstance(parse_backend("http:http://127.0.0.1:9/x"), HttpBackend)
    for bad in ("nope", "ratio:x", "ratio:2", "fail:", "http:"):
        with pytest.raises(InvalidConfig):
            parse_backend(bad)


# --- HTTP -----------------------------------------------------------------


class _Handler(BaseHTTPRequestHandler):
    def log_message(self, *args):
        pass

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        self.server.requests.append(body)
        if body["prompt"] == "boom":
            self.send_response(500)
            self.end_headers()
            self.wfile.write(b"server exploded")
            return
        payload = {"text": body["prompt"].upper()}
        if body["prompt"] == "usage":
            payload["usage"] = {"prompt_tokens": 10, "completion_tokens": 20}
        data = json.dumps(payload).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


@pytest.fixture
def server():
    srv = HTTPServer(("127.0.0.1", 0), _Handler)
    srv.requests = []
    t = threading.Thread(target=srv.serve_forever, daemon=True)
    t.start()
    yield srv
    srv.shutdown()
    srv.server_close()


def _url(srv):
    return f"http://127.0.0.1:{srv.server_address[1]}/generate"


def test_http_round_trip(server):
    s = open_session(HttpBackend(_url(server), timeout=5))
    assert generate(s, "hello") == "HELLO"
    assert server.requests == [{"prompt": "hello", "max_tokens": 6144 - 2}]


def test_http_reported_usage_overrides_estimate(server):
    s = open_session(HttpBackend(_url(server), timeout=5))
    generate(s, "usage")
    assert s.limits.tokens_so_far == 30


def test_http_non_2xx(server):
    s = open_session(HttpBackend(_url(server), timeout=5))
    with pytest.raises(GenerationFailed) as exc:
        generate(s, "boom")
    assert exc.value.status == 500
    assert exc.value.body == "server exploded"


def test_http_unreachable():
    srv = HTTPServer(("127.0.0.1", 0), _Handler)
    port = srv.server_address[1]
    srv.server_close()
    with pytest.raises(BackendUnavailable):
        open_session(HttpBackend(f"http://127.0.0.1:{port}/", timeout=2))


def test_http_timeout_env(monkeypatch):
    monkeypatch.setenv("CAG_HTTP_TIMEOUT_SECS", "7.5")
    assert HttpBackend("http://127.0.0.1:1/").timeout == 7.5
    monkeypatch.setenv("CAG_HTTP_TIMEOUT_SECS", "soon")
    with pytest.raises(InvalidConfig):
        HttpBackend("http://127.0.0.1:1/")
    monkeypatch.delenv("CAG_HTTP_TIMEOUT_SECS")
    assert HttpBackend("http://127.0.0.1:1/").timeout == 60.0
