import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from itertools import product

import numpy as np
import pytest

NODE_INDEX = {"C1": 0, "C2": 1, "E": 2}


def enumerate_joint(b, m1, m2, pC):
    """Literal 8-state joint table of the leaky noisy-OR collider."""
    table = {}
    for c1, c2, e in product((0, 1), repeat=3):
        p_e = 1 - (1 - b) * (1 - m1) ** c1 * (1 - m2) ** c2
        prior = (pC if c1 else 1 - pC) * (pC if c2 else 1 - pC)
        table[(c1, c2, e)] = prior * (p_e if e else 1 - p_e)
    return table


def oracle_conditional(theta, target, evidence):
    """Pr(target | evidence) by summing and dividing over the joint table."""
    table = enumerate_joint(*theta)
    node, value = target
    num = den = 0.0
    for state, p in table.items():
        if all(state[NODE_INDEX[n]] == v for n, v in evidence.items()):
            den += p
            if state[NODE_INDEX[node]] == value:
                num += p
    return num / den


def random_theta(rng, n, low=0.0, high=1.0):
    return rng.uniform(low, high, size=(n, 4))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


class StubState:
    def __init__(self):
        self.lock = threading.Lock()
        self.in_flight = 0
        self.max_seen = 0
        self.requests = 0
        self.bodies = []
        self.replies = {}        # request number (1-based) -> text or (status, text)
        self.default = "42"
        self.delay = 0.02


@pytest.fixture
def stub_endpoint():
    """Local chat-completion server that counts concurrent requests."""
    state = StubState()

    class Handler(BaseHTTPRequestHandler):
        def log_message(self, *args):
            pass

        def do_POST(self):
            length = int(self.headers.get("Content-Length", 0))
            body = json.loads(self.rfile.read(length))
            with state.lock:
                state.requests += 1
                number = state.requests
                state.in_flight += 1
                state.max_seen = max(state.max_seen, state.in_flight)
                state.bodies.append(body)
            try:
                time.sleep(state.delay)
                reply = state.replies.get(number, state.default)
                status, text = reply if isinstance(reply, tuple) else (200, reply)
                payload = json.dumps({"choices": [{"message": {"role": "assistant", "content": text}}]})
                data = payload.encode() if status == 200 else b'{"error": "stub"}'
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                if status == 429:
                    self.send_header("Retry-After", "0")
                self.end_headers()
                self.wfile.write(data)
            finally:
                with state.lock:
                    state.in_flight -= 1

    server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    state.url = f"http://127.0.0.1:{server.server_address[1]}/v1"
    yield state
    server.shutdown()
    server.server_close()


_ACCEPTANCE = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "acceptance" in report.keywords:
        _ACCEPTANCE.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
