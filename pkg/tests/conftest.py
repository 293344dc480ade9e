import base64
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from speechlens import cli
from speechlens.audio import load_dataset
from speechlens.oracle import Oracle, oracle_from_config
from speechlens.render import load_json

# ---------------------------------------------------------------------------
# acceptance summary: one PASS/FAIL line per criterion at the end of the run

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(name): names the acceptance criterion a test verifies"
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call":
        marker = item.get_closest_marker("criterion")
        if marker:
            _criteria[marker.args[0]] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _criteria:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, outcome in _criteria.items():
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{name}: {verdict}")


# ---------------------------------------------------------------------------
# shared fixtures


class CountingOracle(Oracle):
    """Wraps an oracle and counts how many predictions it was asked for."""

    def __init__(self, inner):
        self.inner = inner
        self.sample_rate = inner.sample_rate
        self.schema = inner.schema
        self.n_predictions = 0
        self.n_batches = 0

    def predict(self, w):
        self.n_predictions += 1
        return self.inner.predict(w)

    def predict_batch(self, ws):
        ws = list(ws)
        self.n_batches += 1
        self.n_predictions += len(ws)
        return self.inner.predict_batch(ws)


@pytest.fixture
def wrap_counting():
    return CountingOracle


class ToyDataset:
    def __init__(self, root):
        self.root = root
        self.manifest = root / "manifest.json"
        self.oracle_config = load_json((root / "oracle.json").read_text(encoding="utf-8"))
        self.utterances, self.rejected = load_dataset(self.manifest)

    def make_oracle(self):
        return oracle_from_config(self.oracle_config)


@pytest.fixture(scope="session")
def toy50(tmp_path_factory):
    """50 generated utterances, built through the command line for realism."""
    root = tmp_path_factory.mktemp("toy50") / "data"
    code = cli.main(["gen-toy", "--out", str(root), "--n", "50",
                     "--classes", "4", "--seed", "11"])
    assert code == 0
    ds = ToyDataset(root)
    assert len(ds.utterances) == 50 and not ds.rejected
    return ds


@pytest.fixture(scope="session")
def toy8(tmp_path_factory):
    root = tmp_path_factory.mktemp("toy8") / "data"
    code = cli.main(["gen-toy", "--out", str(root), "--n", "8",
                     "--classes", "4", "--seed", "3"])
    assert code == 0
    return ToyDataset(root)


# ---------------------------------------------------------------------------
# stand-in model server for RemoteOracle tests


class _StubHandler(BaseHTTPRequestHandler):
    """Classifies by RMS, so tests can see the sample payload arrive intact.

    Behavior is switched through the server's `mode` attribute; anything
    other than "ok" simulates one specific server defect.
    """

    def log_message(self, *args):
        pass

    def _send(self, obj, status=200):
        body = json.dumps(obj).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        if self.path == "/schema":
            self._send({"sample_rate": 16000, "heads": {"level": ["quiet", "loud"]}})
        else:
            self._send({"error": "not found"}, status=404)

    def _predict_one(self, item):
        mode = self.server.mode
        if mode == "unnormalized":
            return {"heads": {"level": {"quiet": 0.6, "loud": 0.6}}}
        if mode == "missing-class":
            return {"heads": {"level": {"quiet": 1.0}}}
        if mode == "negative":
            return {"heads": {"level": {"quiet": 1.1, "loud": -0.1}}}
        raw = base64.b64decode(item["samples_b64"])
        x = np.frombuffer(raw, dtype="<f4").astype(np.float64)
        rms = float(np.sqrt(np.mean(x ** 2))) if len(x) else 0.0
        p_loud = min(rms, 1.0)
        if mode == "drift":
            scale = 1.00003  # inside the renormalization tolerance
            return {"heads": {"level": {"quiet": (1.0 - p_loud) * scale,
                                        "loud": p_loud * scale}}}
        return {"heads": {"level": {"quiet": 1.0 - p_loud, "loud": p_loud}}}

    def do_POST(self):
        n = int(self.headers.get("Content-Length", 0))
        payload = json.loads(self.rfile.read(n))
        if self.server.mode == "bad-json":
            body = b"{broken"
            self.send_response(200)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)
            return
        if self.path == "/predict":
            self._send(self._predict_one(payload))
        elif self.path == "/predict_batch":
            results = [self._predict_one(item) for item in payload["items"]]
            if self.server.mode == "short-batch":
                results = results[:-1]
            self._send({"results": results})
        else:
            self._send({"error": "not found"}, status=404)


class OracleStub:
    def __init__(self, server):
        self._server = server
        self.url = f"http://127.0.0.1:{server.server_port}"

    @property
    def mode(self):
        return self._server.mode

    @mode.setter
    def mode(self, value):
        self._server.mode = value


@pytest.fixture
def oracle_stub():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
    server.mode = "ok"
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield OracleStub(server)
    server.shutdown()
    thread.join(timeout=5)
    server.server_close()
