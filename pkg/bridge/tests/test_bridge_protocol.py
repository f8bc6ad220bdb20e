"""Transport behavior of the serving process beyond the handshake."""

import json
import re
import subprocess
import sys


def serve_argv(checkpoint):
    return [sys.executable, "-m", "relsum_bridge", "serve",
            "--model", str(checkpoint)]


class TestServeSpecs:
    """The console-script form reaches the same service."""

    def test_console_script_form_also_serves(self, probe, quick_checkpoint):
        summary = probe(f"cmd:relsum-bridge serve --model {quick_checkpoint}")
        assert summary["ok"] is True


class TestLiveConnection:
    """Legal edge requests over an open connection."""

    def test_empty_text_tokenizes_to_nothing(self, live_backend):
        assert live_backend.tokenize("") == []

    def test_generate_round_trip(self, live_backend):
        text = live_backend.generate("Anna was born in Acme .", 8)
        assert isinstance(text, str)
        assert live_backend.generate("Anna was born in Acme .", 8) == text


class TestServiceResilience:
    """Bad requests answer inline; the process keeps serving."""

    def test_errors_do_not_kill_the_connection(self, quick_checkpoint):
        proc = subprocess.Popen(serve_argv(quick_checkpoint),
                                stdin=subprocess.PIPE,
                                stdout=subprocess.PIPE,
                                stderr=subprocess.DEVNULL, text=True)

        def ask(line):
            proc.stdin.write(line + "\n")
            proc.stdin.flush()
            return json.loads(proc.stdout.readline())

        try:
            assert "error" in ask(json.dumps({"op": "teleport"}))
            assert "error" in ask("this is not json")
            assert "error" in ask(json.dumps({"op": "next", "source": "x",
                                              "prefix": [], "cands": []}))
            assert ask(json.dumps({"op": "hello"}))["vocab_size"] > 0
        finally:
            proc.stdin.close()
            assert proc.wait(timeout=30) == 0


class TestTcpTransport:
    """Port 0 binds an ephemeral port and announces it on stderr."""

    def test_probe_over_tcp(self, probe, quick_checkpoint):
        proc = subprocess.Popen(
            serve_argv(quick_checkpoint) + ["--tcp", "127.0.0.1:0"],
            stdout=subprocess.DEVNULL, stderr=subprocess.PIPE, text=True)
        try:
            port = None
            for line in proc.stderr:
                hit = re.search(r"listening on 127\.0\.0\.1:(\d+)", line)
                if hit:
                    port = int(hit.group(1))
                    break
            assert port, "server never announced its port"
            summary = probe(f"tcp:127.0.0.1:{port}")
            assert summary["ok"] is True
        finally:
            proc.terminate()
            proc.wait(timeout=30)
