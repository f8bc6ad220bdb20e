"""Wire-protocol client for out-of-process scorer backends.

The protocol is newline-delimited UTF-8 JSON over a byte stream (a child
process's standard streams, or a TCP connection): one request per line,
one response per line, strictly ordered. A connection starts with a hello
handshake that reports capabilities, vocabulary size, and the EOS id.

    -> {"op":"hello"}                                <- {"caps":[...],"vocab_size":N,"eos_id":E}
    -> {"op":"tokenize","text":S}                    <- {"ids":[...]}
    -> {"op":"next","source":S,"prefix":[],"cands":[]}  <- {"probs":[...]}
    -> {"op":"generate","source":S,"max_len":L}      <- {"text":...}

Any response of the form {"error": message} raises BackendError. Requests
are serialized per connection with a lock; run one connection per worker
for parallelism.
"""

from __future__ import annotations

import json
import shlex
import socket
import subprocess
import threading
from typing import Sequence

from .errors import BackendError, ValidationError
from .scoring import MockScorer, ScorerBackend


class _WireBackend(ScorerBackend):
    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._caps: frozenset[str] = frozenset()
        self._vocab_size = 0
        self._eos_id = 0

    @property
    def caps(self) -> frozenset[str]:  # type: ignore[override]
        return self._caps

    @property
    def vocab_size(self) -> int:  # type: ignore[override]
        return self._vocab_size

    @property
    def eos_id(self) -> int:  # type: ignore[override]
        return self._eos_id

    def _send(self, line: str) -> None:
        raise NotImplementedError

    def _recv(self) -> str:
        raise NotImplementedError

    def _roundtrip(self, request: dict) -> dict:
        line = json.dumps(request, ensure_ascii=False)
        with self._lock:
            try:
                self._send(line)
                raw = self._recv()
            except OSError as exc:
                raise BackendError(f"backend connection failed: {exc}") from exc
        if not raw:
            raise BackendError(
                f"backend closed the stream during op {request.get('op')!r}")
        try:
            resp = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise BackendError(f"invalid JSON from backend: {raw!r}") from exc
        if not isinstance(resp, dict):
            raise BackendError(f"non-object response from backend: {resp!r}")
        if "error" in resp:
            raise BackendError(
                f"backend error for op {request.get('op')!r}: {resp['error']}")
        return resp

    def _handshake(self) -> None:
        resp = self._roundtrip({"op": "hello"})
        try:
            self._caps = frozenset(str(c) for c in resp["caps"])
            self._vocab_size = int(resp["vocab_size"])
            self._eos_id = int(resp["eos_id"])
        except (KeyError, TypeError, ValueError) as exc:
            raise BackendError(f"malformed hello response: {resp!r}") from exc

    def tokenize(self, text: str) -> list[int]:
        resp = self._roundtrip({"op": "tokenize", "text": text})
        ids = resp.get("ids")
        if not isinstance(ids, list):
            raise BackendError(f"malformed tokenize response: {resp!r}")
        return [int(i) for i in ids]

    def next_token(self, source: str, prefix: Sequence[int],
                   cands: Sequence[int]) -> list[float]:
        resp = self._roundtrip({"op": "next", "source": source,
                                "prefix": [int(t) for t in prefix],
                                "cands": [int(t) for t in cands]})
        probs = resp.get("probs")
        if not isinstance(probs, list) or len(probs) != len(cands):
            raise BackendError(f"malformed next response: {resp!r}")
        return [float(p) for p in probs]

    def generate(self, source: str, max_len: int = 64) -> str:
        resp = self._roundtrip({"op": "generate", "source": source,
                                "max_len": int(max_len)})
        text = resp.get("text")
        if not isinstance(text, str):
            raise BackendError(f"malformed generate response: {resp!r}")
        return text


class CommandBackend(_WireBackend):
    """Backend served by a child process on its standard streams."""

    def __init__(self, argv: Sequence[str]):
        super().__init__()
        try:
            self._proc = subprocess.Popen(
                list(argv), stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                text=True, encoding="utf-8", bufsize=1)
        except OSError as exc:
            raise BackendError(f"cannot launch backend {list(argv)!r}: {exc}") from exc
        try:
            self._handshake()
        except BackendError:
            self.close()
            raise

    def _send(self, line: str) -> None:
        assert self._proc.stdin is not None
        try:
            self._proc.stdin.write(line + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, ValueError) as exc:
            raise BackendError(f"backend process is gone: {exc}") from exc

    def _recv(self) -> str:
        assert self._proc.stdout is not None
        return self._proc.stdout.readline().rstrip("\n")

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                if self._proc.stdin is not None:
                    self._proc.stdin.close()
                self._proc.terminate()
                self._proc.wait(timeout=5)
            except (OSError, subprocess.TimeoutExpired):
                self._proc.kill()
                self._proc.wait(timeout=5)


class TcpBackend(_WireBackend):
    """Backend served over a TCP connection."""

    def __init__(self, host: str, port: int, timeout: float = 60.0):
        super().__init__()
        try:
            self._sock = socket.create_connection((host, port), timeout=timeout)
            self._reader = self._sock.makefile("r", encoding="utf-8", newline="\n")
            self._writer = self._sock.makefile("w", encoding="utf-8", newline="\n")
        except OSError as exc:
            raise BackendError(f"cannot connect to {host}:{port}: {exc}") from exc
        self._handshake()

    def _send(self, line: str) -> None:
        self._writer.write(line + "\n")
        self._writer.flush()

    def _recv(self) -> str:
        return self._reader.readline().rstrip("\n")

    def close(self) -> None:
        for stream in (getattr(self, "_writer", None), getattr(self, "_reader", None),
                       getattr(self, "_sock", None)):
            if stream is not None:
                try:
                    stream.close()
                except OSError:
                    pass


def create_backend(spec: str, seed: int | None = None) -> ScorerBackend:
    """Instantiate a backend from a spec string.

    "mock" or "mock:<seed>" build an in-process MockScorer (the bare form
    takes its seed from the `seed` argument); "cmd:<command line>" launches
    a child process; "tcp:<host>:<port>" connects to a running server.
    """
    if spec == "mock" or spec.startswith("mock:"):
        if spec == "mock":
            mock_seed = seed
        else:
            try:
                mock_seed = int(spec.split(":", 1)[1])
            except ValueError:
                raise ValidationError(f"bad mock seed in backend spec {spec!r}") from None
        return MockScorer(seed=mock_seed)
    if spec.startswith("cmd:"):
        argv = shlex.split(spec[len("cmd:"):])
        if not argv:
            raise ValidationError("empty command in backend spec")
        return CommandBackend(argv)
    if spec.startswith("tcp:"):
        host, sep, port_text = spec[len("tcp:"):].rpartition(":")
        if not sep or not host:
            raise ValidationError(f"backend spec {spec!r} must look like tcp:host:port")
        try:
            port = int(port_text)
        except ValueError:
            raise ValidationError(f"bad port in backend spec {spec!r}") from None
        return TcpBackend(host, port)
    raise ValidationError(
        f"unrecognized backend spec {spec!r} (expected mock[:seed], cmd:..., or tcp:host:port)")
