"""The scorer wire protocol served from a loaded seq2seq model.

One JSON request per line, one JSON response per line, in order. Any
exception while handling a request becomes an {"error": ...} response;
the process stays alive. Requests are handled strictly sequentially, so
a single connection sees fully serialized semantics.
"""

from __future__ import annotations

import json
import logging
import socket
import sys
from collections import OrderedDict

import torch

from .errors import BridgeError

logger = logging.getLogger(__name__)

CAPS = ("tokenize", "next_token", "generate")


def _int_list(value, what: str) -> list[int]:
    if not isinstance(value, list) or not all(
            isinstance(v, int) and not isinstance(v, bool) for v in value):
        raise BridgeError(f"{what} must be a list of integers")
    return value


class ScorerService:
    """Stateless request handler around one model + tokenizer pair."""

    def __init__(self, model, tokenizer, max_source_len: int = 256,
                 max_target_len: int = 64, device: str = "cpu",
                 encoder_cache_size: int = 8):
        if max_source_len <= 0 or max_target_len <= 0:
            raise BridgeError("sequence length limits must be positive")
        self.model = model.to(device).eval()
        self.tokenizer = tokenizer
        self.max_source_len = max_source_len
        self.max_target_len = max_target_len
        self.device = device
        # scoring walks one source against many prefixes, so a handful of
        # cached encoder states removes nearly all encoder recomputation
        self._encoded: OrderedDict[tuple, tuple] = OrderedDict()
        self._cache_size = encoder_cache_size

    def hello(self) -> dict:
        return {"caps": list(CAPS),
                "vocab_size": self.tokenizer.vocab_size,
                "eos_id": self.tokenizer.eos_id}

    def tokenize(self, text) -> dict:
        if not isinstance(text, str):
            raise BridgeError("tokenize needs a string 'text'")
        return {"ids": self.tokenizer.encode(text)}

    def _encode_source(self, source: str):
        ids = tuple(self.tokenizer.encode(source)[: self.max_source_len])
        ids = ids or (self.tokenizer.eos_id,)
        hit = self._encoded.get(ids)
        if hit is not None:
            self._encoded.move_to_end(ids)
            return hit
        input_ids = torch.tensor([ids], device=self.device)
        mask = torch.ones_like(input_ids)
        with torch.no_grad():
            outputs = self.model.get_encoder()(input_ids=input_ids,
                                               attention_mask=mask)
        self._encoded[ids] = (outputs, mask)
        if len(self._encoded) > self._cache_size:
            self._encoded.popitem(last=False)
        return outputs, mask

    def _next_distribution(self, source: str, prefix: list[int]):
        outputs, mask = self._encode_source(source)
        start = self.model.config.decoder_start_token_id
        decoder_ids = torch.tensor([[start] + prefix], device=self.device)
        with torch.no_grad():
            logits = self.model(encoder_outputs=outputs, attention_mask=mask,
                                decoder_input_ids=decoder_ids).logits
        return torch.softmax(logits[0, -1].float(), dim=-1)

    def next(self, source, prefix, cands) -> dict:
        if not isinstance(source, str):
            raise BridgeError("next needs a string 'source'")
        prefix = _int_list(prefix, "prefix")
        cands = _int_list(cands, "cands")
        if not cands:
            raise BridgeError("cands must be non-empty")
        vocab = self.tokenizer.vocab_size
        for i in list(prefix) + list(cands):
            if not 0 <= i < vocab:
                raise BridgeError(f"token id {i} outside vocabulary of {vocab}")
        probs = self._next_distribution(source, prefix)
        return {"probs": [float(probs[c]) for c in cands]}

    def generate(self, source, max_len) -> dict:
        if not isinstance(source, str):
            raise BridgeError("generate needs a string 'source'")
        if not isinstance(max_len, int) or max_len <= 0:
            raise BridgeError("max_len must be a positive integer")
        limit = min(max_len, self.max_target_len)
        ids: list[int] = []
        for _ in range(limit):
            probs = self._next_distribution(source, ids)
            token = int(torch.argmax(probs))
            if token == self.tokenizer.eos_id:
                break
            ids.append(token)
        return {"text": self.tokenizer.decode(ids)}

    def handle(self, request: dict) -> dict:
        try:
            if not isinstance(request, dict):
                raise BridgeError("request must be a JSON object")
            op = request.get("op")
            if op == "hello":
                return self.hello()
            if op == "tokenize":
                return self.tokenize(request.get("text"))
            if op == "next":
                return self.next(request.get("source"),
                                 request.get("prefix"),
                                 request.get("cands"))
            if op == "generate":
                return self.generate(request.get("source"),
                                     request.get("max_len", 64))
            raise BridgeError(f"unknown op {op!r}")
        except Exception as exc:  # noqa: BLE001 - the wire carries the error
            return {"error": f"{type(exc).__name__}: {exc}"}


def serve_lines(service: ScorerService, rfile, wfile) -> None:
    for line in rfile:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
        except json.JSONDecodeError as exc:
            response = {"error": f"invalid JSON: {exc}"}
        else:
            response = service.handle(request)
        wfile.write(json.dumps(response, ensure_ascii=False) + "\n")
        wfile.flush()


def serve_stdio(service: ScorerService) -> None:
    serve_lines(service, sys.stdin, sys.stdout)


def serve_tcp(service: ScorerService, host: str, port: int) -> None:
    with socket.create_server((host, port)) as server:
        actual_host, actual_port = server.getsockname()[:2]
        logger.info("listening on %s:%d", actual_host, actual_port)
        while True:
            conn, peer = server.accept()
            logger.info("connection from %s:%d", *peer[:2])
            with conn, conn.makefile("r", encoding="utf-8") as rfile, \
                    conn.makefile("w", encoding="utf-8") as wfile:
                try:
                    serve_lines(service, rfile, wfile)
                except (BrokenPipeError, ConnectionResetError):
                    logger.info("connection dropped")
