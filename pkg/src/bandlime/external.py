"""Client for out-of-process predictors.

The predictor runs as a child process and speaks line-delimited JSON
(one object per line, UTF-8) over its standard input/output:

  child -> {"type": "hello", "n_classes": K, "labels": [...]}   first line
  us    -> {"type": "predict", "id": n, "sample_rate": sr,
            "samples_b64": base64 of little-endian float32}
  child -> {"type": "prediction", "id": n, "probs": [K floats]}  any order
  us    -> {"type": "bye"}                                       then close

Unknown fields in a message are ignored. Responses may arrive out of
order; results are reassembled by id so callers always see mask order.
"""

from __future__ import annotations

import base64
import json
import queue
import shlex
import subprocess
import threading
from typing import Sequence

import numpy as np

from bandlime.audio import AudioClip
from bandlime.explainer import Predictor, PredictorError

DEFAULT_TIMEOUT_S = 30.0


class ProtocolError(PredictorError):
    """The child process violated the wire protocol."""


class PredictorTimeout(PredictorError):
    """The child process did not answer within the per-request timeout."""


class ExternalPredictor(Predictor):
    """Predictor backed by a child process speaking the wire protocol.

    The constructor spawns the process and blocks until its hello line
    arrives. Writes to one process are serialized, so a single instance is
    safe to share but will not answer batches concurrently.
    """

    concurrent_safe = False

    def __init__(self, command: str | Sequence[str], timeout_s: float = DEFAULT_TIMEOUT_S):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        if not argv:
            raise ValueError("empty predictor command")
        self.command = argv
        self.timeout_s = timeout_s
        self._lock = threading.Lock()
        self._next_id = 0
        self._closed = False
        try:
            self._proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
            )
        except OSError as exc:
            raise PredictorError(f"failed to start predictor {argv[0]!r}: {exc}") from exc

        self._lines: queue.Queue[str | None] = queue.Queue()
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()

        try:
            hello = self._next_message()
            if hello.get("type") != "hello":
                raise ProtocolError(f"expected hello, got {hello.get('type')!r}")
            labels = hello.get("labels")
            n_classes = hello.get("n_classes")
            if (
                not isinstance(labels, list)
                or not labels
                or not all(isinstance(v, str) for v in labels)
                or n_classes != len(labels)
            ):
                raise ProtocolError(f"malformed hello: {hello}")
        except PredictorError:
            self._proc.kill()
            self._proc.wait()
            raise
        self.n_classes = int(n_classes)
        self.class_labels = tuple(labels)

    def _read_loop(self) -> None:
        assert self._proc.stdout is not None
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def _next_message(self) -> dict:
        try:
            line = self._lines.get(timeout=self.timeout_s)
        except queue.Empty:
            raise PredictorTimeout(
                f"no reply from predictor within {self.timeout_s:g}s"
            ) from None
        if line is None:
            code = self._proc.poll()
            raise ProtocolError(
                f"predictor closed its output stream (exit code {code})"
            )
        try:
            message = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"malformed line from predictor: {line!r}") from exc
        if not isinstance(message, dict):
            raise ProtocolError(f"malformed line from predictor: {line!r}")
        return message

    def _send(self, message: dict) -> None:
        assert self._proc.stdin is not None
        try:
            self._proc.stdin.write(json.dumps(message) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            code = self._proc.poll()
            raise ProtocolError(
                f"predictor pipe closed while sending (exit code {code})"
            ) from exc

    def predict(self, clips: Sequence[AudioClip]) -> np.ndarray:
        with self._lock:
            if self._closed:
                raise PredictorError("predictor already closed")
            ids = []
            for clip in clips:
                request_id = self._next_id
                self._next_id += 1
                ids.append(request_id)
                raw = np.asarray(clip.samples, dtype="<f4").tobytes()
                self._send(
                    {
                        "type": "predict",
                        "id": request_id,
                        "sample_rate": clip.sample_rate_hz,
                        "samples_b64": base64.b64encode(raw).decode("ascii"),
                    }
                )
            pending = set(ids)
            results: dict[int, list[float]] = {}
            while pending:
                message = self._next_message()
                kind = message.get("type")
                if kind == "error":
                    raise ProtocolError(
                        f"predictor reported an error for id {message.get('id')}"
                    )
                if kind != "prediction":
                    raise ProtocolError(f"unexpected message type {kind!r}")
                request_id = message.get("id")
                if request_id not in pending:
                    raise ProtocolError(f"prediction for unknown id {request_id}")
                probs = message.get("probs")
                if not isinstance(probs, list) or len(probs) != self.n_classes:
                    raise ProtocolError(
                        f"id {request_id}: expected {self.n_classes} probabilities, "
                        f"got {len(probs) if isinstance(probs, list) else probs!r}"
                    )
                pending.discard(request_id)
                results[request_id] = probs
            return np.array([results[i] for i in ids], dtype=np.float64)

    def close(self) -> None:
        with self._lock:
            if self._closed:
                return
            self._closed = True
            try:
                self._send({"type": "bye"})
                self._proc.stdin.close()
            except (ProtocolError, OSError):
                pass
            try:
                self._proc.wait(timeout=5.0)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    def __enter__(self) -> "ExternalPredictor":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()
