"""Local TCP service exposing one EditSession to a UI client.

Framing: each message is a 4-byte big-endian length, then a 1-byte type,
then the body (length counts type byte + body). Type 'J' carries a UTF-8
JSON object. Type 'B' carries packed point records, 23 bytes each:
id int64 LE, position 3 x float32 LE, color 3 x uint8.

Requests are JSON: {"id": n, "verb": ..., "params": {...}}. Every request
gets exactly one JSON response with the same id; get_cloud first streams
zero or more 'B' frames of at most 65,536 points each, then its response.
One client at a time; requests are processed strictly in arrival order.
"""
from __future__ import annotations

import json
import socket
import struct
import threading

import numpy as np

from .cloud import PointCloud
from .errors import (
    CloudSketchError,
    EmptyCloud,
    EmptyStroke,
    InvalidParams,
    NoPendingEdit,
    NothingToUndo,
    ParseError,
    TooFewPoints,
    UnknownTool,
)
from .formats.ply import read_ply, write_ply
from .toolbox import EditSession, ToolInvocation, invoke_tool

FRAME_HEADER = struct.Struct(">I")
JSON_FRAME = b"J"
BINARY_FRAME = b"B"
CHUNK_POINTS = 65_536
POINT_RECORD = np.dtype(
    [("id", "<i8"), ("x", "<f4"), ("y", "<f4"), ("z", "<f4"),
     ("r", "u1"), ("g", "u1"), ("b", "u1")]
)

ERROR_CODES = {
    NoPendingEdit: "NO_PENDING",
    NothingToUndo: "NOTHING_TO_UNDO",
    UnknownTool: "UNKNOWN_TOOL",
    InvalidParams: "INVALID_PARAMS",
    TooFewPoints: "TOO_FEW_POINTS",
    EmptyStroke: "EMPTY_STROKE",
    EmptyCloud: "EMPTY_CLOUD",
    ParseError: "PARSE_ERROR",
}

VERBS = ("load", "get_cloud", "tool", "preview_diff", "commit", "discard",
         "undo", "export", "stats")


class RequestError(Exception):
    def __init__(self, code, message):
        self.code = code
        super().__init__(message)


def _error_code(exc) -> str:
    # most specific class first: InvalidParams subclasses ParseError
    for klass in type(exc).__mro__:
        if klass in ERROR_CODES:
            return ERROR_CODES[klass]
    return "ERROR"


def send_frame(sock, kind: bytes, body: bytes) -> None:
    sock.sendall(FRAME_HEADER.pack(len(body) + 1) + kind + body)


def recv_frame(sock):
    """Read one frame; returns (kind, body) or None when the peer closed."""
    header = _recv_exact(sock, FRAME_HEADER.size)
    if header is None:
        return None
    length = FRAME_HEADER.unpack(header)[0]
    if length < 1:
        raise ConnectionError("zero-length frame")
    payload = _recv_exact(sock, length)
    if payload is None:
        raise ConnectionError("connection closed mid-frame")
    return payload[:1], payload[1:]


def _recv_exact(sock, n):
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            return None if not buf else _raise_truncated()
        buf.extend(chunk)
    return bytes(buf)


def _raise_truncated():
    raise ConnectionError("connection closed mid-frame")


def pack_points(cloud: PointCloud, start: int, stop: int) -> bytes:
    rec = np.empty(stop - start, dtype=POINT_RECORD)
    rec["id"] = cloud.ids[start:stop]
    pos32 = cloud.positions[start:stop].astype(np.float32)
    rec["x"], rec["y"], rec["z"] = pos32[:, 0], pos32[:, 1], pos32[:, 2]
    colors = cloud.colors[start:stop]
    rec["r"], rec["g"], rec["b"] = colors[:, 0], colors[:, 1], colors[:, 2]
    return rec.tobytes()


def unpack_points(body: bytes):
    """Inverse of pack_points: (ids, float32 positions, colors)."""
    rec = np.frombuffer(body, dtype=POINT_RECORD)
    positions = np.column_stack([rec["x"], rec["y"], rec["z"]]).astype(np.float64)
    colors = np.column_stack([rec["r"], rec["g"], rec["b"]])
    return rec["id"].copy(), positions, colors


class SessionService:
    """Single-client request/response server over an EditSession."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0, session: EditSession = None):
        self.session = session
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listener.bind((host, port))
        self._listener.listen(1)
        self._running = False
        self._thread = None
        self._client = None

    @property
    def address(self):
        return self._listener.getsockname()

    def start(self) -> None:
        """Serve on a background thread until stop()."""
        self._running = True
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._running = False
        # shutdown, not just close: close alone leaves a thread already
        # blocked in accept()/recv() asleep until the next connection
        _shutdown_quietly(self._listener)
        _shutdown_quietly(self._client)
        self._listener.close()
        if self._thread is not None:
            self._thread.join(timeout=5.0)
            self._thread = None

    def serve_forever(self) -> None:
        """Accept one client at a time and process its requests in order."""
        self._running = True
        while self._running:
            try:
                conn, _ = self._listener.accept()
            except OSError:
                break
            self._client = conn
            with conn:
                try:
                    self._serve_client(conn)
                except (ConnectionError, OSError):
                    pass  # client vanished; wait for the next one
            self._client = None

    def _serve_client(self, conn) -> None:
        while True:
            frame = recv_frame(conn)
            if frame is None:
                return
            kind, body = frame
            request_id = None
            try:
                if kind != JSON_FRAME:
                    raise RequestError("BAD_REQUEST", "requests must be JSON frames")
                try:
                    request = json.loads(body.decode("utf-8"))
                except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                    raise RequestError("BAD_REQUEST", "malformed JSON: %s" % exc)
                if not isinstance(request, dict):
                    raise RequestError("BAD_REQUEST", "request must be an object")
                request_id = request.get("id")
                verb = request.get("verb")
                if verb not in VERBS:
                    raise RequestError("BAD_REQUEST", "unknown verb %r" % verb)
                params = request.get("params") or {}
                payload = self._dispatch(conn, verb, params)
                response = {"id": request_id, "ok": True, "payload": payload}
            except RequestError as exc:
                response = _error_response(request_id, exc.code, str(exc))
            except CloudSketchError as exc:
                response = _error_response(request_id, _error_code(exc), str(exc))
            except OSError as exc:
                response = _error_response(request_id, "IO_ERROR", str(exc))
            send_frame(conn, JSON_FRAME, json.dumps(response).encode("utf-8"))

    def _require_session(self) -> EditSession:
        if self.session is None:
            raise RequestError("NOT_LOADED", "no cloud loaded")
        return self.session

    def _dispatch(self, conn, verb, params):
        if verb == "load":
            path = params.get("path")
            if not isinstance(path, str):
                raise RequestError("BAD_REQUEST", "load needs a path")
            self.session = EditSession(read_ply(path))
            return {"count": len(self.session.committed)}

        session = self._require_session()
        if verb == "get_cloud":
            cloud = session.committed
            chunks = 0
            for start in range(0, len(cloud), CHUNK_POINTS):
                stop = min(start + CHUNK_POINTS, len(cloud))
                send_frame(conn, BINARY_FRAME, pack_points(cloud, start, stop))
                chunks += 1
            return {"count": len(cloud), "chunks": chunks, "chunk_points": CHUNK_POINTS}
        if verb == "tool":
            record = params.get("record")
            if not isinstance(record, dict) or "tool" not in record:
                raise RequestError("BAD_REQUEST", 'tool needs a {"tool": ...} record')
            tool = record["tool"]
            rest = {k: v for k, v in record.items() if k != "tool"}
            edit = invoke_tool(session, ToolInvocation(tool, rest))
            return {"added": edit.added_count, "removed": edit.removed_count}
        if verb == "preview_diff":
            edit = session.pending
            if edit is None:
                raise NoPendingEdit("no pending edit to diff")
            added = [
                [int(pid), float(p[0]), float(p[1]), float(p[2]),
                 int(c[0]), int(c[1]), int(c[2])]
                for pid, p, c in zip(edit.added.ids, edit.added.positions,
                                     edit.added.colors)
            ]
            return {"added": added, "removed": [int(i) for i in edit.removed_ids]}
        if verb == "commit":
            session.commit()
            return {"count": len(session.committed)}
        if verb == "discard":
            session.discard()
            return {}
        if verb == "undo":
            session.undo()
            return {"count": len(session.committed)}
        if verb == "export":
            path = params.get("path")
            if not isinstance(path, str):
                raise RequestError("BAD_REQUEST", "export needs a path")
            fmt = params.get("format", "binary_le")
            if fmt not in ("ascii", "binary_le"):
                raise RequestError("BAD_REQUEST", "format must be ascii or binary_le")
            write_ply(session.committed, path, format=fmt)
            return {"count": len(session.committed), "path": path}
        if verb == "stats":
            cloud = session.committed
            payload = {
                "count": len(cloud),
                "has_pending": session.pending is not None,
                "history_depth": len(session.history),
            }
            if len(cloud):
                payload["min"] = [float(v) for v in cloud.positions.min(axis=0)]
                payload["max"] = [float(v) for v in cloud.positions.max(axis=0)]
            return payload
        raise RequestError("BAD_REQUEST", "unknown verb %r" % verb)


def _shutdown_quietly(sock) -> None:
    if sock is None:
        return
    try:
        sock.shutdown(socket.SHUT_RDWR)
    except OSError:
        pass


def _error_response(request_id, code, message):
    return {"id": request_id, "ok": False, "error": {"code": code, "message": message}}


class ServiceClient:
    """Minimal blocking client for tests and scripting."""

    def __init__(self, host: str, port: int):
        self._sock = socket.create_connection((host, port))
        self._next_id = 1

    def close(self) -> None:
        self._sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def call(self, verb: str, params: dict = None):
        """Send one request; returns (response, binary chunks)."""
        request_id = self._next_id
        self._next_id += 1
        body = json.dumps({"id": request_id, "verb": verb, "params": params or {}})
        send_frame(self._sock, JSON_FRAME, body.encode("utf-8"))
        chunks = []
        while True:
            frame = recv_frame(self._sock)
            if frame is None:
                raise ConnectionError("service closed the connection")
            kind, payload = frame
            if kind == BINARY_FRAME:
                chunks.append(payload)
                continue
            response = json.loads(payload.decode("utf-8"))
            return response, chunks

    def get_cloud(self):
        """Fetch the committed cloud as (ids, positions, colors)."""
        response, chunks = self.call("get_cloud")
        if not response["ok"]:
            raise RuntimeError(response["error"]["message"])
        if not chunks:
            return (np.empty(0, np.int64), np.empty((0, 3)), np.empty((0, 3), np.uint8))
        parts = [unpack_points(c) for c in chunks]
        return (
            np.concatenate([p[0] for p in parts]),
            np.vstack([p[1] for p in parts]),
            np.vstack([p[2] for p in parts]).astype(np.uint8),
        )
