"""Loopback client/server for the encrypt -> enhance -> re-encrypt round trip.

Every message on the stream is framed as (all integers little-endian)::

    magic b"AVHA" | msg_type u8 | payload_len u32 | payload

PING (1) is answered with a PING carrying the same payload.  ENHANCE_REQ (2)
holds a length-prefixed audio envelope followed by a length-prefixed feature
file.  ENHANCE_RESP (3) holds the length-prefixed envelope of the enhanced
audio followed by three f64 server stage times in milliseconds (decrypt,
enhance, re-encrypt).  ERROR (4) holds a UTF-8 reason; the connection stays
open after it.

No transport security: the digest inside each envelope is in the clear
unless the caller wraps it.
"""

from __future__ import annotations

import asyncio
import logging
import socket
import struct
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .evwf import FeatureTrack, FrameConfig, enhance
from .media import AudioClip, parse_envelope, serialize_envelope
from .pipeline import decrypt_audio, encrypt_audio

log = logging.getLogger(__name__)

MAGIC = b"AVHA"
PING, ENHANCE_REQ, ENHANCE_RESP, ERROR = 1, 2, 3, 4
DEFAULT_PORT = 7050
MAX_PAYLOAD = 64 << 20
_HEADER = struct.Struct("<4sBI")
_U32 = struct.Struct("<I")
_TIMES = struct.Struct("<3d")

STAGES = ("serialize", "round_trip", "server_decrypt", "enhance", "reencrypt")


class ProtocolError(Exception):
    pass


class RemoteError(Exception):
    """The server answered with an ERROR message."""


def frame(msg_type: int, payload: bytes = b"") -> bytes:
    return _HEADER.pack(MAGIC, msg_type, len(payload)) + payload


def pack_blobs(*blobs: bytes) -> bytes:
    return b"".join(_U32.pack(len(b)) + b for b in blobs)


def unpack_blobs(data: bytes, count: int) -> tuple[list[bytes], bytes]:
    out, pos = [], 0
    for _ in range(count):
        if pos + 4 > len(data):
            raise ProtocolError("truncated blob length")
        (n,) = _U32.unpack_from(data, pos)
        pos += 4
        if pos + n > len(data):
            raise ProtocolError("truncated blob")
        out.append(data[pos:pos + n])
        pos += n
    return out, data[pos:]


def parse_stream(data: bytes) -> list[tuple[int, bytes]]:
    """Split a byte string holding whole concatenated messages."""
    msgs, pos = [], 0
    while pos < len(data):
        if pos + _HEADER.size > len(data):
            raise ProtocolError("truncated header")
        magic, kind, n = _HEADER.unpack_from(data, pos)
        if magic != MAGIC:
            raise ProtocolError("bad magic")
        pos += _HEADER.size
        if pos + n > len(data):
            raise ProtocolError("truncated payload")
        msgs.append((kind, data[pos:pos + n]))
        pos += n
    return msgs


# ------------------------------------------------------------------ server

class EnhanceServer:
    def __init__(self, host: str = "127.0.0.1", port: int = DEFAULT_PORT,
                 cfg: FrameConfig = FrameConfig(), workers: int = 4,
                 on_enhanced=None):
        self.host = host
        self.port = port
        self.cfg = cfg
        self.on_enhanced = on_enhanced
        self._pool = ThreadPoolExecutor(max_workers=workers)
        self._server = None

    def process(self, payload: bytes) -> bytes:
        """Handle one ENHANCE_REQ payload and return the ENHANCE_RESP payload."""
        (env_blob, feat_blob), _ = unpack_blobs(payload, 2)
        t0 = time.perf_counter()
        noisy = decrypt_audio(parse_envelope(env_blob), self.cfg.sample_rate)
        t1 = time.perf_counter()
        feats = FeatureTrack.from_text(feat_blob.decode("utf-8"), self.cfg.n_channels)
        clean = enhance(noisy, feats, self.cfg)
        t2 = time.perf_counter()
        out = serialize_envelope(encrypt_audio(clean))
        t3 = time.perf_counter()
        if self.on_enhanced is not None:
            self.on_enhanced(clean)
        times = _TIMES.pack((t1 - t0) * 1e3, (t2 - t1) * 1e3, (t3 - t2) * 1e3)
        return pack_blobs(out) + times

    async def _handle(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        loop = asyncio.get_running_loop()
        try:
            while True:
                try:
                    head = await reader.readexactly(_HEADER.size)
                except asyncio.IncompleteReadError:
                    break
                magic, kind, n = _HEADER.unpack(head)
                if n > MAX_PAYLOAD:
                    writer.write(frame(ERROR, b"payload too large"))
                    await writer.drain()
                    break
                payload = await reader.readexactly(n)
                if magic != MAGIC:
                    reply = frame(ERROR, b"bad magic")
                elif kind == PING:
                    reply = frame(PING, payload)
                elif kind == ENHANCE_REQ:
                    try:
                        body = await loop.run_in_executor(self._pool, self.process, payload)
                        reply = frame(ENHANCE_RESP, body)
                    except Exception as exc:  # every failure becomes an ERROR reply
                        log.debug("request failed: %s", exc)
                        reply = frame(ERROR, str(exc).encode("utf-8"))
                else:
                    reply = frame(ERROR, f"unknown message type {kind}".encode())
                writer.write(reply)
                await writer.drain()
        except (ConnectionError, asyncio.IncompleteReadError):
            pass
        finally:
            writer.close()

    async def start(self) -> None:
        self._server = await asyncio.start_server(self._handle, self.host, self.port)
        self.port = self._server.sockets[0].getsockname()[1]
        log.info("listening on %s:%d", self.host, self.port)

    async def serve_forever(self) -> None:
        if self._server is None:
            await self.start()
        async with self._server:
            await self._server.serve_forever()

    def close(self) -> None:
        if self._server is not None:
            self._server.close()
        self._pool.shutdown(wait=False)


def serve(host: str = "127.0.0.1", port: int = DEFAULT_PORT,
          cfg: FrameConfig = FrameConfig()) -> None:
    """Run until interrupted."""
    server = EnhanceServer(host, port, cfg)
    try:
        asyncio.run(server.serve_forever())
    except KeyboardInterrupt:
        log.info("shutting down")
    finally:
        server.close()


class BackgroundServer:
    """Run an :class:`EnhanceServer` on its own event loop thread."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0, **kwargs):
        self.server = EnhanceServer(host, port, **kwargs)
        self._loop = asyncio.new_event_loop()
        self._thread = threading.Thread(target=self._loop.run_forever, daemon=True)

    @property
    def address(self) -> tuple[str, int]:
        return self.server.host, self.server.port

    def __enter__(self):
        self._thread.start()
        asyncio.run_coroutine_threadsafe(self.server.start(), self._loop).result()
        return self

    def __exit__(self, *exc):
        async def _stop():
            self.server.close()
            await self.server._server.wait_closed()

        asyncio.run_coroutine_threadsafe(_stop(), self._loop).result(timeout=5)
        self._loop.call_soon_threadsafe(self._loop.stop)
        self._thread.join(timeout=5)


# ------------------------------------------------------------------ client

@dataclass
class LatencyReport:
    samples: list[dict] = field(default_factory=list)

    def add(self, sample: dict) -> None:
        self.samples.append(sample)

    def aggregates(self) -> dict[str, dict[str, float]]:
        if not self.samples:
            raise ValueError("no latency samples")
        out = {}
        for stage in STAGES:
            v = np.array([s[stage] for s in self.samples])
            out[stage] = {
                "p50": float(np.percentile(v, 50)),
                "p95": float(np.percentile(v, 95)),
                "max": float(v.max()),
            }
        return out

    def to_text(self) -> str:
        lines = [f"requests = {len(self.samples)}  (loopback; not comparable to 5G radio figures)"]
        for stage, agg in self.aggregates().items():
            lines.append(f"{stage:15s} p50 {agg['p50']:9.3f} ms  p95 {agg['p95']:9.3f} ms"
                         f"  max {agg['max']:9.3f} ms")
        return "\n".join(lines) + "\n"


class Client:
    def __init__(self, host: str = "127.0.0.1", port: int = DEFAULT_PORT, timeout: float = 10.0,
                 sample_rate: int = 50_000):
        self.sample_rate = sample_rate
        self.sock = socket.create_connection((host, port), timeout=timeout)
        self.sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)

    def close(self) -> None:
        self.sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _recv_exactly(self, n: int) -> bytes:
        buf = bytearray()
        while len(buf) < n:
            chunk = self.sock.recv(n - len(buf))
            if not chunk:
                raise ConnectionError("server closed the connection")
            buf += chunk
        return bytes(buf)

    def send_raw(self, data: bytes) -> None:
        self.sock.sendall(data)

    def recv(self) -> tuple[int, bytes]:
        magic, kind, n = _HEADER.unpack(self._recv_exactly(_HEADER.size))
        if magic != MAGIC:
            raise ProtocolError("bad magic from server")
        return kind, self._recv_exactly(n)

    def call(self, msg_type: int, payload: bytes) -> tuple[int, bytes]:
        self.send_raw(frame(msg_type, payload))
        return self.recv()

    def ping(self, payload: bytes = b"") -> bytes:
        kind, body = self.call(PING, payload)
        if kind != PING:
            raise ProtocolError(f"expected PING echo, got type {kind}")
        return body

    def enhance(self, noisy: AudioClip, feats: FeatureTrack) -> tuple[AudioClip, dict]:
        t0 = time.perf_counter()
        payload = pack_blobs(serialize_envelope(encrypt_audio(noisy)), feats.to_text().encode())
        t1 = time.perf_counter()
        kind, body = self.call(ENHANCE_REQ, payload)
        t2 = time.perf_counter()
        if kind == ERROR:
            raise RemoteError(body.decode("utf-8", errors="replace"))
        if kind != ENHANCE_RESP:
            raise ProtocolError(f"unexpected message type {kind}")
        (env_blob,), rest = unpack_blobs(body, 1)
        dec, enh, reenc = _TIMES.unpack(rest)
        clip = decrypt_audio(parse_envelope(env_blob), self.sample_rate)
        t3 = time.perf_counter()
        times = {
            "serialize": (t1 - t0) * 1e3,
            "round_trip": (t2 - t1) * 1e3,
            "server_decrypt": dec,
            "enhance": enh,
            "reencrypt": reenc,
            "client_decrypt": (t3 - t2) * 1e3,
        }
        return clip, times


def request_enhance(host: str, port: int, noisy: AudioClip, feats: FeatureTrack,
                    timeout: float = 10.0) -> tuple[AudioClip, LatencyReport]:
    with Client(host, port, timeout, noisy.sample_rate) as c:
        clip, times = c.enhance(noisy, feats)
    report = LatencyReport()
    report.add(times)
    return clip, report
