"""Image/audio codecs, 1-D <-> 2-D reshaping and the ciphertext envelope.

Grayscale images are 2-D ``uint8`` arrays (rows x cols).  Audio is an
:class:`AudioClip` of mono signed 16-bit samples.

Envelope layout (little-endian, 88-byte header followed by the payload)::

    magic      4s   b"AVC1"
    version    u8   1
    media_kind u8   1 = image, 2 = audio; bit 7 set = digest wrapped with a secret
    rows (A)   u32
    cols (B)   u32
    orig_len   u64  pixel count (image) or sample count (audio) before padding
    poly_used  u16  S-box reduction polynomial
    digest     64s  SHA-512 of the plaintext (optionally XOR-wrapped)
    payload    A*B bytes

The digest travels with the ciphertext because the key is derived from the
plaintext and nothing else tells the receiver how to rebuild it.  In the
clear this offers no confidentiality against anyone holding the envelope;
wrapping with a pre-shared 64-byte secret is the minimum for real use.
"""

from __future__ import annotations

import io
import math
import os
import re
import struct
import wave
from dataclasses import dataclass
from typing import BinaryIO, Union

import numpy as np

PathOrFile = Union[str, os.PathLike, BinaryIO]

MAGIC = b"AVC1"
VERSION = 1
KIND_IMAGE = 1
KIND_AUDIO = 2
FLAG_WRAPPED = 0x80
_HEADER = struct.Struct("<4sBBIIQH64s")
HEADER_SIZE = _HEADER.size


class FormatError(ValueError):
    """Malformed or inconsistent input."""


class UnsupportedFormat(FormatError):
    pass


class TruncatedPayload(FormatError):
    pass


@dataclass(eq=False)
class AudioClip:
    sample_rate: int
    samples: np.ndarray

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError("sample rate must be positive")
        self.samples = np.asarray(self.samples, dtype=np.int16).reshape(-1)

    def __len__(self):
        return self.samples.size

    def __eq__(self, other):
        if not isinstance(other, AudioClip):
            return NotImplemented
        return (self.sample_rate == other.sample_rate
                and np.array_equal(self.samples, other.samples))


# ---------------------------------------------------------------- grayscale

def rgb_to_gray(rgb) -> np.ndarray:
    """Luma ``round(0.299 R + 0.587 G + 0.114 B)`` with halves rounded up."""
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.shape[-1] != 3:
        raise ValueError("expected a trailing RGB axis of length 3")
    luma = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    return np.clip(np.floor(luma + 0.5), 0, 255).astype(np.uint8)


# ------------------------------------------------------------- audio <-> 2D

def audio_bytes(clip: AudioClip) -> bytes:
    return clip.samples.astype("<i2").tobytes()


def matrix_shape(n_bytes: int) -> tuple[int, int]:
    rows = math.isqrt(n_bytes)
    if rows * rows < n_bytes:
        rows += 1
    return rows, -(-n_bytes // rows)


def audio_to_matrix(clip: AudioClip) -> tuple[np.ndarray, int]:
    if len(clip) == 0:
        raise ValueError("empty audio clip")
    raw = np.frombuffer(audio_bytes(clip), dtype=np.uint8)
    rows, cols = matrix_shape(raw.size)
    m = np.zeros(rows * cols, dtype=np.uint8)
    m[: raw.size] = raw
    return m.reshape(rows, cols), len(clip)


def matrix_to_audio(m: np.ndarray, orig_len: int, sample_rate: int) -> AudioClip:
    flat = np.ascontiguousarray(m, dtype=np.uint8).reshape(-1)
    if 2 * orig_len > flat.size:
        raise FormatError(f"matrix of {flat.size} bytes cannot hold {orig_len} samples")
    samples = flat[: 2 * orig_len].view("<i2").astype(np.int16)
    return AudioClip(sample_rate, samples)


# --------------------------------------------------------------------- PNM

def _read_all(src: PathOrFile) -> bytes:
    if hasattr(src, "read"):
        return src.read()
    with open(src, "rb") as fh:
        return fh.read()


def _write_all(dst: PathOrFile, data: bytes) -> None:
    if hasattr(dst, "write"):
        dst.write(data)
        return
    with open(dst, "wb") as fh:
        fh.write(data)


_PNM_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n?)*(\S+)")


def _parse_pnm(data: bytes) -> tuple[bytes, int, int, int, bytes]:
    pos = 0
    tokens = []
    for _ in range(4):
        m = _PNM_TOKEN.match(data, pos)
        if m is None:
            raise FormatError("malformed header")
        tokens.append(m.group(1))
        pos = m.end()
    # exactly one whitespace byte separates maxval from the raster
    if pos >= len(data) or data[pos:pos + 1] not in (b" ", b"\t", b"\n", b"\r"):
        if pos >= len(data):
            raise TruncatedPayload("truncated payload")
        raise FormatError("malformed header")
    magic = tokens[0]
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise FormatError("malformed header") from None
    if width < 1 or height < 1:
        raise FormatError("malformed header")
    return magic, width, height, maxval, data[pos + 1:]


def load_image(src: PathOrFile) -> np.ndarray:
    """Read a binary PGM (P5) or PPM (P6, converted to gray) with maxval 255."""
    magic, width, height, maxval, raster = _parse_pnm(_read_all(src))
    if magic not in (b"P5", b"P6"):
        raise UnsupportedFormat(f"unsupported PNM type {magic.decode(errors='replace')}")
    if maxval != 255:
        raise UnsupportedFormat(f"unsupported maxval {maxval}")
    channels = 1 if magic == b"P5" else 3
    need = width * height * channels
    if len(raster) < need:
        raise TruncatedPayload("truncated payload")
    pix = np.frombuffer(raster[:need], dtype=np.uint8)
    if channels == 1:
        return pix.reshape(height, width).copy()
    return rgb_to_gray(pix.reshape(height, width, 3))


def load_pgm(src: PathOrFile) -> np.ndarray:
    magic, width, height, maxval, raster = _parse_pnm(_read_all(src))
    if magic != b"P5":
        raise UnsupportedFormat(f"unsupported PNM type {magic.decode(errors='replace')}")
    if maxval != 255:
        raise UnsupportedFormat(f"unsupported maxval {maxval}")
    if len(raster) < width * height:
        raise TruncatedPayload("truncated payload")
    return np.frombuffer(raster[: width * height], dtype=np.uint8).reshape(height, width).copy()


def save_pgm(dst: PathOrFile, img) -> None:
    img = np.asarray(img)
    if img.dtype != np.uint8 or img.ndim != 2:
        raise ValueError("PGM output needs a 2-D uint8 image")
    height, width = img.shape
    _write_all(dst, b"P5\n%d %d\n255\n" % (width, height) + img.tobytes())


# --------------------------------------------------------------------- WAV

def load_wav(src: PathOrFile) -> AudioClip:
    """Read 16-bit PCM mono WAV."""
    data = _read_all(src)
    try:
        with wave.open(io.BytesIO(data), "rb") as w:
            channels = w.getnchannels()
            width = w.getsampwidth()
            rate = w.getframerate()
            nframes = w.getnframes()
            frames = w.readframes(nframes)
    except (wave.Error, EOFError, struct.error) as exc:
        msg = str(exc)
        if "unknown format" in msg:
            raise UnsupportedFormat("unsupported sample format") from exc
        raise FormatError(f"malformed header ({msg})") from exc
    if width != 2:
        raise UnsupportedFormat("unsupported sample format")
    if channels != 1:
        raise UnsupportedFormat("unsupported channel count")
    if len(frames) < nframes * 2:
        raise TruncatedPayload("truncated payload")
    return AudioClip(rate, np.frombuffer(frames, dtype="<i2").astype(np.int16))


def save_wav(dst: PathOrFile, clip: AudioClip) -> None:
    buf = io.BytesIO()
    with wave.open(buf, "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(clip.sample_rate)
        w.writeframes(audio_bytes(clip))
    _write_all(dst, buf.getvalue())


# ---------------------------------------------------------------- envelope

@dataclass(eq=False)
class CipherEnvelope:
    media_kind: int
    rows: int
    cols: int
    orig_len: int
    poly_used: int
    digest: bytes
    payload: bytes
    wrapped: bool = False
    version: int = VERSION

    def __post_init__(self):
        if self.media_kind not in (KIND_IMAGE, KIND_AUDIO):
            raise FormatError(f"unknown media kind {self.media_kind}")
        if len(self.digest) != 64:
            raise FormatError("digest must be 64 bytes")
        if self.rows < 1 or self.cols < 1:
            raise FormatError("dimensions must be positive")
        cells = self.rows * self.cols
        if self.media_kind == KIND_IMAGE and self.orig_len != cells:
            raise FormatError("image orig_len must equal rows*cols")
        if self.media_kind == KIND_AUDIO and not 0 < 2 * self.orig_len <= cells:
            raise FormatError("audio orig_len inconsistent with dimensions")

    def __eq__(self, other):
        if not isinstance(other, CipherEnvelope):
            return NotImplemented
        return serialize_envelope(self) == serialize_envelope(other)

    def matrix(self) -> np.ndarray:
        return np.frombuffer(self.payload, dtype=np.uint8).reshape(self.rows, self.cols)


def serialize_envelope(env: CipherEnvelope) -> bytes:
    if len(env.payload) != env.rows * env.cols:
        raise FormatError("payload length does not match rows*cols")
    kind = env.media_kind | (FLAG_WRAPPED if env.wrapped else 0)
    header = _HEADER.pack(MAGIC, env.version, kind, env.rows, env.cols,
                          env.orig_len, env.poly_used, env.digest)
    return header + bytes(env.payload)


def parse_envelope(data: bytes) -> CipherEnvelope:
    if len(data) < 4 or data[:4] != MAGIC:
        raise FormatError("bad magic")
    if len(data) < HEADER_SIZE:
        raise FormatError("malformed header (truncated)")
    magic, version, kind, rows, cols, orig_len, poly, digest = _HEADER.unpack_from(data)
    if version != VERSION:
        raise UnsupportedFormat(f"unsupported envelope version {version}")
    payload = data[HEADER_SIZE:]
    need = rows * cols
    if len(payload) < need:
        raise TruncatedPayload("truncated payload")
    if len(payload) > need:
        raise FormatError("trailing bytes after payload")
    return CipherEnvelope(
        media_kind=kind & ~FLAG_WRAPPED,
        rows=rows,
        cols=cols,
        orig_len=orig_len,
        poly_used=poly,
        digest=digest,
        payload=bytes(payload),
        wrapped=bool(kind & FLAG_WRAPPED),
        version=version,
    )


def wrap_digest(digest: bytes, secret: bytes) -> bytes:
    if len(secret) != 64:
        raise ValueError("wrapping secret must be exactly 64 bytes")
    return bytes(a ^ b for a, b in zip(digest, secret))


unwrap_digest = wrap_digest
