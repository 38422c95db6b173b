"""End-to-end image/audio encryption producing :class:`CipherEnvelope` objects."""

from __future__ import annotations

import numpy as np

from .cipher import decrypt_matrix, encrypt_matrix
from .keyschedule import derive_key, key_from_digest
from .media import (
    KIND_AUDIO,
    KIND_IMAGE,
    AudioClip,
    CipherEnvelope,
    FormatError,
    audio_bytes,
    audio_to_matrix,
    matrix_to_audio,
    unwrap_digest,
    wrap_digest,
)
from .sbox import build_sbox, resolve_sbox

DEFAULT_SAMPLE_RATE = 50_000


def _seal(kind, matrix, orig_len, plaintext, poly, secret) -> CipherEnvelope:
    sbox = resolve_sbox(poly)
    key = derive_key(plaintext)
    c = encrypt_matrix(matrix, key, sbox)
    digest = key.digest if secret is None else wrap_digest(key.digest, secret)
    return CipherEnvelope(kind, c.shape[0], c.shape[1], orig_len, sbox.reduction_poly,
                          digest, c.tobytes(), wrapped=secret is not None)


def _open(env: CipherEnvelope, secret) -> np.ndarray:
    digest = env.digest
    if env.wrapped:
        if secret is None:
            raise FormatError("envelope digest is wrapped; a secret is required")
        digest = unwrap_digest(digest, secret)
    return decrypt_matrix(env.matrix(), key_from_digest(digest), build_sbox(env.poly_used))


def encrypt_image(img, poly: int | None = None, secret: bytes | None = None) -> CipherEnvelope:
    img = np.ascontiguousarray(img, dtype=np.uint8)
    if img.ndim != 2:
        raise ValueError("expected a 2-D grayscale image")
    return _seal(KIND_IMAGE, img, img.size, img.tobytes(), poly, secret)


def decrypt_image(env: CipherEnvelope, secret: bytes | None = None) -> np.ndarray:
    if env.media_kind != KIND_IMAGE:
        raise FormatError("envelope does not hold an image")
    return _open(env, secret)


def encrypt_audio(clip: AudioClip, poly: int | None = None,
                  secret: bytes | None = None) -> CipherEnvelope:
    m, n = audio_to_matrix(clip)
    return _seal(KIND_AUDIO, m, n, audio_bytes(clip), poly, secret)


def decrypt_audio(env: CipherEnvelope, sample_rate: int = DEFAULT_SAMPLE_RATE,
                  secret: bytes | None = None) -> AudioClip:
    """Decrypt an audio envelope.  The envelope has no rate field; pass it in."""
    if env.media_kind != KIND_AUDIO:
        raise FormatError("envelope does not hold audio")
    return matrix_to_audio(_open(env, secret), env.orig_len, sample_rate)
