"""Plaintext-dependent key schedule.

Every chaotic seed is cut out of the SHA-512 hex digest of the plaintext:

    kappa1 = h[0:12]     -> y0 = kappa1 / 2**48   (PWLCM)
    kappa2 = h[116:128]  -> x0 = kappa2 / 2**48   (Chebyshev)
    kappa3 = h[12:24]    -> r  = 4 * kappa3 / 2**48  (Logistic-Sine parameter)
    kappa4 = h[52:64]    -> z0 = kappa4 / 2**48   (Logistic-Sine seed)

kappa3/kappa4 are this package's own choice; the Logistic-Sine map needs
seeds and nothing else supplies them.  Only the 192 digest bits inside these
slices reach the key; the other 320 are ignored.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

SCALE = 2.0 ** 48
DELTA = 2.0 ** -48

# PWLCM control parameter.  Public and fixed: the key is the digest.
PWLCM_LAMBDA = 0.3

# Digest byte ranges covered by the kappa slices (two hex chars per byte).
_KEY_BYTES = (range(0, 12), range(26, 32), range(58, 64))
# Digest bit indices (flip_bit numbering) that change the key when flipped.
KEY_BITS = tuple(8 * b + i for r in _KEY_BYTES for b in r for i in range(8))


@dataclass(frozen=True)
class KeyMaterial:
    digest: bytes
    kappa1: int
    kappa2: int
    kappa3: int
    kappa4: int
    y0: float
    x0: float
    z0: float
    r: float

    @property
    def hexdigest(self) -> str:
        return self.digest.hex()


def _clamp(seed: float) -> float:
    # 0 is a fixed point of PWLCM and Logistic-Sine, and T4(0) = 1 freezes
    # the Chebyshev orbit at 1.
    return DELTA if seed == 0.0 else seed


def key_from_digest(digest: bytes) -> KeyMaterial:
    if len(digest) != 64:
        raise ValueError(f"expected a 64-byte SHA-512 digest, got {len(digest)} bytes")
    h = digest.hex()
    k1 = int(h[0:12], 16)
    k2 = int(h[116:128], 16)
    k3 = int(h[12:24], 16)
    k4 = int(h[52:64], 16)
    return KeyMaterial(
        digest=bytes(digest),
        kappa1=k1,
        kappa2=k2,
        kappa3=k3,
        kappa4=k4,
        y0=_clamp(k1 / SCALE),
        x0=_clamp(k2 / SCALE),
        z0=_clamp(k4 / SCALE),
        r=4.0 * k3 / SCALE,
    )


def derive_key(plaintext: bytes) -> KeyMaterial:
    if len(plaintext) == 0:
        raise ValueError("empty plaintext")
    return key_from_digest(hashlib.sha512(plaintext).digest())


def flip_bit(data: bytes, bit_index: int) -> bytes:
    """Flip one bit; bit ``i`` is bit ``i % 8`` (LSB first) of byte ``i // 8``."""
    if not 0 <= bit_index < 8 * len(data):
        raise IndexError(f"bit index {bit_index} outside plaintext of {8 * len(data)} bits")
    out = bytearray(data)
    out[bit_index // 8] ^= 1 << (bit_index % 8)
    return bytes(out)


def key_sensitivity_pair(plaintext: bytes, bit_index: int) -> tuple[KeyMaterial, KeyMaterial]:
    return derive_key(plaintext), derive_key(flip_bit(plaintext, bit_index))
