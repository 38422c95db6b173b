"""GF(2^8) inverse + affine S-box and its inverse table."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

log = logging.getLogger(__name__)

# x^8 + x^4 + x^2 + x + 1, as printed alongside the affine map.  It is
# reducible (30 bytes have no inverse), so S-box construction falls back.
PRINTED_POLY = 0x117
# x^8 + x^4 + x^3 + x + 1
FALLBACK_POLY = 0x11B

AFFINE_CONST = 0x63
# Rows of the affine matrix as masks over (w7 .. w0); row i yields output bit 7 - i.
AFFINE_ROWS = (0xF8, 0x7C, 0x3E, 0x1F, 0x8F, 0xC7, 0xE3, 0xF1)


class SBoxError(ValueError):
    pass


def _check_poly(poly: int) -> None:
    if poly.bit_length() != 9:
        raise ValueError(f"reduction polynomial must have degree 8, got {poly:#x}")


def gf_mul(a: int, b: int, poly: int = FALLBACK_POLY) -> int:
    res = 0
    while b:
        if b & 1:
            res ^= a
        b >>= 1
        a <<= 1
        if a & 0x100:
            a ^= poly
    return res


def _pdivmod(a: int, b: int) -> tuple[int, int]:
    q = 0
    db = b.bit_length()
    while a.bit_length() >= db:
        shift = a.bit_length() - db
        q ^= 1 << shift
        a ^= b << shift
    return q, a


def _pmul(a: int, b: int) -> int:
    res = 0
    while b:
        if b & 1:
            res ^= a
        b >>= 1
        a <<= 1
    return res


def gf_mul_inverse(b: int, poly: int = FALLBACK_POLY) -> int:
    """Inverse of ``b`` modulo ``poly`` via extended Euclid over GF(2)[x].

    Returns 0 for ``b == 0`` and also when ``b`` shares a factor with a
    reducible ``poly`` (no inverse exists).
    """
    _check_poly(poly)
    if not 0 <= b <= 0xFF:
        raise ValueError(f"not a byte: {b!r}")
    if b == 0:
        return 0
    r0, r1 = poly, b
    s0, s1 = 0, 1
    while r1:
        q, rem = _pdivmod(r0, r1)
        r0, r1 = r1, rem
        s0, s1 = s1, s0 ^ _pmul(q, s1)
    if r0 != 1:
        return 0
    return _pdivmod(s0, poly)[1]


def affine_forward(b: int) -> int:
    out = 0
    for i, row in enumerate(AFFINE_ROWS):
        bit = bin(row & b).count("1") & 1
        out |= bit << (7 - i)
    return out ^ AFFINE_CONST


def _affine_tables() -> tuple[np.ndarray, np.ndarray]:
    fwd = np.array([affine_forward(b) for b in range(256)], dtype=np.uint8)
    if len(set(fwd.tolist())) != 256:
        raise SBoxError("affine matrix is singular over GF(2)")
    inv = np.empty(256, dtype=np.uint8)
    inv[fwd] = np.arange(256, dtype=np.uint8)
    return fwd, inv


_AFFINE_FWD, _AFFINE_INV = _affine_tables()


def affine_inverse(b: int) -> int:
    return int(_AFFINE_INV[b])


@dataclass(frozen=True)
class SBoxTables:
    forward: np.ndarray
    inverse: np.ndarray
    reduction_poly: int

    @property
    def fixed_points(self) -> int:
        return int(np.count_nonzero(self.forward == np.arange(256)))


@lru_cache(maxsize=None)
def build_sbox(poly: int = FALLBACK_POLY) -> SBoxTables:
    _check_poly(poly)
    fwd = np.array([affine_forward(gf_mul_inverse(b, poly)) for b in range(256)],
                   dtype=np.uint8)
    if np.unique(fwd).size != 256:
        raise SBoxError(f"non-bijective S-box for polynomial {poly:#x}")
    inv = np.empty(256, dtype=np.uint8)
    inv[fwd] = np.arange(256, dtype=np.uint8)
    fwd.flags.writeable = False
    inv.flags.writeable = False
    return SBoxTables(fwd, inv, poly)


def is_field_polynomial(poly: int) -> bool:
    """True when every nonzero byte has an inverse modulo ``poly``."""
    return all(gf_mul(b, gf_mul_inverse(b, poly), poly) == 1 for b in range(1, 256))


@lru_cache(maxsize=None)
def default_sbox() -> SBoxTables:
    """S-box over the printed polynomial, or over 0x11B when that one fails."""
    try:
        return build_sbox(PRINTED_POLY)
    except SBoxError:
        log.info("polynomial %#x gives a non-bijective S-box; using %#x",
                 PRINTED_POLY, FALLBACK_POLY)
        return build_sbox(FALLBACK_POLY)


def resolve_sbox(poly: int | None = None) -> SBoxTables:
    return default_sbox() if poly is None else build_sbox(poly)
