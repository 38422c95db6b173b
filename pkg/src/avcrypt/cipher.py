"""Confusion/diffusion engine on byte matrices.

Encryption of an A x B ``uint8`` matrix:

1. permute rows by the argsort of A PWLCM iterates,
2. permute columns by the argsort of B Chebyshev iterates,
3. XOR with a Logistic-Sine keystream, ``floor((g * 1e14) mod 256)``,
4. substitute every byte through the S-box.

Decryption runs the inverse of each stage in reverse order.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .chaos import ChebyshevState, LogisticSineState, PwlcmState, generate_sequence
from .keyschedule import PWLCM_LAMBDA, KeyMaterial
from .sbox import SBoxTables


def permutation_from_sequence(seq) -> np.ndarray:
    """Ascending argsort; ties keep their original order."""
    seq = np.asarray(seq, dtype=np.float64)
    if seq.size == 0:
        raise ValueError("cannot build a permutation from an empty sequence")
    return np.argsort(seq, kind="stable")


@njit(cache=True)
def _quantize(gamma):
    out = np.empty(gamma.size, dtype=np.uint8)
    for i in range(gamma.size):
        out[i] = math.floor((gamma[i] * 1e14) % 256.0)
    return out


def keystream_bytes(gamma) -> np.ndarray:
    """``floor((g * 1e14) mod 256)`` per value."""
    return _quantize(np.ascontiguousarray(gamma, dtype=np.float64).reshape(-1))


def keystream_matrix(ls: LogisticSineState, rows: int, cols: int) -> np.ndarray:
    if rows < 1 or cols < 1:
        raise ValueError("keystream dimensions must be positive")
    gamma = generate_sequence(ls, rows * cols)
    return keystream_bytes(gamma).reshape(rows, cols)


def permutations(key: KeyMaterial, rows: int, cols: int) -> tuple[np.ndarray, np.ndarray]:
    alpha = generate_sequence(PwlcmState(PWLCM_LAMBDA, key.y0), rows)
    beta = generate_sequence(ChebyshevState(key.x0), cols)
    return permutation_from_sequence(alpha), permutation_from_sequence(beta)


def _check_matrix(m) -> np.ndarray:
    m = np.asarray(m)
    if m.dtype != np.uint8 or m.ndim != 2:
        raise ValueError(f"expected a 2-D uint8 matrix, got {m.dtype} with ndim={m.ndim}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError("matrix must be at least 1x1")
    return m


def permute(m: np.ndarray, key: KeyMaterial) -> np.ndarray:
    """Row then column permutation only (no XOR, no substitution)."""
    m = _check_matrix(m)
    row_perm, col_perm = permutations(key, *m.shape)
    return m[row_perm][:, col_perm]


def unpermute(m: np.ndarray, key: KeyMaterial) -> np.ndarray:
    m = _check_matrix(m)
    row_perm, col_perm = permutations(key, *m.shape)
    out = np.empty_like(m)
    out[:, col_perm] = m
    res = np.empty_like(m)
    res[row_perm] = out
    return res


def encrypt_matrix(m, key: KeyMaterial, sbox: SBoxTables) -> np.ndarray:
    m = _check_matrix(m)
    rows, cols = m.shape
    permuted = permute(m, key)
    ks = keystream_matrix(LogisticSineState(key.r, key.z0), rows, cols)
    return sbox.forward[permuted ^ ks]


def decrypt_matrix(c, key: KeyMaterial, sbox: SBoxTables) -> np.ndarray:
    c = _check_matrix(c)
    rows, cols = c.shape
    ks = keystream_matrix(LogisticSineState(key.r, key.z0), rows, cols)
    return unpermute(sbox.inverse[c] ^ ks, key)
