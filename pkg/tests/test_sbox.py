import numpy as np
import pytest

from avcrypt.sbox import (
    FALLBACK_POLY,
    PRINTED_POLY,
    SBoxError,
    affine_forward,
    affine_inverse,
    build_sbox,
    default_sbox,
    gf_mul,
    gf_mul_inverse,
    is_field_polynomial,
)


def brute_inverse(b, poly):
    for c in range(1, 256):
        if gf_mul(b, c, poly) == 1:
            return c
    return None


def test_unit_and_zero():
    assert gf_mul_inverse(0x01) == 0x01
    assert gf_mul_inverse(0x00) == 0x00


def test_inverse_exhaustive_default_poly():
    for b in range(1, 256):
        inv = gf_mul_inverse(b, FALLBACK_POLY)
        assert gf_mul(b, inv, FALLBACK_POLY) == 1
        assert inv == brute_inverse(b, FALLBACK_POLY)


def test_printed_polynomial_is_reducible():
    # 30 nonzero bytes have no inverse modulo x^8 + x^4 + x^2 + x + 1
    missing = [b for b in range(1, 256) if brute_inverse(b, PRINTED_POLY) is None]
    assert len(missing) == 30
    assert not is_field_polynomial(PRINTED_POLY)
    assert all(gf_mul_inverse(b, PRINTED_POLY) == 0 for b in missing)
    with pytest.raises(SBoxError, match="non-bijective"):
        build_sbox(PRINTED_POLY)


def test_default_falls_back():
    assert default_sbox().reduction_poly == FALLBACK_POLY


@pytest.mark.parametrize("poly", [0xFF, 0x21B, 0x1B])
def test_degree_check(poly):
    with pytest.raises(ValueError):
        gf_mul_inverse(3, poly)
    with pytest.raises(ValueError):
        build_sbox(poly)


def test_affine_examples():
    assert affine_forward(0x00) == 0x63
    assert affine_forward(0xFF) == 0x9C


def test_affine_bijective():
    assert sorted(affine_forward(b) for b in range(256)) == list(range(256))
    assert all(affine_inverse(affine_forward(b)) == b for b in range(256))


def test_matches_aes_sbox():
    # same matrix, constant and polynomial as the AES S-box
    t = build_sbox(FALLBACK_POLY)
    known = {0x00: 0x63, 0x01: 0x7C, 0x02: 0x77, 0x53: 0xED, 0xFF: 0x16}
    for b, v in known.items():
        assert t.forward[b] == v
    assert t.inverse[0x00] == 0x52
    assert t.fixed_points == 0


def test_tables_round_trip_and_immutable():
    t = build_sbox()
    assert np.array_equal(t.inverse[t.forward], np.arange(256))
    assert np.array_equal(t.forward[t.inverse], np.arange(256))
    assert np.unique(t.forward).size == 256
    with pytest.raises(ValueError):
        t.forward[0] = 1


def test_other_field_polynomial_builds():
    t = build_sbox(0x11D)
    assert np.array_equal(t.inverse[t.forward], np.arange(256))
