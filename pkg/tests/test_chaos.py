import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from avcrypt.chaos import (
    ChebyshevState,
    LogisticSineState,
    PwlcmState,
    chebyshev_next,
    generate_sequence,
    logistic_sine_next,
    pwlcm_next,
)


# Straight-line reference evaluators, written from the map definitions.

def ref_pwlcm(y, lam):
    def f(u):
        if 0 <= u <= lam:
            return u / lam
        if lam < u <= 0.5:
            return (1 - u) / (1 - lam)
        return f(1 - u)
    v = f(y) % 1.0
    return lam / 2 if v in (0.0, 1.0) else v


def ref_logistic_sine(z, r):
    return (r * z * (1 - z) + (4 - r) * math.sin(math.pi * z) / 4) % 1


def ref_chebyshev(x):
    return min(1.0, max(-1.0, 8 * (x * x) * (x * x) - 8 * (x * x) + 1))


@pytest.mark.parametrize("lam, y, expected", [
    (0.4, 0.2, 0.5),
    (0.4, 0.7, 0.75),
    (0.5, 0.25, 0.5),
])
def test_pwlcm_examples(lam, y, expected):
    assert pwlcm_next(PwlcmState(lam, y)) == pytest.approx(expected, abs=1e-15)


def test_pwlcm_two_steps():
    seq = generate_sequence(PwlcmState(0.4, 0.2), 2)
    assert seq[0] == 0.5
    assert seq[1] == pytest.approx(0.5 / 0.6, abs=1e-15)


def test_pwlcm_sanitizes_exact_endpoint():
    # y == lambda maps to 1.0, which wraps to 0 and is replaced by lambda / 2
    assert pwlcm_next(PwlcmState(0.3, 0.3)) == 0.15


@pytest.mark.parametrize("lam", [0.0, -0.1, 0.51, 1.0])
def test_pwlcm_rejects_lambda(lam):
    with pytest.raises(ValueError):
        PwlcmState(lam, 0.1)


@pytest.mark.parametrize("x, expected", [(0.5, -0.5), (1.0, 1.0), (0.0, 1.0)])
def test_chebyshev_examples(x, expected):
    assert chebyshev_next(ChebyshevState(x)) == expected


def test_chebyshev_rejects_seed():
    with pytest.raises(ValueError):
        ChebyshevState(1.5)
    with pytest.raises(ValueError):
        ChebyshevState(0.1, k=3)


@pytest.mark.parametrize("r, z, expected", [(3.5, 0.5, 0.0), (2.0, 0.0, 0.0), (4.0, 0.5, 0.0)])
def test_logistic_sine_examples(r, z, expected):
    assert logistic_sine_next(LogisticSineState(r, z)) == expected


def test_logistic_sine_rejects_r():
    with pytest.raises(ValueError):
        LogisticSineState(4.5, 0.1)
    with pytest.raises(ValueError):
        LogisticSineState(-0.1, 0.1)


def test_generate_sequence_edge_lengths():
    s = PwlcmState(0.3, 0.123)
    assert generate_sequence(s, 0).size == 0
    assert s.y == 0.123
    one = generate_sequence(s, 1)
    assert one.tolist() == [ref_pwlcm(0.123, 0.3)]
    assert s.y == one[0]


@pytest.mark.parametrize("make, ref", [
    (lambda: PwlcmState(0.3, 0.2718281828), lambda v: ref_pwlcm(v, 0.3)),
    (lambda: ChebyshevState(0.3141592653), ref_chebyshev),
    (lambda: LogisticSineState(3.77, 0.1234567), lambda v: ref_logistic_sine(v, 3.77)),
])
def test_kernel_matches_reference_bitwise(make, ref):
    seq = generate_sequence(make(), 10_000)
    state = make()
    v = state.y if isinstance(state, PwlcmState) else state.x if isinstance(state, ChebyshevState) else state.z
    expected = []
    for _ in range(10_000):
        v = ref(v)
        expected.append(v)
    assert seq.tolist() == expected


def test_kernel_matches_single_steps():
    a, b = LogisticSineState(1.5, 0.9), LogisticSineState(1.5, 0.9)
    bulk = generate_sequence(a, 500)
    steps = [logistic_sine_next(b) for _ in range(500)]
    assert bulk.tolist() == steps
    assert a.z == b.z


def test_determinism():
    for make in (lambda: PwlcmState(0.25, 0.77), lambda: ChebyshevState(-0.4),
                 lambda: LogisticSineState(2.2, 0.6)):
        assert np.array_equal(generate_sequence(make(), 10_000), generate_sequence(make(), 10_000))


@settings(max_examples=50, deadline=None)
@given(lam=st.floats(0.01, 0.5), y=st.floats(1e-9, 1 - 1e-9), x=st.floats(-1, 1),
       r=st.floats(0, 4), z=st.floats(0, 0.999999))
def test_ranges(lam, y, x, r, z):
    p = generate_sequence(PwlcmState(lam, y), 2000)
    assert np.all((p > 0) & (p < 1))
    c = generate_sequence(ChebyshevState(x), 2000)
    assert np.all((c >= -1) & (c <= 1))
    s = generate_sequence(LogisticSineState(r, z), 2000)
    assert np.all((s >= 0) & (s < 1))


def test_pwlcm_sensitivity():
    y0 = 0.3817263
    a = generate_sequence(PwlcmState(0.3, y0), 1100)[100:]
    b = generate_sequence(PwlcmState(0.3, y0 + 2.0 ** -40), 1100)[100:]
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.2


def test_chebyshev_matches_trig_form(rng):
    xs = rng.uniform(-1, 1, 1000)
    got = np.array([chebyshev_next(ChebyshevState(float(x))) for x in xs])
    assert np.max(np.abs(got - np.cos(4 * np.arccos(xs)))) < 1e-9
