"""Acceptance criteria, one test each; every test records a PASS/FAIL line."""

import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES

from avcrypt import metrics
from avcrypt.chaos import warmup
from avcrypt.cipher import decrypt_matrix, encrypt_matrix
from avcrypt.evwf import (
    FrameConfig,
    apply_gains,
    enhance_signal,
    mel_filterbank,
    oracle_features,
    segmental_snr,
)
from avcrypt.keyschedule import derive_key, flip_bit, key_from_digest
from avcrypt.media import AudioClip, parse_envelope, serialize_envelope
from avcrypt.net import STAGES, BackgroundServer, Client, LatencyReport
from avcrypt.pipeline import decrypt_audio, decrypt_image, encrypt_audio, encrypt_image
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
)
from avcrypt.synth import mix_at_snr, natural_image, speech_clip, speech_like


def record(number, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


@pytest.fixture(scope="module")
def camera():
    return natural_image()


def test_1_round_trip():
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    bad = 0
    for _ in range(100):
        img = rng.integers(0, 256, tuple(rng.integers(1, 129, 2)), dtype=np.uint8)
        env = parse_envelope(serialize_envelope(encrypt_image(img)))
        bad += not np.array_equal(decrypt_image(env), img)
    sizes = rng.integers(1, 100_001, 100)
    sizes[:2] = (1, 100_000)
    for n in sizes:
        clip = AudioClip(50_000, rng.integers(-32768, 32768, int(n)))
        env = parse_envelope(serialize_envelope(encrypt_audio(clip)))
        bad += decrypt_audio(env, 50_000) != clip
    dt = time.perf_counter() - t0
    ok = bad == 0 and dt < 60
    assert record(1, ok, f"100 images + 100 clips, {bad} mismatches, {dt:.1f} s (< 60 s)")


def test_2_image_security_band(camera):
    c = encrypt_image(camera).matrix()
    rep = metrics.analyze_image(c)
    ok = (rep.entropy_bits >= 7.99
          and all(abs(v) <= 0.02 for v in (rep.cc_h, rep.cc_v, rep.cc_d))
          and 9.9 <= rep.contrast <= 11.1
          and 0.0136 <= rep.energy <= 0.0176)
    assert record(2, ok, f"entropy {rep.entropy_bits:.5f}, cc H/V/D {rep.cc_h:.4f}/"
                         f"{rep.cc_v:.4f}/{rep.cc_d:.4f}, contrast {rep.contrast:.4f}, "
                         f"energy {rep.energy:.5f}")


def test_3_differential(camera):
    t0 = time.perf_counter()
    res = metrics.differential_test(camera, 20, seed=0)
    dt = time.perf_counter() - t0
    ok = res.npcr_mean >= 99.4 and 32.15 <= res.uaci_mean <= 34.15 and dt < 120
    assert record(3, ok, f"NPCR {res.npcr_mean:.4f}%, UACI {res.uaci_mean:.4f}%, {dt:.1f} s")


def test_4_audio_security_band():
    clip = speech_clip(1.0, seed=0)
    rep = metrics.analyze_audio(clip, metrics.differential_test(clip, 20, seed=0))
    ok = (rep.nscr_pct >= 99.9 and 32.4 <= rep.uaci_pct <= 34.4
          and abs(rep.cc_plain_cipher) <= 0.01)
    assert record(4, ok, f"NSCR {rep.nscr_pct:.4f}%, UACI {rep.uaci_pct:.4f}%, "
                         f"CC {rep.cc_plain_cipher:.5f}")


def _median_ms(fn, repeat=9):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return out, 1e3 * float(np.median(times))


def test_5_performance(camera):
    warmup()
    decrypt_image(encrypt_image(camera))
    env, t_enc = _median_ms(lambda: encrypt_image(camera))
    dec, t_dec = _median_ms(lambda: decrypt_image(env))
    ok = t_enc < 25 and t_dec < 25 and np.array_equal(dec, camera)
    assert record(5, ok, f"512x512 encrypt {t_enc:.2f} ms, decrypt {t_dec:.2f} ms (median of 9, < 25 ms)")


def test_6_sbox_soundness():
    affine_ok = (sorted(affine_forward(b) for b in range(256)) == list(range(256))
                 and all(affine_inverse(affine_forward(b)) == b for b in range(256)))
    inv_ok = all(gf_mul(b, gf_mul_inverse(b, FALLBACK_POLY), FALLBACK_POLY) == 1
                 for b in range(1, 256))
    t = default_sbox()
    tables_ok = (np.array_equal(t.inverse[t.forward], np.arange(256))
                 and np.array_equal(t.forward[t.inverse], np.arange(256)))
    try:
        build_sbox(PRINTED_POLY)
        printed = "bijective"
    except SBoxError:
        missing = sum(gf_mul_inverse(b, PRINTED_POLY) == 0 for b in range(1, 256))
        printed = f"not bijective ({missing} bytes lack an inverse)"
    ok = affine_ok and inv_ok and tables_ok and t.reduction_poly == FALLBACK_POLY
    assert record(6, ok, f"default 0x{t.reduction_poly:X} sound; printed 0x{PRINTED_POLY:X} {printed}")


def test_7a_ola_identity():
    cfg = FrameConfig()
    x = mix_at_snr(speech_like(1.0, seed=11), 0.0, seed=12)
    y = apply_gains(x, np.ones((cfg.n_frames(x.size), cfg.n_bins)), cfg)
    err = np.linalg.norm(y - x) / np.linalg.norm(x)
    assert record("7a", err <= 1e-3, f"unity-gain OLA relative L2 error {err:.2e} (<= 1e-3)")


def test_7b_oracle_enhancement():
    cfg = FrameConfig()
    worst = {}
    for snr in (-12, -6, -3, 0, 6, 12):
        deltas = []
        for seed in range(10):
            clean = speech_like(2.0, seed=100 + seed)
            noisy = mix_at_snr(clean, snr, seed=200 + seed)
            out = enhance_signal(noisy, oracle_features(AudioClip(50_000, clean), cfg), cfg)
            deltas.append(segmental_snr(clean, out) - segmental_snr(clean, noisy))
        worst[snr] = min(deltas)
    ok = all(worst[s] > 0 for s in (-12, -6, -3, 0)) and all(worst[s] >= -0.5 for s in (6, 12))
    detail = ", ".join(f"{s:+d} dB {worst[s]:+.2f}" for s in worst)
    assert record("7b", ok, f"worst segSNR change over 10 mixtures: {detail}")


def test_7c_moore_penrose():
    fb = mel_filterbank(FrameConfig())
    w = fb.weights
    err = np.abs(w @ fb.pinv @ w - w).max() / np.abs(w).max()
    assert record("7c", err <= 1e-6, f"filterbank W P W = W max relative error {err:.1e} (<= 1e-6)")


def _wrong_digest_fraction(pool, rng):
    sbox = default_sbox()
    fractions = []
    for _ in range(20):
        m = rng.integers(0, 256, (64, 64), dtype=np.uint8)
        key = derive_key(m.tobytes())
        c = encrypt_matrix(m, key, sbox)
        bit = pool[int(rng.integers(len(pool)))]
        wrong = decrypt_matrix(c, key_from_digest(flip_bit(key.digest, bit)), sbox)
        fractions.append(np.mean(wrong != m))
    return 100 * float(np.mean(fractions))


# Unattainable as stated: 320 of the 512 digest bits never reach the key, and
# a perturbed permutation seed leaves the keystream intact.  See README.
@pytest.mark.xfail(strict=True, reason="one-bit digest perturbation cannot reach 99% without burn-in")
def test_8_key_sensitivity():
    from avcrypt.keyschedule import KEY_BITS

    pct = _wrong_digest_fraction(range(512), np.random.default_rng(8))
    key_pct = _wrong_digest_fraction(KEY_BITS, np.random.default_rng(8))
    assert record(8, pct >= 99.0, f"wrong-digest byte difference {pct:.2f}% over random digest bits, "
                                  f"{key_pct:.2f}% over key-bearing bits (>= 99%)")


def test_9_netharness():
    seen = []
    clean = speech_like(1.0, seed=21)
    noisy = AudioClip(50_000, np.rint(mix_at_snr(clean, 0.0, seed=22)).astype(np.int16))
    feats = oracle_features(AudioClip(50_000, np.rint(clean).astype(np.int16)))
    with BackgroundServer(on_enhanced=seen.append) as srv:
        with Client(*srv.address) as c:
            echo = c.ping(b"avha-ping") == b"avha-ping"
            out, times = c.enhance(noisy, feats)
            exact = out == seen[-1]

        def one(_):
            with Client(*srv.address, timeout=30) as cl:
                return cl.enhance(noisy, feats)[1]

        with ThreadPoolExecutor(8) as pool:
            samples = list(pool.map(one, range(8)))
    report = LatencyReport()
    for s in [times] + samples:
        report.add(s)
    agg = report.aggregates()
    stages_ok = set(agg) == set(STAGES) and all(v["p50"] >= 0 for v in agg.values())
    ok = echo and exact and len(samples) == 8 and stages_ok
    rt = agg["round_trip"]
    assert record(9, ok, f"ping echo {echo}, bit-exact {exact}, 8 concurrent done, "
                         f"loopback round trip p50 {rt['p50']:.1f} ms / p95 {rt['p95']:.1f} ms "
                         f"(not comparable to 5G figures)")
