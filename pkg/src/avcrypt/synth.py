"""Seeded synthetic test material: speech-shaped audio, noisy mixtures, images."""

from __future__ import annotations

import numpy as np
from scipy.signal import lfilter

from .media import AudioClip

# (centre Hz, bandwidth Hz) of three formant resonators per vowel
_VOWELS = (
    ((730, 90), (1090, 110), (2440, 170)),
    ((270, 60), (2290, 100), (3010, 150)),
    ((300, 70), (870, 90), (2240, 150)),
    ((530, 80), (1840, 100), (2480, 160)),
    ((640, 90), (1190, 100), (2390, 160)),
)


def _resonator(x, freq, bw, fs):
    r = np.exp(-np.pi * bw / fs)
    theta = 2 * np.pi * freq / fs
    a = [1.0, -2 * r * np.cos(theta), r * r]
    return lfilter([1.0 - r], a, x)


def speech_like(duration: float = 1.0, sample_rate: int = 50_000, seed: int = 0,
                peak: float = 12000.0) -> np.ndarray:
    """Voiced syllables: a jittered glottal pulse train through formant filters.

    Syllables of 120-250 ms alternate with short pauses; F0 glides between
    100 and 220 Hz.  Returned as float64 scaled to ``peak``.
    """
    rng = np.random.default_rng(seed)
    n = int(round(duration * sample_rate))
    out = np.zeros(n)
    pos = int(rng.integers(0, int(0.05 * sample_rate)))
    while pos < n:
        syl = int(rng.uniform(0.12, 0.25) * sample_rate)
        seg_n = min(syl, n - pos)
        f0 = np.linspace(rng.uniform(100, 220), rng.uniform(100, 220), seg_n)
        phase = np.cumsum(f0 / sample_rate)
        pulses = np.diff(np.floor(phase), prepend=0.0)
        pulses *= 1.0 + 0.05 * rng.standard_normal(seg_n)
        src = lfilter([1.0], [1.0, -0.97], pulses)  # spectral tilt of the glottal source
        src += 0.02 * rng.standard_normal(seg_n)  # breath noise
        vowel = _VOWELS[int(rng.integers(len(_VOWELS)))]
        seg = sum(_resonator(src, f, b, sample_rate) * (0.9 ** k) for k, (f, b) in enumerate(vowel))
        env = np.sin(np.pi * np.arange(seg_n) / max(syl, 1)) ** 0.7
        out[pos:pos + seg_n] = seg * env
        pos += syl + int(rng.uniform(0.03, 0.12) * sample_rate)
    return out * (peak / max(np.abs(out).max(), 1e-12))


def mix_at_snr(clean, snr_db: float, seed: int = 0) -> np.ndarray:
    """Clean signal plus white Gaussian noise at the given global SNR."""
    clean = np.asarray(clean, dtype=np.float64)
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(clean.size)
    p_s = np.mean(clean ** 2)
    noise *= np.sqrt(p_s / (10.0 ** (snr_db / 10.0)) / np.mean(noise ** 2))
    return clean + noise


def speech_clip(duration: float = 1.0, sample_rate: int = 50_000, seed: int = 0) -> AudioClip:
    return AudioClip(sample_rate, np.rint(speech_like(duration, sample_rate, seed)).astype(np.int16))


def natural_image() -> np.ndarray:
    """512x512 natural grayscale photograph bundled with scikit-image."""
    from skimage.data import camera

    return np.ascontiguousarray(camera(), dtype=np.uint8)
