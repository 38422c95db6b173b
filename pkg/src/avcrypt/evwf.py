"""Visually-derived Wiener filtering driven by estimated log-filterbank features.

The estimator of clean features (a lip-reading model in the full system)
is pluggable: anything that produces a :class:`FeatureTrack` works.
:func:`oracle_features` computes the track from the clean signal itself.

Pipeline per frame::

    noisy -> Hamming window -> 2048-pt FFT -> |X|^2
    |X|^2 -> log filterbank -> exp -> filterbank pseudoinverse -> p_y
    features -> exp -> filterbank pseudoinverse -> p_s (clean power estimate)
    g = p_s / (p_s + p_n),  p_n = max(p_y - p_s, eps * p_y),  g in [g_min, 1]
    g * X -> IFFT -> synthesis window -> overlap-add / sum of squared windows
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.fft import dctn, irfft, rfft

from .media import AudioClip

EPS = 1e-10
G_MIN = 0.1


class FeatureMismatch(ValueError):
    pass


@dataclass(frozen=True)
class FrameConfig:
    sample_rate: int = 50_000
    frame_len: int = 800
    hop: int = 500
    fft_size: int = 2048
    n_channels: int = 23

    def __post_init__(self):
        if not 0 < self.hop <= self.frame_len:
            raise ValueError("hop must lie in (0, frame_len]")
        if self.fft_size < self.frame_len:
            raise ValueError("fft_size must be >= frame_len")
        if not 0 < self.n_channels < self.n_bins:
            raise ValueError("n_channels must be below the one-sided bin count")

    @property
    def n_bins(self) -> int:
        return self.fft_size // 2 + 1

    @property
    def frame_rate(self) -> float:
        return self.sample_rate / self.hop

    def n_frames(self, n_samples: int) -> int:
        if n_samples < self.frame_len:
            raise ValueError(f"signal of {n_samples} samples is shorter than one frame")
        return (n_samples - self.frame_len) // self.hop + 1

    def window(self) -> np.ndarray:
        return np.hamming(self.frame_len)


# ------------------------------------------------------------- filterbank

def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


@dataclass(frozen=True)
class FilterBank:
    weights: np.ndarray  # (n_channels, n_bins)
    pinv: np.ndarray  # (n_bins, n_channels)


@lru_cache(maxsize=8)
def mel_filterbank(cfg: FrameConfig = FrameConfig()) -> FilterBank:
    """Unit-peak triangles with centres evenly spaced in mel from 0 Hz to Nyquist.

    The first and last filters are half triangles, so the channels sum to
    one on every bin and no bin sits in the null space of the bank.
    """
    nyq = cfg.sample_rate / 2.0
    centres = mel_to_hz(np.linspace(0.0, hz_to_mel(nyq), cfg.n_channels))
    freqs = np.arange(cfg.n_bins) * cfg.sample_rate / cfg.fft_size
    w = np.zeros((cfg.n_channels, cfg.n_bins))
    for c in range(cfg.n_channels):
        f0 = centres[c]
        if c > 0:
            lo = centres[c - 1]
            m = (freqs >= lo) & (freqs <= f0)
            w[c, m] = (freqs[m] - lo) / (f0 - lo)
        if c < cfg.n_channels - 1:
            hi = centres[c + 1]
            m = (freqs >= f0) & (freqs <= hi)
            w[c, m] = (hi - freqs[m]) / (hi - f0)
    w.flags.writeable = False
    pinv = np.linalg.pinv(w)
    pinv.flags.writeable = False
    return FilterBank(w, pinv)


# ------------------------------------------------------------------- STFT

def _frames(signal: np.ndarray, cfg: FrameConfig) -> np.ndarray:
    n = cfg.n_frames(signal.size)
    idx = np.arange(cfg.frame_len)[None, :] + cfg.hop * np.arange(n)[:, None]
    return signal[idx]


def stft(signal, cfg: FrameConfig = FrameConfig()) -> np.ndarray:
    """One-sided spectra of Hamming-windowed frames, shape (n_frames, n_bins)."""
    x = np.asarray(signal, dtype=np.float64)
    return rfft(_frames(x, cfg) * cfg.window(), n=cfg.fft_size, axis=1)


def stft_power(signal, cfg: FrameConfig = FrameConfig()) -> np.ndarray:
    spec = stft(signal, cfg)
    return spec.real ** 2 + spec.imag ** 2


def logfb(power, fb: FilterBank, eps: float = EPS) -> np.ndarray:
    """Natural-log filterbank energies; works on one frame or a stack of frames."""
    power = np.asarray(power, dtype=np.float64)
    return np.log(np.maximum(power @ fb.weights.T, eps))


def features_to_power(feat, fb: FilterBank, eps: float = EPS) -> np.ndarray:
    feat = np.asarray(feat, dtype=np.float64)
    return np.maximum(np.exp(feat) @ fb.pinv.T, eps)


def wiener_gains(p_clean, p_noisy, g_min: float = G_MIN, eps: float = EPS) -> np.ndarray:
    p_clean = np.asarray(p_clean, dtype=np.float64)
    p_noisy = np.asarray(p_noisy, dtype=np.float64)
    if p_clean.shape != p_noisy.shape:
        raise ValueError("clean and noisy spectra differ in shape")
    p_noise = np.maximum(p_noisy - p_clean, eps * p_noisy)
    den = p_clean + p_noise
    with np.errstate(invalid="ignore", divide="ignore"):
        g = np.where(den > 0, p_clean / np.where(den > 0, den, 1.0), g_min)
    return np.clip(g, g_min, 1.0)


# ---------------------------------------------------------------- features

@dataclass(eq=False)
class FeatureTrack:
    frames: np.ndarray  # (n_frames, n_channels)
    hop: int = 500
    sample_rate: int = 50_000

    def __post_init__(self):
        self.frames = np.atleast_2d(np.asarray(self.frames, dtype=np.float64))

    def __len__(self):
        return self.frames.shape[0]

    def __eq__(self, other):
        if not isinstance(other, FeatureTrack):
            return NotImplemented
        return (self.hop == other.hop and self.sample_rate == other.sample_rate
                and np.array_equal(self.frames, other.frames))

    def to_text(self) -> str:
        dim = self.frames.shape[1]
        out = [f"logfb{dim} {len(self)} {self.hop} {self.sample_rate}"]
        out.extend(",".join(repr(float(v)) for v in row) for row in self.frames)
        return "\n".join(out) + "\n"

    @classmethod
    def from_text(cls, text: str, n_channels: int = 23) -> "FeatureTrack":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty feature file")
        head = lines[0].split()
        if len(head) != 4 or head[0] != f"logfb{n_channels}":
            raise ValueError(f"bad feature header {lines[0]!r}")
        count, hop, rate = (int(v) for v in head[1:])
        rows = [[float(v) for v in ln.split(",")] for ln in lines[1:]]
        if len(rows) != count:
            raise ValueError(f"header promises {count} frames, file has {len(rows)}")
        if any(len(r) != n_channels for r in rows):
            raise ValueError(f"every frame must have {n_channels} values")
        frames = np.array(rows, dtype=np.float64).reshape(count, n_channels)
        if not np.all(np.isfinite(frames)):
            raise ValueError("non-finite feature value")
        return cls(frames, hop, rate)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path) -> "FeatureTrack":
        with open(path) as fh:
            return cls.from_text(fh.read())


def oracle_features(clean: AudioClip, cfg: FrameConfig = FrameConfig()) -> FeatureTrack:
    fb = mel_filterbank(cfg)
    return FeatureTrack(logfb(stft_power(clean.samples, cfg), fb), cfg.hop, cfg.sample_rate)


def unity_features(n_frames: int, level: float = 1e20,
                   cfg: FrameConfig = FrameConfig()) -> FeatureTrack:
    """Features whose clean-power estimate is a flat ``level`` on every bin.

    With ``level`` far above the noisy power every gain rounds to 1, which
    turns :func:`enhance` into an analysis/synthesis identity.  The default
    clears the largest frame power a 16-bit signal can produce (about 2e14).
    """
    fb = mel_filterbank(cfg)
    row = logfb(np.full(cfg.n_bins, level), fb)
    return FeatureTrack(np.tile(row, (n_frames, 1)), cfg.hop, cfg.sample_rate)


# -------------------------------------------------------------- synthesis

def apply_gains(signal, gains, cfg: FrameConfig = FrameConfig()) -> np.ndarray:
    """Scale each STFT bin and resynthesise by weighted overlap-add.

    Samples after the last full frame are not covered by any analysis
    window and are passed through unchanged.
    """
    x = np.asarray(signal, dtype=np.float64)
    spec = stft(x, cfg)
    gains = np.asarray(gains, dtype=np.float64)
    if gains.shape != spec.shape:
        raise FeatureMismatch(f"gain shape {gains.shape} != spectrum shape {spec.shape}")
    win = cfg.window()
    frames = irfft(spec * gains, n=cfg.fft_size, axis=1)[:, : cfg.frame_len] * win
    out = np.zeros_like(x)
    norm = np.zeros_like(x)
    w2 = win * win
    for i, frame in enumerate(frames):
        s = i * cfg.hop
        out[s:s + cfg.frame_len] += frame
        norm[s:s + cfg.frame_len] += w2
    covered = norm > 0
    out[covered] /= norm[covered]
    out[~covered] = x[~covered]
    return out


def compute_gains(noisy, feats: FeatureTrack, cfg: FrameConfig = FrameConfig(),
                  g_min: float = G_MIN, eps: float = EPS, project_noisy: bool = True) -> np.ndarray:
    """Per-bin Wiener gains for ``noisy`` given estimated clean features.

    With ``project_noisy`` the noisy power goes through the same
    logfb -> pseudoinverse path as the clean estimate, so both sides of the
    gain share one spectral resolution.  Without it the raw per-bin power is
    used and harmonic peaks above the smoothed estimate get attenuated.
    """
    n = cfg.n_frames(np.asarray(noisy).size)
    if len(feats) != n:
        raise FeatureMismatch(f"feature track has {len(feats)} frames, signal has {n}")
    if feats.frames.shape[1] != cfg.n_channels:
        raise FeatureMismatch(f"features are {feats.frames.shape[1]}-D, expected {cfg.n_channels}")
    fb = mel_filterbank(cfg)
    p_s = features_to_power(feats.frames, fb, eps)
    p_y = stft_power(noisy, cfg)
    if project_noisy:
        p_y = features_to_power(logfb(p_y, fb, eps), fb, eps)
    return wiener_gains(p_s, p_y, g_min, eps)


def enhance_signal(noisy, feats: FeatureTrack, cfg: FrameConfig = FrameConfig(),
                   g_min: float = G_MIN, eps: float = EPS) -> np.ndarray:
    x = np.asarray(noisy, dtype=np.float64)
    return apply_gains(x, compute_gains(x, feats, cfg, g_min, eps), cfg)


def to_pcm16(x) -> np.ndarray:
    return np.clip(np.rint(x), -32768, 32767).astype(np.int16)


def enhance(noisy: AudioClip, feats: FeatureTrack, cfg: FrameConfig = FrameConfig(),
            g_min: float = G_MIN, eps: float = EPS) -> AudioClip:
    if noisy.sample_rate != cfg.sample_rate:
        raise FeatureMismatch(f"clip rate {noisy.sample_rate} != config rate {cfg.sample_rate}")
    if feats.sample_rate != cfg.sample_rate or feats.hop != cfg.hop:
        raise FeatureMismatch("feature track was framed with a different hop or rate")
    y = enhance_signal(noisy.samples, feats, cfg, g_min, eps)
    return AudioClip(noisy.sample_rate, to_pcm16(y))


def segmental_snr(clean, test, frame_len: int = 800,
                  lo: float = -10.0, hi: float = 35.0) -> float:
    """Mean per-frame SNR in dB over non-overlapping frames, each clipped to [lo, hi]."""
    s = np.asarray(clean, dtype=np.float64)
    e = s - np.asarray(test, dtype=np.float64)
    n = s.size // frame_len
    if n == 0:
        raise ValueError("signal shorter than one frame")
    s = s[: n * frame_len].reshape(n, frame_len)
    e = e[: n * frame_len].reshape(n, frame_len)
    ps = (s ** 2).sum(axis=1)
    pe = (e ** 2).sum(axis=1)
    with np.errstate(divide="ignore"):
        snr = 10.0 * np.log10(np.maximum(ps, 1e-20) / np.maximum(pe, 1e-20))
    return float(np.clip(snr, lo, hi).mean())


# ---------------------------------------------------------- visual track

def zigzag_indices(rows: int, cols: int) -> list[tuple[int, int]]:
    order = []
    for s in range(rows + cols - 1):
        diag = [(i, s - i) for i in range(rows) if 0 <= s - i < cols]
        order.extend(diag if s % 2 else diag[::-1])
    return order


def dct2_visual_features(frames, k_coeffs: int = 32, fps: float = 25.0,
                         target_rate: float | None = None) -> np.ndarray:
    """Zigzag-truncated orthonormal 2-D DCT per frame, resampled to ``target_rate``.

    ``target_rate`` defaults to the audio frame rate of :class:`FrameConfig`.
    Output row ``j`` sits at time ``j / target_rate``; rows are produced up to
    the time of the last video frame.
    """
    frames = [np.asarray(f, dtype=np.float64) for f in frames]
    if len(frames) < 2:
        raise ValueError("need at least two frames to interpolate")
    shape = frames[0].shape
    if any(f.shape != shape for f in frames):
        raise ValueError("frame dimension mismatch")
    if target_rate is None:
        target_rate = FrameConfig().frame_rate
    zz = zigzag_indices(*shape)[:k_coeffs]
    ri = np.array([i for i, _ in zz])
    ci = np.array([j for _, j in zz])
    coeffs = np.stack([dctn(f, norm="ortho")[ri, ci] for f in frames])
    src_t = np.arange(len(frames)) / fps
    n_out = math.floor((len(frames) - 1) * target_rate / fps + 1e-9) + 1
    dst_t = np.arange(n_out) / target_rate
    return np.stack([np.interp(dst_t, src_t, coeffs[:, k]) for k in range(coeffs.shape[1])], axis=1)
