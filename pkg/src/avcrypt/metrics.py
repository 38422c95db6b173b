"""Security metrics for ciphertext images and audio.

Correlation uses every adjacent pair rather than a random sample, so
results are deterministic.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields

import numpy as np

from .media import AudioClip, audio_to_matrix
from .pipeline import encrypt_audio, encrypt_image

# Size of the digest space the key is drawn from, and the key length quoted
# for the original scheme.  Reported side by side; they do not agree.
KEY_SPACE_LOG2 = 512
PUBLISHED_KEY_LENGTH = 1e45

_DIRECTIONS = ("H", "V", "D")


@dataclass(frozen=True)
class GlcmConfig:
    levels: int = 8
    offset: tuple[int, int] = (0, 1)
    symmetric: bool = True

    def __post_init__(self):
        if not 2 <= self.levels <= 256:
            raise ValueError("GLCM levels must lie in 2..256")
        if tuple(self.offset) == (0, 0):
            raise ValueError("GLCM offset must be non-zero")


@dataclass
class MetricsReport:
    cc_h: float | None = None
    cc_v: float | None = None
    cc_d: float | None = None
    entropy_bits: float | None = None
    contrast: float | None = None
    energy: float | None = None
    npcr_pct: float | None = None
    uaci_pct: float | None = None
    nscr_pct: float | None = None
    cc_plain_cipher: float | None = None
    key_space_log2: int = KEY_SPACE_LOG2
    published_key_length: float = PUBLISHED_KEY_LENGTH

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            lines.append(f"{f.name} = {'NA' if v is None else format(v, '.6g')}")
        return "\n".join(lines) + "\n"


def _pairs(img: np.ndarray, direction: str) -> tuple[np.ndarray, np.ndarray]:
    if direction == "H":
        return img[:, :-1], img[:, 1:]
    if direction == "V":
        return img[:-1, :], img[1:, :]
    if direction == "D":
        return img[:-1, :-1], img[1:, 1:]
    raise ValueError(f"direction must be one of {_DIRECTIONS}, got {direction!r}")


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    dx = x - x.mean()
    dy = y - y.mean()
    den = np.sqrt(np.dot(dx, dx) * np.dot(dy, dy))
    if den == 0.0:
        raise ValueError("zero variance")
    return float(np.dot(dx, dy) / den)


def adjacency_correlation(img, direction: str) -> float:
    img = np.asarray(img)
    if img.ndim != 2 or min(img.shape) < 2:
        raise ValueError("correlation needs an image of at least 2x2")
    return pearson(*_pairs(img, direction))


def entropy(data) -> float:
    data = np.asarray(data, dtype=np.uint8).ravel()
    if data.size == 0:
        raise ValueError("entropy of an empty input")
    p = np.bincount(data, minlength=256) / data.size
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum()) + 0.0


def glcm(img, cfg: GlcmConfig = GlcmConfig()) -> np.ndarray:
    img = np.asarray(img, dtype=np.uint8)
    if img.ndim != 2 or min(img.shape) < 2:
        raise ValueError("GLCM needs an image of at least 2x2")
    q = (img.astype(np.int64) * cfg.levels) >> 8
    dr, dc = cfg.offset
    rows, cols = q.shape
    if abs(dr) >= rows or abs(dc) >= cols:
        raise ValueError("GLCM offset larger than the image")
    a = q[max(0, -dr):rows - max(0, dr), max(0, -dc):cols - max(0, dc)]
    b = q[max(0, dr):rows - max(0, -dr), max(0, dc):cols - max(0, -dc)]
    counts = np.bincount((a * cfg.levels + b).ravel(), minlength=cfg.levels ** 2)
    counts = counts.reshape(cfg.levels, cfg.levels).astype(np.float64)
    if cfg.symmetric:
        counts = counts + counts.T
    return counts / counts.sum()


def glcm_stats(img, cfg: GlcmConfig = GlcmConfig()) -> tuple[float, float]:
    """(contrast, energy) of the normalised co-occurrence matrix."""
    p = glcm(img, cfg)
    i, j = np.indices(p.shape)
    contrast = float(((i - j) ** 2 * p).sum())
    energy = float((p ** 2).sum())
    return contrast, energy


def npcr_uaci(c1, c2) -> tuple[float, float]:
    c1 = np.asarray(c1, dtype=np.uint8)
    c2 = np.asarray(c2, dtype=np.uint8)
    if c1.shape != c2.shape:
        raise ValueError(f"dimension mismatch: {c1.shape} vs {c2.shape}")
    if c1.size == 0:
        raise ValueError("empty inputs")
    npcr = 100.0 * np.count_nonzero(c1 != c2) / c1.size
    diff = np.abs(c1.astype(np.int16) - c2.astype(np.int16))
    uaci = 100.0 * diff.sum() / (255.0 * c1.size)
    return float(npcr), float(uaci)


def nscr_uaci_audio(a1, a2, unit: str = "sample") -> tuple[float, float]:
    """NSCR and UACI of two ciphertext byte streams.

    ``unit="sample"`` pairs consecutive bytes into little-endian 16-bit words
    (a trailing odd byte is dropped) and scales UACI by 65535; ``"byte"``
    compares single bytes like :func:`npcr_uaci`.
    """
    a1 = np.asarray(a1, dtype=np.uint8).ravel()
    a2 = np.asarray(a2, dtype=np.uint8).ravel()
    if a1.size != a2.size:
        raise ValueError(f"length mismatch: {a1.size} vs {a2.size}")
    if unit == "byte":
        return npcr_uaci(a1, a2)
    if unit != "sample":
        raise ValueError(f"unit must be 'sample' or 'byte', got {unit!r}")
    m = a1.size // 2 * 2
    if m == 0:
        raise ValueError("need at least one 16-bit sample")
    w1 = a1[:m].view("<u2").astype(np.int64)
    w2 = a2[:m].view("<u2").astype(np.int64)
    nscr = 100.0 * np.count_nonzero(w1 != w2) / w1.size
    uaci = 100.0 * np.abs(w1 - w2).sum() / (65535.0 * w1.size)
    return float(nscr), float(uaci)


@dataclass(frozen=True)
class DifferentialResult:
    trials: int
    npcr_mean: float
    npcr_std: float
    uaci_mean: float
    uaci_std: float


def differential_test(plain, trials: int, seed: int = 0) -> DifferentialResult:
    """Flip the LSB of one random pixel/sample per trial and compare ciphertexts.

    The key is re-derived from each plaintext, so the two ciphertexts of a
    trial are produced under different keys.  Audio ciphertexts are compared
    in 16-bit sample units (see :func:`nscr_uaci_audio`).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    if isinstance(plain, AudioClip):
        base = encrypt_audio(plain).matrix()
        n = len(plain)
    else:
        plain = np.ascontiguousarray(plain, dtype=np.uint8)
        base = encrypt_image(plain).matrix()
        n = plain.size
    compare = nscr_uaci_audio if isinstance(plain, AudioClip) else npcr_uaci
    npcr, uaci = [], []
    for _ in range(trials):
        idx = int(rng.integers(n))
        if isinstance(plain, AudioClip):
            s = plain.samples.copy()
            s[idx] ^= 1
            other = encrypt_audio(AudioClip(plain.sample_rate, s)).matrix()
        else:
            p = plain.copy()
            p.flat[idx] ^= 1
            other = encrypt_image(p).matrix()
        a, b = compare(base, other)
        npcr.append(a)
        uaci.append(b)
    return DifferentialResult(trials, float(np.mean(npcr)), float(np.std(npcr)),
                              float(np.mean(uaci)), float(np.std(uaci)))


def analyze_image(cipher_img, cfg: GlcmConfig = GlcmConfig(),
                  differential: DifferentialResult | None = None) -> MetricsReport:
    rep = MetricsReport()
    for d in _DIRECTIONS:
        try:
            setattr(rep, f"cc_{d.lower()}", adjacency_correlation(cipher_img, d))
        except ValueError:
            pass
    rep.entropy_bits = entropy(cipher_img)
    rep.contrast, rep.energy = glcm_stats(cipher_img, cfg)
    if differential is not None:
        rep.npcr_pct = differential.npcr_mean
        rep.uaci_pct = differential.uaci_mean
    return rep


def analyze_audio(plain: AudioClip, differential: DifferentialResult | None = None) -> MetricsReport:
    """Ciphertext-vs-plaintext correlation and entropy for an audio clip.

    Correlation is taken over the padded byte matrix of the plaintext
    against the ciphertext bytes at the same positions.
    """
    env = encrypt_audio(plain)
    c = env.matrix()
    p, _ = audio_to_matrix(plain)
    rep = MetricsReport(entropy_bits=entropy(c))
    try:
        rep.cc_plain_cipher = pearson(p, c)
    except ValueError:
        pass
    if differential is not None:
        rep.nscr_pct = differential.npcr_mean
        rep.uaci_pct = differential.uaci_mean
    return rep
