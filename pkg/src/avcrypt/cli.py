"""Command-line entry point: ``avcrypt <subcommand> [flags]``.

Exit codes: 0 success, 1 usage error, 2 I/O or format error,
3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

import numpy as np

from . import evwf, metrics, net, pipeline, synth
from .chaos import warmup
from .evwf import FeatureTrack, FrameConfig
from .media import (
    KIND_AUDIO,
    KIND_IMAGE,
    MAGIC,
    FormatError,
    load_image,
    load_wav,
    parse_envelope,
    save_pgm,
    save_wav,
    serialize_envelope,
)
from .sbox import SBoxError

log = logging.getLogger("avcrypt")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class VerificationError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _read(path) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def _write(path, data: bytes) -> None:
    with open(path, "wb") as fh:
        fh.write(data)


def _secret(args) -> bytes | None:
    if getattr(args, "secret", None) is None:
        return None
    s = _read(args.secret)
    if len(s) != 64:
        raise FormatError("secret file must hold exactly 64 bytes")
    return s


def _emit(args, data: dict, text: str) -> None:
    if args.json:
        print(json.dumps(data, indent=2))
    else:
        sys.stdout.write(text)


def _envelope(path, kind):
    env = parse_envelope(_read(path))
    if env.media_kind != kind:
        raise FormatError("envelope holds the wrong media kind")
    return env


# ------------------------------------------------------------- commands

def cmd_encrypt_image(args):
    env = pipeline.encrypt_image(load_image(args.inp), args.poly, _secret(args))
    _write(args.out, serialize_envelope(env))


def cmd_decrypt_image(args):
    save_pgm(args.out, pipeline.decrypt_image(_envelope(args.inp, KIND_IMAGE), _secret(args)))


def cmd_encrypt_audio(args):
    env = pipeline.encrypt_audio(load_wav(args.inp), args.poly, _secret(args))
    _write(args.out, serialize_envelope(env))


def cmd_decrypt_audio(args):
    env = _envelope(args.inp, KIND_AUDIO)
    save_wav(args.out, pipeline.decrypt_audio(env, args.rate, _secret(args)))


def cmd_analyze_image(args):
    data = _read(args.inp)
    img = parse_envelope(data).matrix() if data[:4] == MAGIC else load_image(args.inp)
    cfg = metrics.GlcmConfig(levels=args.glcm_levels)
    rep = metrics.analyze_image(img, cfg)
    _emit(args, rep.to_dict(), rep.to_text())


def cmd_analyze_audio(args):
    if args.trials < 0:
        raise UsageError("--trials must be >= 0")
    clip = load_wav(args.inp)
    diff = metrics.differential_test(clip, args.trials, args.seed) if args.trials else None
    rep = metrics.analyze_audio(clip, diff)
    _emit(args, rep.to_dict(), rep.to_text())


def cmd_differential(args):
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    if args.inp.lower().endswith(".wav"):
        plain = load_wav(args.inp)
    else:
        plain = load_image(args.inp)
    res = metrics.differential_test(plain, args.trials, args.seed)
    d = {"trials": res.trials, "npcr_mean": res.npcr_mean, "npcr_std": res.npcr_std,
         "uaci_mean": res.uaci_mean, "uaci_std": res.uaci_std}
    _emit(args, d, "".join(f"{k} = {v:.6g}\n" for k, v in d.items()))


def cmd_enhance(args):
    if not args.features:
        raise UsageError("enhance needs --features")
    noisy = load_wav(args.inp)
    cfg = FrameConfig(sample_rate=noisy.sample_rate)
    out = evwf.enhance(noisy, FeatureTrack.load(args.features), cfg, args.gmin, args.eps)
    save_wav(args.out, out)


def cmd_oracle_features(args):
    clean = load_wav(args.inp)
    evwf.oracle_features(clean, FrameConfig(sample_rate=clean.sample_rate)).save(args.out)


def cmd_dct_features(args):
    frames = [load_image(p) for p in args.inp]
    track = evwf.dct2_visual_features(frames, args.k, args.fps)
    rate = FrameConfig().frame_rate
    lines = [f"dct{track.shape[1]} {track.shape[0]} {rate:g}"]
    lines += [",".join(repr(float(v)) for v in row) for row in track]
    with open(args.out, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_serve(args):
    net.serve(args.addr, args.port)


def cmd_client(args):
    if not args.features:
        raise UsageError("client needs --features")
    noisy = load_wav(args.inp)
    feats = FeatureTrack.load(args.features)
    report = net.LatencyReport()
    with net.Client(args.addr, args.port, args.timeout, noisy.sample_rate) as c:
        for _ in range(args.repeat):
            clip, times = c.enhance(noisy, feats)
            report.add(times)
    if args.out:
        save_wav(args.out, clip)
    _emit(args, report.aggregates(), report.to_text())


def _timed(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return out, best * 1e3


def cmd_bench(args):
    warmup()
    img = synth.natural_image()
    clip = synth.speech_clip(1.0, seed=args.seed)
    pipeline.decrypt_image(pipeline.encrypt_image(img))
    env, t_ie = _timed(lambda: pipeline.encrypt_image(img), args.repeat)
    dec, t_id = _timed(lambda: pipeline.decrypt_image(env), args.repeat)
    aenv, t_ae = _timed(lambda: pipeline.encrypt_audio(clip), args.repeat)
    adec, t_ad = _timed(lambda: pipeline.decrypt_audio(aenv, clip.sample_rate), args.repeat)
    d = {
        "image_512x512_encrypt_ms": t_ie,
        "image_512x512_decrypt_ms": t_id,
        "audio_1s_encrypt_ms": t_ae,
        "audio_1s_decrypt_ms": t_ad,
        "budget_ms": 25.0,
    }
    _emit(args, d, "".join(f"{k} = {v:.3f}\n" for k, v in d.items()))
    if not np.array_equal(dec, img) or adec != clip:
        raise VerificationError("round trip mismatch")


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="avcrypt", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, inp=True, out=True, nargs=None):
        sp = sub.add_parser(name)
        sp.set_defaults(func=fn)
        if inp:
            sp.add_argument("--in", dest="inp", required=True, nargs=nargs)
        sp.add_argument("--out", required=out)
        sp.add_argument("--json", action="store_true", help="machine-readable output")
        sp.add_argument("--seed", type=int, default=0)
        return sp

    def poly(sp):
        sp.add_argument("--poly", type=lambda s: int(s, 0), default=None,
                        help="S-box reduction polynomial, e.g. 0x11b")

    def secret(sp):
        sp.add_argument("--secret", help="file with a 64-byte secret that wraps the digest")

    for name, fn in (("encrypt-image", cmd_encrypt_image), ("encrypt-audio", cmd_encrypt_audio)):
        sp = add(name, fn)
        poly(sp)
        secret(sp)
    secret(add("decrypt-image", cmd_decrypt_image))
    sp = add("decrypt-audio", cmd_decrypt_audio)
    secret(sp)
    sp.add_argument("--rate", type=int, default=pipeline.DEFAULT_SAMPLE_RATE)
    sp = add("analyze-image", cmd_analyze_image, out=False)
    sp.add_argument("--glcm-levels", type=int, default=8)
    sp = add("analyze-audio", cmd_analyze_audio, out=False)
    sp.add_argument("--trials", type=int, default=1)
    sp = add("differential", cmd_differential, out=False)
    sp.add_argument("--trials", type=int, default=20)
    for name, fn in (("enhance", cmd_enhance), ("client", cmd_client)):
        sp = add(name, fn, out=(name == "enhance"))
        sp.add_argument("--features")
        sp.add_argument("--gmin", type=float, default=evwf.G_MIN)
        sp.add_argument("--eps", type=float, default=evwf.EPS)
    sp.add_argument("--addr", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=net.DEFAULT_PORT)
    sp.add_argument("--timeout", type=float, default=10.0)
    sp.add_argument("--repeat", type=int, default=1)
    add("oracle-features", cmd_oracle_features)
    sp = add("dct-features", cmd_dct_features, nargs="+")
    sp.add_argument("--k", type=int, default=32, help="zigzag coefficients kept per frame")
    sp.add_argument("--fps", type=float, default=25.0)
    sp = add("serve", cmd_serve, inp=False, out=False)
    sp.add_argument("--addr", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=net.DEFAULT_PORT)
    sp = add("bench", cmd_bench, inp=False, out=False)
    sp.add_argument("--repeat", type=int, default=5)
    return p


def run(argv=None) -> int:
    level = os.environ.get("AVC_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except VerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (OSError, ValueError, SBoxError, FormatError, net.RemoteError, net.ProtocolError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
