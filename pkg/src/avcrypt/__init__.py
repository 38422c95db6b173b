"""Lightweight chaotic audio/image cipher, its security metrics, and a
visually-driven Wiener filter speech enhancer."""

__version__ = "0.1.0"
