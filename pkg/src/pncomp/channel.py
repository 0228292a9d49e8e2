"""Multipath channel generation and fast circulant application with AWGN.

The channel is circulant (cyclic prefix removed), so applying it is a
per-tone multiplication in the frequency domain: y = F* (lambda ⊙ F x) + n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import CVec, CMat, fft, ifft


@dataclass(frozen=True)
class ChannelState:
    """Per-branch taps (n_rx, N) and per-tone response lambda (n_rx, N).

    lambda = sqrt(N) * fft(taps), consistent with H = F* diag(lambda) F.
    """

    taps: CMat
    lam: CMat

    @property
    def n_rx(self) -> int:
        return self.taps.shape[0]

    @property
    def n(self) -> int:
        return self.taps.shape[1]


@dataclass(frozen=True)
class NoiseSpec:
    """AWGN level relative to unit nominal per-sample signal power."""

    snr_db: float
    seed: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.snr_db) or self.snr_db == np.inf):
            raise ValueError("snr_db must be finite or +inf")


def _profile_weights(n_taps: int, profile: str) -> np.ndarray:
    if profile == "uniform":
        w = np.ones(n_taps)
    elif profile.startswith("exp_decay"):
        tau = 3.0
        if "(" in profile:
            tau = float(profile[profile.index("(") + 1:profile.rindex(")")])
        w = np.exp(-np.arange(n_taps) / tau)
    else:
        raise ValueError(f"unknown channel profile {profile!r}")
    return w / w.sum()


def from_taps(taps: np.ndarray, n: int) -> ChannelState:
    taps = np.atleast_2d(np.asarray(taps, dtype=np.complex128))
    if taps.shape[1] > n:
        raise ValueError(f"more taps than tones ({taps.shape[1]} > {n})")
    padded = np.zeros((taps.shape[0], n), dtype=np.complex128)
    padded[:, :taps.shape[1]] = taps
    lam = np.sqrt(n) * fft(padded)
    return ChannelState(taps=padded, lam=lam)


def gen_channel(n_taps: int, profile: str, seed: int, n_rx: int = 1,
                n: int = 64) -> ChannelState:
    """Random taps shaped by profile, normalized so E|lambda_k|^2 = 1."""
    if not 1 <= n_taps <= n:
        raise ValueError(f"n_taps must be in [1, {n}], got {n_taps}")
    rng = np.random.default_rng(seed)
    w = _profile_weights(n_taps, profile)
    taps = np.sqrt(w / 2) * (rng.standard_normal((n_rx, n_taps))
                             + 1j * rng.standard_normal((n_rx, n_taps)))
    return from_taps(taps, n)


def load_channel_taps(path, n: int, n_rx: int = 1) -> ChannelState:
    """Read taps from a CSV file with one 're,im' line per tap.

    With n_rx > 1 the file holds the branches concatenated, equal length each.
    """
    taps = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 're,im'")
            taps.append(complex(float(parts[0]), float(parts[1])))
    if not taps or len(taps) % n_rx != 0:
        raise ValueError(f"{path}: tap count {len(taps)} not divisible by n_rx={n_rx}")
    return from_taps(np.array(taps).reshape(n_rx, -1), n)


def apply_channel(ch: ChannelState, x: CVec, noise: NoiseSpec,
                  rng: np.random.Generator | None = None) -> CMat:
    """y_b = H_b x + n_b per receive branch; returns shape (n_rx, N).

    Noise power is 10^(-snr/10) per complex sample, referenced to the unit
    nominal signal power (channels are normalized to unit mean tone gain).
    An explicit rng overrides noise.seed so callers can stream symbols.
    """
    x = np.asarray(x, dtype=np.complex128)
    if x.shape != (ch.n,):
        raise ValueError(f"x length {x.shape} != N={ch.n}")
    y = ifft(ch.lam * fft(x)[None, :])
    if noise.snr_db != np.inf:
        if rng is None:
            rng = np.random.default_rng(noise.seed)
        sigma = np.sqrt(10.0 ** (-noise.snr_db / 10.0) / 2.0)
        y = y + sigma * (rng.standard_normal(y.shape)
                         + 1j * rng.standard_normal(y.shape))
    return y
