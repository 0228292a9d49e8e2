"""Multiuser uplink compensation: per-tone ZF beamforming and joint LS.

All receive chains share one LO, so a single correction vector V @ gamma
is estimated from the pilot tones of every user at once.  The stacked
time-domain operator is realized per tone (circulant blocks diagonalize
under the DFT), never as a materialized Kronecker product.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import CompBasis
from .channel import ChannelState, NoiseSpec
from .compensator import CompConfig, CompResult, solve_ls, solve_tls
from .numerics import CVec, CMat, fft, ifft
from .ofdm import FreqSymbol, evm_db as _evm_db

RANK_TOL = 1e-9


@dataclass(frozen=True)
class MuSystem:
    """n_users single-antenna transmitters into an n_rx-antenna receiver.

    channels[u] holds user u's ChannelState with n_rx branches; lam is the
    per-tone channel tensor of shape (N, n_rx, n_users).
    """

    channels: tuple[ChannelState, ...]
    tx_pn_sigma_deg: float = 0.0

    def __post_init__(self):
        n_rx = self.channels[0].n_rx
        if len(self.channels) > n_rx:
            raise ValueError("need n_rx >= n_users")
        if any(ch.n_rx != n_rx for ch in self.channels):
            raise ValueError("all users must see the same receive branches")

    @property
    def n_users(self) -> int:
        return len(self.channels)

    @property
    def n_rx(self) -> int:
        return self.channels[0].n_rx

    @property
    def n(self) -> int:
        return self.channels[0].n

    @property
    def lam(self) -> np.ndarray:
        return np.stack([ch.lam.T for ch in self.channels], axis=2)


@dataclass(frozen=True)
class ZfBeamformer:
    """Per-tone ZF matrices b[k]: n_users x n_rx with b[k] @ lam[k] = I."""

    b: np.ndarray
    ok_tones: np.ndarray

    def __post_init__(self):
        if not np.any(self.ok_tones):
            raise ValueError("all tones are rank-deficient")


def zf_beamformer(sys: MuSystem) -> ZfBeamformer:
    lam = sys.lam  # (N, n_rx, n_users)
    n, n_rx, n_users = lam.shape
    b = np.zeros((n, n_users, n_rx), dtype=np.complex128)
    ok = np.zeros(n, dtype=bool)
    for k in range(n):
        u, s, vh = np.linalg.svd(lam[k], full_matrices=False)
        ok[k] = s[-1] > RANK_TOL * s[0] and s[0] > 0
        if ok[k]:
            b[k] = (vh.conj().T * (1.0 / s)) @ u.conj().T
    return ZfBeamformer(b=b, ok_tones=ok)


def mu_received(sys: MuSystem, syms: list[FreqSymbol], psi_rx: CVec,
                tx_psi: list[CVec] | None, noise: NoiseSpec,
                rng: np.random.Generator | None = None) -> CMat:
    """Received time-domain signal per rx branch, shape (n_rx, N)."""
    n = sys.n
    z = np.zeros((sys.n_rx, n), dtype=np.complex128)
    for u, sym in enumerate(syms):
        x = ifft(sym.s)
        if tx_psi is not None:
            x = tx_psi[u] * x
        z += ifft(sys.channels[u].lam * fft(x)[None, :])
    if noise.snr_db != np.inf:
        if rng is None:
            rng = np.random.default_rng(noise.seed)
        sigma = np.sqrt(10.0 ** (-noise.snr_db / 10.0) / 2.0)
        z += sigma * (rng.standard_normal(z.shape)
                      + 1j * rng.standard_normal(z.shape))
    return psi_rx[None, :] * z


def mu_build_w(z: CMat, bf: ZfBeamformer, basis: CompBasis) -> np.ndarray:
    """Per-user W tensor (n_users, N, d) without Kronecker materialization."""
    g = fft((z[:, :, None] * basis.v[None, :, :]).transpose(0, 2, 1))
    g = g.transpose(0, 2, 1)  # (n_rx, N, d): F diag(z_r) V
    return np.einsum("kur,rkd->ukd", bf.b, g)


def mu_compensate(sys: MuSystem, z: CMat, basis: CompBasis,
                  refs: list[FreqSymbol], cfg: CompConfig = CompConfig(),
                  bf: ZfBeamformer | None = None) -> list[CompResult]:
    """Joint gamma from all users' pilot rows; per-user equalized symbols."""
    if bf is None:
        bf = zf_beamformer(sys)
    w = mu_build_w(z, bf, basis)
    rows, targets = [], []
    for u, ref in enumerate(refs):
        p_idx = [k for k in ref.layout.pilot_idx if bf.ok_tones[k]]
        rows.append(w[u, p_idx])
        targets.append(ref.s[p_idx])
        if cfg.use_null_tones and ref.layout.null_idx:
            n_idx = [k for k in ref.layout.null_idx if bf.ok_tones[k]]
            rows.append(w[u, n_idx])
            targets.append(np.zeros(len(n_idx), dtype=np.complex128))
    w_rows = np.vstack(rows)
    s_rows = np.concatenate(targets)
    underdetermined = w_rows.shape[0] < basis.d
    if cfg.method == "TLS":
        gamma = solve_tls(w_rows, s_rows)
    else:
        gamma = solve_ls(w_rows, s_rows, cfg.rcond)
    correction = basis.v @ gamma
    results = []
    for u, ref in enumerate(refs):
        s_hat = FreqSymbol(s=w[u] @ gamma, layout=ref.layout)
        results.append(CompResult(
            gamma=gamma,
            s_hat=s_hat,
            correction=correction,
            evm_db=_evm_db(s_hat, ref),
            n_equations=w_rows.shape[0],
            underdetermined=underdetermined,
        ))
    return results
