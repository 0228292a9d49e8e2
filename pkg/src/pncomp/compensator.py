"""Per-symbol phase-noise compensation: W construction, LS/TLS fit, equalize.

The correction vector V @ gamma approximates exp(-j*phi); gamma is fit on
the pilot rows of W = diag(1/lambda) F diag(z) V (one block per receive
branch), optionally augmented with null-tone rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import CompBasis
from .numerics import CVec, CMat, fft, pinv, svd, DEFAULT_RCOND
from .ofdm import FreqSymbol, evm_db as _evm_db

WEAK_TONE_REL = 1e-6


@dataclass(frozen=True)
class CompConfig:
    method: str = "LS"
    use_null_tones: bool = False
    rcond: float = DEFAULT_RCOND

    def __post_init__(self):
        if self.method not in ("LS", "TLS"):
            raise ValueError(f"method must be LS or TLS, got {self.method!r}")


@dataclass(frozen=True)
class CompResult:
    gamma: CVec
    s_hat: FreqSymbol
    correction: CVec
    evm_db: float
    n_equations: int
    underdetermined: bool = False
    branch_s_hat: CMat = field(default=None, repr=False)


def _as_branches(a) -> CMat:
    a = np.asarray(a, dtype=np.complex128)
    return a[None, :] if a.ndim == 1 else a


def strong_tone_mask(lam: CVec) -> np.ndarray:
    mag = np.abs(lam)
    peak = mag.max()
    if peak == 0:
        raise ValueError("all-zero channel response")
    return mag >= WEAK_TONE_REL * peak


def build_w(z: CVec, lam: CVec, basis: CompBasis) -> CMat:
    """W = diag(1/lambda) F diag(z) V, column-wise via the FFT.

    Rows for tones with |lambda| below 1e-6 of the peak are zeroed; callers
    exclude them from the equation system.
    """
    z = np.asarray(z, dtype=np.complex128)
    lam = np.asarray(lam, dtype=np.complex128)
    mask = strong_tone_mask(lam)
    fzv = fft((z[:, None] * basis.v).T).T  # per-column unitary FFT
    w = np.zeros_like(fzv)
    w[mask] = fzv[mask] / lam[mask, None]
    return w


def solve_ls(w_rows: CMat, s_rows: CVec, rcond: float = DEFAULT_RCOND) -> CVec:
    """Minimum-norm least squares via the pseudoinverse."""
    if w_rows.shape[0] < 1:
        raise ValueError("no equation rows")
    return pinv(w_rows, rcond) @ s_rows


def solve_tls(w_rows: CMat, s_rows: CVec) -> CVec:
    """Total least squares from the SVD of [W, s].

    gamma = -q12/q22 from the last right singular vector; falls back to
    LS when q22 vanishes or when there are fewer rows than d + 1.
    """
    m, d = w_rows.shape
    if m < d + 1:
        return solve_ls(w_rows, s_rows)
    res = svd(np.column_stack([w_rows, s_rows]))
    q_last = res.q[:, d]
    q22 = q_last[d]
    if np.abs(q22) <= 1e-12:
        return solve_ls(w_rows, s_rows)
    return -q_last[:d] / q22


def tls_implied_perturbation(w_rows: CMat, s_rows: CVec, gamma: CVec) -> CMat:
    """Minimal [dW, ds] with (W+dW)gamma = s+ds; rank one in the residual."""
    r = w_rows @ gamma - s_rows
    g = np.concatenate([gamma, [-1.0 + 0j]])
    return -np.outer(r, g.conj()) / (np.linalg.norm(g) ** 2)


def equalize_only(z, lam) -> CVec:
    """MRC-combined per-tone equalization with no phase-noise correction."""
    z, lam = _as_branches(z), _as_branches(lam)
    fz = fft(z)
    num = np.sum(np.conj(lam) * fz, axis=0)
    den = np.sum(np.abs(lam) ** 2, axis=0)
    den = np.where(den == 0, 1.0, den)
    return num / den


def _mrc_combine(s_branches: CMat, lam: CMat) -> CVec:
    w = np.abs(lam) ** 2
    den = w.sum(axis=0)
    den = np.where(den == 0, 1.0, den)
    return (w * s_branches).sum(axis=0) / den


def compensate(z, lam, basis: CompBasis, ref: FreqSymbol,
               cfg: CompConfig = CompConfig()) -> CompResult:
    """Estimate gamma on pilot rows of all branches, correct and equalize.

    z and lam are (n_rx, N) arrays (or length-N vectors for one branch).
    """
    z, lam = _as_branches(z), _as_branches(lam)
    layout = ref.layout
    rows, targets = [], []
    w_all = []
    for b in range(z.shape[0]):
        w_b = build_w(z[b], lam[b], basis)
        w_all.append(w_b)
        mask = strong_tone_mask(lam[b])
        p_idx = [k for k in layout.pilot_idx if mask[k]]
        rows.append(w_b[p_idx])
        targets.append(ref.s[p_idx])
        if cfg.use_null_tones and layout.null_idx:
            n_idx = [k for k in layout.null_idx if mask[k]]
            rows.append(w_b[n_idx])
            targets.append(np.zeros(len(n_idx), dtype=np.complex128))
    w_rows = np.vstack(rows)
    s_rows = np.concatenate(targets)
    underdetermined = w_rows.shape[0] < basis.d
    if cfg.method == "TLS":
        gamma = solve_tls(w_rows, s_rows)
    else:
        gamma = solve_ls(w_rows, s_rows, cfg.rcond)
    s_branches = np.stack([w @ gamma for w in w_all])
    s_hat = FreqSymbol(s=_mrc_combine(s_branches, lam), layout=layout)
    return CompResult(
        gamma=gamma,
        s_hat=s_hat,
        correction=basis.v @ gamma,
        evm_db=_evm_db(s_hat, ref),
        n_equations=w_rows.shape[0],
        underdetermined=underdetermined,
        branch_s_hat=s_branches,
    )
