"""Weighted-MMSE solver for fixed-selection multiuser sum-rate maximization.

The downlink rate of user k under selection t and beamformer columns f_k is
log2(1 + |h_k^H diag(t) f_k|^2 / (sigma^2 + sum_{i!=k} |h_k^H diag(t) f_i|^2)).
The solver alternates the classic receive-factor / weight / beamformer block
updates on the power-normalized surrogate (noise scaled by ||F||_F^2 / P) and
rescales the final beamformer onto the power sphere, where the surrogate and
true rates coincide.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constraints import SelectionVector
from .geometry import ChannelSet


@dataclass
class BeamformerMatrix:
    """Per-user transmit beamformers (columns) under a total power budget."""

    matrix: np.ndarray
    power_budget: float
    noise_power: float

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if self.power_budget <= 0 or self.noise_power <= 0:
            raise ValueError("power budget and noise power must be positive")
        used = float(np.linalg.norm(self.matrix) ** 2)
        if used > self.power_budget + 1e-9:
            raise ValueError(f"beamformer power {used} exceeds budget {self.power_budget}")


@dataclass
class AuxiliaryState:
    """Receive factors u_k, weights v_k and MSE terms e_k of the surrogate."""

    receive_factors: np.ndarray
    weights: np.ndarray
    mse_terms: np.ndarray

    def __post_init__(self):
        if np.any(self.weights <= 0):
            raise ValueError("weights must be positive")
        if np.any(self.mse_terms <= 0):
            raise ValueError("mse terms must be positive")


def _as_channel(channel) -> np.ndarray:
    if isinstance(channel, ChannelSet):
        return channel.matrix
    return np.asarray(channel, dtype=complex)


def _as_values(selection, n: int) -> np.ndarray:
    if selection is None:
        return np.ones(n)
    if isinstance(selection, SelectionVector):
        return selection.values
    return np.asarray(selection, dtype=float)


def _as_beamformer(beamformer) -> tuple[np.ndarray, float | None, float | None]:
    if isinstance(beamformer, BeamformerMatrix):
        return beamformer.matrix, beamformer.power_budget, beamformer.noise_power
    return np.asarray(beamformer, dtype=complex), None, None


def _cross_gains(H: np.ndarray, t: np.ndarray, F: np.ndarray) -> np.ndarray:
    """M[k, i] = h_k^H diag(t) f_i."""
    return (H * t[:, None]).conj().T @ F


def sum_rate(channel, selection, beamformer, noise_power: float | None = None) -> float:
    """Sum of user rates in bits/s/Hz for the given selection and beamformer."""
    H = _as_channel(channel)
    t = _as_values(selection, H.shape[0])
    F, _, bf_noise = _as_beamformer(beamformer)
    if noise_power is None:
        noise_power = bf_noise
    if noise_power is None or noise_power <= 0:
        raise ValueError("positive noise power required")
    M = _cross_gains(H, t, F)
    sig = np.abs(np.diag(M)) ** 2
    interf = (np.abs(M) ** 2).sum(axis=1) - sig
    return float(np.log2(1.0 + sig / (noise_power + interf)).sum())


def update_u(channel, selection, beamformer, noise_power: float, power: float) -> np.ndarray:
    """Closed-form receive factors minimizing each e_k for fixed (v, F, t)."""
    H = _as_channel(channel)
    t = _as_values(selection, H.shape[0])
    F, bf_power, bf_noise = _as_beamformer(beamformer)
    M = _cross_gains(H, t, F)
    denom = (np.abs(M) ** 2).sum(axis=1) + noise_power * np.linalg.norm(F) ** 2 / power
    if np.any(denom <= 0):
        raise ValueError("degenerate input: zero receive denominator (F = 0?)")
    return np.diag(M).conj() / denom


def mse_terms(channel, selection, beamformer, u: np.ndarray,
              noise_power: float, power: float) -> np.ndarray:
    """Per-user MSE e_k of the power-normalized surrogate."""
    H = _as_channel(channel)
    t = _as_values(selection, H.shape[0])
    F, _, _ = _as_beamformer(beamformer)
    M = _cross_gains(H, t, F)
    total = (np.abs(u[:, None] * M) ** 2).sum(axis=1)
    own = np.abs(u * np.diag(M)) ** 2
    e = (total - own) + np.abs(u * np.diag(M) - 1.0) ** 2
    e += np.abs(u) ** 2 * noise_power * np.linalg.norm(F) ** 2 / power
    return e


def update_v(e: np.ndarray) -> np.ndarray:
    """Optimal surrogate weights v_k = 1 / e_k."""
    e = np.asarray(e, dtype=float)
    if np.any(e <= 0):
        raise ValueError("degenerate input: nonpositive mse term")
    return 1.0 / e


def update_f(channel, selection, u: np.ndarray, v: np.ndarray,
             noise_power: float, power: float) -> np.ndarray:
    """Beamformer block update: one Hermitian solve shared by all users."""
    H = _as_channel(channel)
    t = _as_values(selection, H.shape[0])
    Ht = H * t[:, None]
    c = v * np.abs(u) ** 2
    psi = (Ht * c[None, :]) @ Ht.conj().T
    psi += (noise_power / power) * c.sum() * np.eye(H.shape[0])
    eta = Ht * (v * u)[None, :]
    try:
        F = np.linalg.solve(psi, eta)
    except np.linalg.LinAlgError:
        F, *_ = np.linalg.lstsq(psi, eta, rcond=None)
        if np.linalg.norm(psi @ F - eta) > 1e-6 * max(np.linalg.norm(eta), 1e-30):
            raise RuntimeError("numerical failure: inconsistent beamformer system")
    return F


def wmmse_solve(channel, selection, power: float, noise_power: float,
                max_iters: int = 200, tol: float = 1e-6,
                f_init: np.ndarray | None = None,
                track: bool = False) -> tuple[BeamformerMatrix, float, dict]:
    """Maximize the sum rate over beamformers for a fixed binary selection.

    Works on the selected sub-channel, rescales the converged beamformer to
    use the full power budget, and embeds it back over all candidates.
    Returns (beamformer, achieved rate, info); info['converged'] is False if
    the iteration cap was hit, and info['rates'] traces the per-iteration
    surrogate rate when track=True.
    """
    H = _as_channel(channel)
    nt, k = H.shape
    t = _as_values(selection, nt)
    idx = np.flatnonzero(t > 0.5)
    info: dict = {"converged": True, "iterations": 0}
    if track:
        info["rates"] = []

    full = np.zeros((nt, k), dtype=complex)
    Hs = H[idx, :]
    if idx.size == 0 or not np.any(np.abs(Hs) > 0):
        return BeamformerMatrix(full, power, noise_power), 0.0, info

    F = None
    if f_init is not None:
        F = np.asarray(f_init, dtype=complex)
        if F.shape[0] == nt:
            F = F[idx, :]
        if not np.any(np.abs(F) > 0):
            F = None
    if F is None:
        F = Hs.copy()

    ones = np.ones(idx.size)
    prev = None
    rate = 0.0
    for it in range(max_iters):
        u = update_u(Hs, ones, F, noise_power, power)
        e = mse_terms(Hs, ones, F, u, noise_power, power)
        v = update_v(e)
        F = update_f(Hs, ones, u, v, noise_power, power)
        rate = sum_rate(Hs, ones, F, noise_power * np.linalg.norm(F) ** 2 / power)
        if track:
            info["rates"].append(rate)
        info["iterations"] = it + 1
        if prev is not None and abs(rate - prev) <= tol * max(1.0, abs(prev)):
            break
        prev = rate
    else:
        info["converged"] = False

    norm = np.linalg.norm(F)
    if norm > 0:
        F = F * (np.sqrt(power) / norm)
    full[idx, :] = F
    rate = sum_rate(Hs, ones, F, noise_power)
    return BeamformerMatrix(full, power, noise_power), rate, info
