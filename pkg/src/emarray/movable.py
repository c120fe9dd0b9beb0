"""Continuous-position benchmark: antennas move freely inside a rectangle.

Beamforming and antenna positions are optimized alternately: WMMSE for the
beamformers at fixed positions, then a log-barrier ascent on the positions at
fixed beamformers (barrier terms for the region faces and the pairwise
half-wavelength spacing).  Positions live on the y = 0 plane.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .wmmse import BeamformerMatrix, sum_rate, wmmse_solve

_LN2 = np.log(2.0)


@dataclass(frozen=True)
class Rect:
    """Axis-aligned transmit region in the y = 0 plane (extents may be zero)."""

    x_lo: float
    x_hi: float
    z_lo: float = 0.0
    z_hi: float = 0.0

    def __post_init__(self):
        if self.x_hi < self.x_lo or self.z_hi < self.z_lo:
            raise ValueError("region extents must be nonnegative")

    @property
    def active_axes(self) -> tuple[int, ...]:
        axes = []
        if self.x_hi > self.x_lo:
            axes.append(0)
        if self.z_hi > self.z_lo:
            axes.append(2)
        return tuple(axes)

    def bounds(self, axis: int) -> tuple[float, float]:
        return (self.x_lo, self.x_hi) if axis == 0 else (self.z_lo, self.z_hi)


@dataclass
class MmaLayout:
    """Positions of the movable antennas plus their feasibility data."""

    positions: np.ndarray
    region: Rect
    min_spacing: float

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float).reshape(-1, 3)

    def validate(self, tol: float = 1e-9) -> None:
        p = self.positions
        if np.any(p[:, 0] < self.region.x_lo - tol) or np.any(p[:, 0] > self.region.x_hi + tol):
            raise ValueError("antenna outside region (x)")
        if np.any(p[:, 2] < self.region.z_lo - tol) or np.any(p[:, 2] > self.region.z_hi + tol):
            raise ValueError("antenna outside region (z)")
        if len(p) > 1:
            d = np.linalg.norm(p[:, None, :] - p[None, :, :], axis=2)
            np.fill_diagonal(d, np.inf)
            if d.min() < self.min_spacing - tol:
                raise ValueError(f"antenna spacing {d.min()} below {self.min_spacing}")


@dataclass
class BarrierState:
    """Barrier coefficients and their fixed shrink schedule."""

    mu: float = 0.1
    rho: float = 0.1
    shrink: float = 0.25
    rounds: int = 6

    def __post_init__(self):
        if self.mu <= 0 or self.rho <= 0:
            raise ValueError("barrier coefficients must be positive")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink factor must lie in (0, 1)")


class _PathStack:
    """All users' path gains and wave vectors stacked for vectorized math."""

    def __init__(self, paths_per_user):
        gains, vecs, owner = [], [], []
        for k, paths in enumerate(paths_per_user):
            for p in paths:
                gains.append(p.gain)
                ce = np.cos(p.elevation)
                vecs.append((ce * np.sin(p.azimuth), ce * np.cos(p.azimuth),
                             np.sin(p.elevation)))
                owner.append(k)
        self.n_users = len(paths_per_user)
        self.gains = np.asarray(gains, dtype=complex)
        self.vec = np.asarray(vecs, dtype=float)
        self.onehot = np.zeros((len(owner), self.n_users))
        self.onehot[np.arange(len(owner)), owner] = 1.0

    def channel(self, positions, wavelength, amp):
        phase = np.exp(2j * np.pi * (positions @ self.vec.T) / wavelength)
        return amp * (phase * self.gains[None, :]) @ self.onehot

    def channel_and_derivative(self, positions, wavelength, amp):
        phase = np.exp(2j * np.pi * (positions @ self.vec.T) / wavelength)
        weighted = phase * self.gains[None, :]
        g = amp * weighted @ self.onehot
        scale = amp * 2j * np.pi / wavelength
        dg = np.stack([scale * (weighted * self.vec[None, :, c]) @ self.onehot
                       for c in range(3)], axis=2)        # (N, K, 3)
        return g, dg


def position_channel(positions: np.ndarray, paths_per_user, wavelength: float = 1.0,
                     amp: float | None = None) -> np.ndarray:
    """Channel matrix (N x K) for antennas at arbitrary 3-D positions.

    Per-path amplitude ``amp`` defaults to sqrt(1/N).
    """
    positions = np.asarray(positions, dtype=float).reshape(-1, 3)
    if amp is None:
        amp = np.sqrt(1.0 / positions.shape[0])
    return _PathStack(paths_per_user).channel(positions, wavelength, amp)


def _rate_gradient(stack: _PathStack, positions, W, noise_power, wavelength, amp):
    g, dg = stack.channel_and_derivative(positions, wavelength, amp)
    A = g.conj().T @ W                                     # A[k, i] = g_k^H w_i
    sig = np.abs(np.diag(A)) ** 2
    interf = noise_power + (np.abs(A) ** 2).sum(axis=1) - sig
    own = W * np.diag(A).conj()[None, :]                   # (N, K)
    others = W @ A.conj().T - own
    d_sig = 2.0 * (own[:, :, None] * dg.conj()).real       # (N, K, 3)
    d_int = 2.0 * (others[:, :, None] * dg.conj()).real
    denom = (interf * (interf + sig) * _LN2)[None, :, None]
    grad = ((d_sig * interf[None, :, None] - d_int * sig[None, :, None]) / denom).sum(axis=1)
    return grad


def position_gradient(positions: np.ndarray, paths_per_user, W: np.ndarray,
                      noise_power: float, wavelength: float = 1.0,
                      amp: float | None = None) -> np.ndarray:
    """Gradient of the sum rate with respect to each antenna position.

    Analytic chain rule through the steering phases; returns an (N, 3) array.
    """
    positions = np.asarray(positions, dtype=float).reshape(-1, 3)
    if isinstance(W, BeamformerMatrix):
        W = W.matrix
    W = np.asarray(W, dtype=complex)
    if amp is None:
        amp = np.sqrt(1.0 / positions.shape[0])
    if not np.any(np.abs(W) > 0):
        return np.zeros((positions.shape[0], 3))
    return _rate_gradient(_PathStack(paths_per_user), positions, W,
                          noise_power, wavelength, amp)


def _slacks(positions, region: Rect, min_spacing):
    """Face slacks per active axis and pairwise spacing slacks (must stay > 0)."""
    lo_faces, hi_faces = [], []
    for ax in region.active_axes:
        lo, hi = region.bounds(ax)
        lo_faces.append(positions[:, ax] - lo)
        hi_faces.append(hi - positions[:, ax])
    n = positions.shape[0]
    iu = np.triu_indices(n, 1)
    if iu[0].size:
        diff = positions[iu[0]] - positions[iu[1]]
        dist = np.linalg.norm(diff, axis=1)
        gap = dist - min_spacing
    else:
        dist = gap = np.zeros(0)
    return lo_faces, hi_faces, gap, dist, iu


def _strictly_interior(lo_faces, hi_faces, gap) -> bool:
    for f in lo_faces + hi_faces:
        if f.size and f.min() <= 0:
            return False
    return not (gap.size and gap.min() <= 0)


def optimize_positions(layout: MmaLayout, paths_per_user, W, noise_power: float,
                       barrier: BarrierState | None = None,
                       wavelength: float = 1.0, amp: float | None = None,
                       max_steps: int = 80, grad_tol: float = 1e-4) -> tuple[MmaLayout, dict]:
    """Barrier ascent on antenna positions at fixed beamformers.

    The start must be strictly feasible.  Every accepted step stays strictly
    feasible and does not decrease the barrier objective; the returned layout
    is the iterate with the best true sum rate seen (never worse than the
    input within 1e-9).
    """
    if isinstance(W, BeamformerMatrix):
        W = W.matrix
    W = np.asarray(W, dtype=complex)
    bar = barrier or BarrierState()
    region, spacing = layout.region, layout.min_spacing
    p = layout.positions.copy()
    n = p.shape[0]
    if amp is None:
        amp = np.sqrt(1.0 / n)
    stack = _PathStack(paths_per_user)
    axes = region.active_axes

    def rate_at(pos):
        return sum_rate(stack.channel(pos, wavelength, amp), None, W, noise_power)

    def barrier_at(pos, mu, rho):
        lo_f, hi_f, gap, _, _ = _slacks(pos, region, spacing)
        if not _strictly_interior(lo_f, hi_f, gap):
            return -np.inf, None
        rate = rate_at(pos)
        val = rate
        for f in lo_f + hi_f:
            val += mu * np.log(f).sum()
        if gap.size:
            val += rho * np.log(gap).sum()
        return val, rate

    lo_f, hi_f, gap, _, _ = _slacks(p, region, spacing)
    if not _strictly_interior(lo_f, hi_f, gap):
        raise RuntimeError("initialization failure: start is not strictly interior")

    best_p, best_rate = p.copy(), rate_at(p)
    mu, rho = bar.mu, bar.rho
    info = {"rounds": 0, "steps": 0, "grad_norm": np.nan}
    step_guess = 0.05 * wavelength

    for _ in range(bar.rounds):
        info["rounds"] += 1
        val, _ = barrier_at(p, mu, rho)
        for _ in range(max_steps):
            lo_f, hi_f, gap, dist, iu = _slacks(p, region, spacing)
            grad = np.zeros_like(p)
            grad_rate = _rate_gradient(stack, p, W, noise_power, wavelength, amp)
            for j, ax in enumerate(axes):
                grad[:, ax] = grad_rate[:, ax] + mu * (1.0 / lo_f[j] - 1.0 / hi_f[j])
            if iu[0].size:
                diff = p[iu[0]] - p[iu[1]]
                pull = rho * diff / (dist * gap)[:, None]
                for ax in (0, 1, 2):
                    if ax not in axes:
                        pull[:, ax] = 0.0
                np.add.at(grad, iu[0], pull)
                np.add.at(grad, iu[1], -pull)

            gnorm = float(np.linalg.norm(grad))
            info["grad_norm"] = gnorm
            if gnorm <= grad_tol:
                break

            # step_guess tracks the displacement length that last worked
            step = step_guess / max(gnorm, 1e-12)
            accepted = False
            for _ in range(30):
                cand = p + step * grad
                cand_val, cand_rate = barrier_at(cand, mu, rho)
                if cand_val >= val + 1e-4 * step * gnorm ** 2:
                    p, val = cand, cand_val
                    accepted = True
                    info["steps"] += 1
                    step_guess = min(2.0 * step * gnorm, wavelength)
                    if cand_rate > best_rate:
                        best_rate, best_p = cand_rate, p.copy()
                    break
                step *= 0.5
            if not accepted:
                break
            if abs(val) > 0 and step * gnorm ** 2 < 1e-9 * max(1.0, abs(val)):
                break
        mu *= bar.shrink
        rho *= bar.shrink

    out = MmaLayout(best_p, region, spacing)
    out.validate()
    info["rate"] = best_rate
    return out, info


def grid_init(region: Rect, n_antennas: int, wavelength: float = 1.0,
              min_spacing: float | None = None) -> np.ndarray:
    """Evenly spread starting positions, strictly inside the region.

    Raises if the region cannot hold ``n_antennas`` with spacing strictly
    above half a wavelength.
    """
    if min_spacing is None:
        min_spacing = wavelength / 2
    need = min_spacing * (1.0 + 1e-3)
    axes = region.active_axes
    if n_antennas < 1:
        raise ValueError("need at least one antenna")

    def axis_points(ax: int, count: int) -> np.ndarray | None:
        lo, hi = region.bounds(ax)
        span = hi - lo
        if count == 1:
            return np.array([(lo + hi) / 2.0])
        inset = min(wavelength / 4, span * 0.1)
        if span - 2 * inset < (count - 1) * need:
            inset = (span - (count - 1) * need) / 2.0
            if inset <= 0:
                return None
        return np.linspace(lo + inset, hi - inset, count)

    if len(axes) == 0:
        if n_antennas > 1:
            raise RuntimeError("initialization failure: degenerate region, several antennas")
        return np.array([[(region.x_lo + region.x_hi) / 2, 0.0,
                          (region.z_lo + region.z_hi) / 2]])

    if len(axes) == 1:
        ax = axes[0]
        line = axis_points(ax, n_antennas)
        if line is None:
            raise RuntimeError("initialization failure: region too small for spaced antennas")
        pts = np.zeros((n_antennas, 3))
        pts[:, ax] = line
        other = 2 if ax == 0 else 0
        pts[:, other] = region.bounds(other)[0]
        return pts

    opts = [(r, int(np.ceil(n_antennas / r))) for r in range(1, n_antennas + 1)]
    for rows, cols in sorted(opts, key=lambda rc: (abs(rc[0] - rc[1]), rc[0])):
        xs = axis_points(0, cols)
        zs = axis_points(2, rows)
        if xs is None or zs is None:
            continue
        pts = np.zeros((rows * cols, 3))
        pts[:, 0] = np.tile(xs, rows)
        pts[:, 2] = np.repeat(zs, cols)
        return pts[:n_antennas]
    raise RuntimeError("initialization failure: region too small for spaced antennas")


def nudge_interior(positions: np.ndarray, region: Rect,
                   margin: float = 1e-3) -> np.ndarray:
    """Pull positions strictly inside the region (for barrier-safe warm starts)."""
    p = np.asarray(positions, dtype=float).reshape(-1, 3).copy()
    for ax in region.active_axes:
        lo, hi = region.bounds(ax)
        m = min(margin, 0.25 * (hi - lo))
        p[:, ax] = np.clip(p[:, ax], lo + m, hi - m)
    for ax in (0, 2):
        if ax not in region.active_axes:
            p[:, ax] = region.bounds(ax)[0]
    p[:, 1] = 0.0
    return p


def alternating_optimize(region: Rect, paths_per_user, n_antennas: int,
                         power: float, noise_power: float,
                         wavelength: float = 1.0, amp: float | None = None,
                         init: np.ndarray | None = None,
                         outer_cap: int = 12, tol: float = 1e-4,
                         barrier: BarrierState | None = None
                         ) -> tuple[MmaLayout, BeamformerMatrix, float, dict]:
    """Alternate WMMSE beamforming and barrier position updates.

    The sum rate is nondecreasing across outer iterations (WMMSE warm-starts
    from the previous beamformer; the position step returns its best-rate
    iterate).  Returns (layout, beamformer, rate, info).
    """
    if amp is None:
        amp = np.sqrt(1.0 / n_antennas)
    positions = grid_init(region, n_antennas, wavelength) if init is None else \
        nudge_interior(init, region, 1e-3 * wavelength)
    layout = MmaLayout(positions, region, wavelength / 2)
    layout.validate()

    W = None
    rate_prev = None
    info = {"outer_iterations": 0, "rates": []}
    for outer in range(1, outer_cap + 1):
        info["outer_iterations"] = outer
        g = position_channel(layout.positions, paths_per_user, wavelength, amp)
        bf, _, _ = wmmse_solve(g, None, power, noise_power, f_init=W)
        W = bf.matrix
        layout, pos_info = optimize_positions(layout, paths_per_user, W, noise_power,
                                              barrier=barrier, wavelength=wavelength,
                                              amp=amp)
        rate = pos_info["rate"]
        info["rates"].append(rate)
        if rate_prev is not None and abs(rate - rate_prev) <= tol * max(1.0, abs(rate_prev)):
            break
        rate_prev = rate

    g = position_channel(layout.positions, paths_per_user, wavelength, amp)
    bf, rate, _ = wmmse_solve(g, None, power, noise_power, f_init=W)
    return layout, bf, rate, info
