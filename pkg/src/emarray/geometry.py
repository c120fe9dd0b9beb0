"""Candidate-antenna grids, steering vectors, and multipath channel synthesis.

The transmit surface is modelled as a planar grid of candidate radiation
positions.  A partially-connected (PC) array groups the candidates into
switched antenna panels, one RF chain per panel; a fully-connected (FC)
array treats the whole grid as one reconfigurable surface; FPA is the
classic half-wavelength fixed array used as a baseline.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

PC = "PC"
FC = "FC"
FPA = "FPA"

_KINDS = (PC, FC, FPA)


@dataclass(frozen=True)
class ArrayConfig:
    """Geometry of a candidate-antenna grid.

    ``panel_rows x panel_cols`` switched panels, each exposing
    ``cand_rows x cand_cols`` candidate positions spaced ``spacing`` metres
    apart.  ``pitch`` is the distance between adjacent panels and is only
    meaningful for the PC kind; FC and FPA use a single uniform grid.  For
    FPA the spacing is forced to half a wavelength.
    """

    kind: str
    panel_rows: int = 1
    panel_cols: int = 1
    cand_rows: int = 1
    cand_cols: int = 1
    spacing: float = 0.5
    pitch: float | None = None
    wavelength: float = 1.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown array kind {self.kind!r}")
        counts = (self.panel_rows, self.panel_cols, self.cand_rows, self.cand_cols)
        if any(int(c) != c or c < 1 for c in counts):
            raise ValueError("antenna counts must be integers >= 1")
        if self.wavelength <= 0:
            raise ValueError("wavelength must be positive")
        if self.kind == FPA:
            # half-wavelength by construction
            object.__setattr__(self, "spacing", self.wavelength / 2)
        if self.spacing <= 0:
            raise ValueError("candidate spacing must be positive")
        if self.kind == PC:
            if self.pitch is None or self.pitch <= 0:
                raise ValueError("PC arrays need a positive panel pitch")

    @property
    def rows(self) -> int:
        return self.panel_rows * self.cand_rows

    @property
    def cols(self) -> int:
        return self.panel_cols * self.cand_cols

    @property
    def size(self) -> int:
        return self.rows * self.cols

    @property
    def n_panels(self) -> int:
        return self.panel_rows * self.panel_cols


def fpa_config(n_antennas: int, wavelength: float = 1.0) -> ArrayConfig:
    """Half-wavelength uniform linear array with ``n_antennas`` elements."""
    return ArrayConfig(kind=FPA, cand_cols=n_antennas, wavelength=wavelength)


def build_grid(config: ArrayConfig) -> np.ndarray:
    """Candidate coordinates as an (N_t, 3) array of [x, 0, z] in metres.

    Antennas are ordered column-major: index s = (n-1)*rows + (m-1) for grid
    row m and column n, with the origin at the last row / last column.
    """
    nr, nc = config.rows, config.cols
    m = np.arange(1, nr + 1)
    n = np.arange(1, nc + 1)
    if config.kind == PC:
        sr, sc = config.cand_rows, config.cand_cols
        p, s = (m - 1) // sr + 1, (m - 1) % sr + 1
        q, t = (n - 1) // sc + 1, (n - 1) % sc + 1
        z = (config.panel_rows - p) * config.pitch + (sr - s) * config.spacing
        x = (config.panel_cols - q) * config.pitch + (sc - t) * config.spacing
    else:
        x = (nc - n) * config.spacing
        z = (nr - m) * config.spacing
    coords = np.zeros((nr * nc, 3))
    coords[:, 0] = np.repeat(x, nr)
    coords[:, 2] = np.tile(z, nc)
    return coords


def steering_vector(coords: np.ndarray, azimuth: float, elevation: float,
                    wavelength: float = 1.0) -> np.ndarray:
    """Unit-norm steering vector for a path arriving from (azimuth, elevation).

    Entry for an antenna at (x, 0, z) is
    sqrt(1/N) * exp(j*2*pi*(x*cos(el)*sin(az) + z*sin(el)) / wavelength).
    """
    coords = np.asarray(coords, dtype=float)
    if coords.ndim != 2 or coords.shape[0] == 0:
        raise ValueError("coords must be a nonempty (N, 3) array")
    n = coords.shape[0]
    phase = (coords[:, 0] * np.cos(elevation) * np.sin(azimuth)
             + coords[:, 2] * np.sin(elevation))
    return np.sqrt(1.0 / n) * np.exp(2j * np.pi * phase / wavelength)


@dataclass(frozen=True)
class ChannelPath:
    """One propagation path: complex gain plus azimuth/elevation in radians."""

    gain: complex
    azimuth: float
    elevation: float

    def __post_init__(self):
        if not -np.pi <= self.azimuth <= np.pi:
            raise ValueError("azimuth outside [-pi, pi]")
        if not -np.pi / 2 <= self.elevation <= np.pi / 2:
            raise ValueError("elevation outside [-pi/2, pi/2]")


def draw_paths(rng: np.random.Generator, n_paths: int) -> list[ChannelPath]:
    """Draw one user's multipath parameters.

    Gains are i.i.d. CN(0,1).  The direction cosine cos(el)*sin(az) is exactly
    uniform on [-1, 1]; sin(el) is then uniform on the range still reachable,
    which keeps the pair geometrically consistent (independent uniforms can
    describe no physical direction when their squares sum past one).
    """
    gains = (rng.standard_normal(n_paths) + 1j * rng.standard_normal(n_paths)) / np.sqrt(2)
    theta_cos = rng.uniform(-1.0, 1.0, n_paths)          # cos(el) * sin(az)
    reach = np.sqrt(1.0 - theta_cos ** 2)
    omega = rng.uniform(-reach, reach)                    # sin(el)
    elevation = np.arcsin(omega)
    cos_el = np.sqrt(1.0 - omega ** 2)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(cos_el > 0, theta_cos / np.where(cos_el > 0, cos_el, 1.0), 0.0)
    azimuth = np.arcsin(np.clip(ratio, -1.0, 1.0))
    return [ChannelPath(complex(g), float(a), float(e))
            for g, a, e in zip(gains, azimuth, elevation)]


def channel_from_paths(coords: np.ndarray, paths_per_user, wavelength: float = 1.0,
                       amp: float | None = None) -> np.ndarray:
    """Complex channel matrix (N x K) from per-user path lists.

    ``amp`` is the per-antenna amplitude applied to each path; it defaults to
    sqrt(1/N) so that a single unit-gain path gives a unit-norm column.
    """
    coords = np.asarray(coords, dtype=float)
    n = coords.shape[0]
    if amp is None:
        amp = np.sqrt(1.0 / n)
    h = np.zeros((n, len(paths_per_user)), dtype=complex)
    for k, paths in enumerate(paths_per_user):
        for p in paths:
            phase = (coords[:, 0] * np.cos(p.elevation) * np.sin(p.azimuth)
                     + coords[:, 2] * np.sin(p.elevation))
            h[:, k] += p.gain * amp * np.exp(2j * np.pi * phase / wavelength)
    return h


@dataclass
class ChannelSet:
    """Per-user multipath parameters plus the resulting channel matrix.

    The matrix is always recomputable from (coords, wavelength, paths); see
    :func:`rebuild_matrix`.
    """

    paths: list[list[ChannelPath]]
    matrix: np.ndarray
    coords: np.ndarray
    wavelength: float

    @property
    def n_users(self) -> int:
        return len(self.paths)

    def rebuild_matrix(self) -> np.ndarray:
        return channel_from_paths(self.coords, self.paths, self.wavelength)


def synthesize_channels(config: ArrayConfig, path_counts, seed: int) -> ChannelSet:
    """Draw a multipath channel set for ``len(path_counts)`` users.

    Deterministic under the seed: the same call reproduces the same paths and
    channel matrix bit for bit.
    """
    path_counts = list(path_counts)
    if len(path_counts) < 1 or any(c < 1 for c in path_counts):
        raise ValueError("need at least one user and one path per user")
    rng = np.random.default_rng(seed)
    coords = build_grid(config)
    paths = [draw_paths(rng, c) for c in path_counts]
    matrix = channel_from_paths(coords, paths, config.wavelength)
    return ChannelSet(paths=paths, matrix=matrix, coords=coords,
                      wavelength=config.wavelength)


def save_channels(channels: ChannelSet, path) -> None:
    """Serialize a channel set to JSON (paths, coordinates, wavelength)."""
    doc = {
        "wavelength": channels.wavelength,
        "coords": channels.coords.tolist(),
        "users": [
            [{"gain_re": p.gain.real, "gain_im": p.gain.imag,
              "azimuth": p.azimuth, "elevation": p.elevation} for p in user]
            for user in channels.paths
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)


def load_channels(path) -> ChannelSet:
    """Load a channel set saved by :func:`save_channels` and rebuild its matrix."""
    with open(path) as fh:
        doc = json.load(fh)
    paths = [
        [ChannelPath(complex(rec["gain_re"], rec["gain_im"]),
                     rec["azimuth"], rec["elevation"]) for rec in user]
        for user in doc["users"]
    ]
    coords = np.asarray(doc["coords"], dtype=float)
    matrix = channel_from_paths(coords, paths, doc["wavelength"])
    return ChannelSet(paths=paths, matrix=matrix, coords=coords,
                      wavelength=doc["wavelength"])
