"""Selection-vector feasibility: count, index spacing, and panel membership.

Two selected antennas must be more than D grid steps apart (Chebyshev
distance), where D = ceil(wavelength / (2 * spacing)) converts the
half-wavelength coupling rule into grid indices.  PC arrays additionally
activate exactly one candidate per panel.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import PC, FC, FPA, ArrayConfig

RELAXED = "relaxed"
BINARY = "binary"


@dataclass
class SelectionVector:
    """Antenna-selection state over the N_t candidates.

    ``relaxed`` entries live in [0, 1]; ``binary`` entries are exactly 0/1.
    ``n_select`` is the target cardinality N_s.
    """

    values: np.ndarray
    n_select: int
    mode: str = BINARY

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.mode not in (RELAXED, BINARY):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == BINARY:
            if not np.all((self.values == 0) | (self.values == 1)):
                raise ValueError("binary selection has entries outside {0,1}")
        elif np.any(self.values < -1e-12) or np.any(self.values > 1 + 1e-12):
            raise ValueError("relaxed selection has entries outside [0,1]")

    @property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.values > 0.5)

    def count(self) -> int:
        return int(np.round(self.values.sum()))


def min_index_gap(config: ArrayConfig) -> int:
    """Minimum index spacing D = ceil(wavelength / (2 * candidate spacing))."""
    return int(math.ceil(config.wavelength / (2.0 * config.spacing) - 1e-12))


@dataclass
class ConstraintBundle:
    """Precomputed constraint structure for one array configuration.

    ``spacing_matrix`` column s is the vectorized exclusion window centred on
    antenna s (radius ``min_gap``, truncated at the array edge).
    ``window_rows`` holds every contiguous (D+1)-square window as a row; a
    binary selection respects the spacing rule iff each such window holds at
    most one selected antenna, which is the linear form used by the relaxed
    QP.  ``panel_matrix`` column p marks the members of panel p (PC only).
    """

    spacing_matrix: np.ndarray
    window_rows: np.ndarray
    min_gap: int
    n_panels: int
    shape: tuple[int, int]
    panel_matrix: np.ndarray | None = None
    row_index: np.ndarray = field(default=None, repr=False)
    col_index: np.ndarray = field(default=None, repr=False)
    panel_of: np.ndarray = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.shape[0] * self.shape[1]


def build_bundle(config: ArrayConfig) -> ConstraintBundle:
    """Build the spacing windows (and panel membership for PC arrays)."""
    nr, nc = config.rows, config.cols
    nt = nr * nc
    d = min_index_gap(config)
    s = np.arange(nt)
    rows = s % nr
    cols = s // nr

    dr = np.abs(rows[:, None] - rows[None, :])
    dc = np.abs(cols[:, None] - cols[None, :])
    spacing = ((dr <= d) & (dc <= d)).astype(np.int8)

    # contiguous windows of span min(D+1, extent) per axis; a window holding
    # two selected antennas is exactly a violated pair at Chebyshev gap <= D
    h = min(d + 1, nr)
    w = min(d + 1, nc)
    anchors = [(r0, c0) for r0 in range(nr - h + 1) for c0 in range(nc - w + 1)]
    window_rows = np.zeros((len(anchors), nt), dtype=np.int8)
    for i, (r0, c0) in enumerate(anchors):
        member = (rows >= r0) & (rows < r0 + h) & (cols >= c0) & (cols < c0 + w)
        window_rows[i, member] = 1

    panel_matrix = None
    panel_of = None
    if config.kind == PC:
        sr, sc = config.cand_rows, config.cand_cols
        p = rows // sr
        q = cols // sc
        panel_of = q * config.panel_rows + p
        panel_matrix = np.zeros((nt, config.n_panels), dtype=np.int8)
        panel_matrix[s, panel_of] = 1

    return ConstraintBundle(
        spacing_matrix=spacing, window_rows=window_rows, min_gap=d,
        n_panels=config.n_panels, shape=(nr, nc), panel_matrix=panel_matrix,
        row_index=rows, col_index=cols, panel_of=panel_of)


def _spacing_ok(indices: np.ndarray, bundle: ConstraintBundle) -> bool:
    if len(indices) < 2:
        return True
    r = bundle.row_index[indices]
    c = bundle.col_index[indices]
    dr = np.abs(r[:, None] - r[None, :])
    dc = np.abs(c[:, None] - c[None, :])
    cheb = np.maximum(dr, dc)
    np.fill_diagonal(cheb, bundle.min_gap + 1)
    return bool(cheb.min() > bundle.min_gap)


def is_feasible(selection: SelectionVector, bundle: ConstraintBundle,
                kind: str) -> tuple[bool, dict]:
    """Check a binary selection against the feasible set of the given kind.

    Returns (ok, report); the report lists violated constraint rows per
    category.  Infeasibility is a value, not an error.
    """
    if selection.mode != BINARY:
        raise ValueError("feasibility is defined for binary selections")
    t = selection.values
    report: dict = {"count": [], "spacing": [], "panel": []}

    if selection.count() != selection.n_select:
        report["count"] = [selection.count()]

    window_load = bundle.spacing_matrix.T @ t
    selected = np.flatnonzero(t > 0.5)
    bad = [int(sidx) for sidx in selected if window_load[sidx] > 1]
    report["spacing"] = bad

    if kind == PC:
        if bundle.panel_matrix is None:
            raise ValueError("bundle has no panel membership; built for FC/FPA?")
        per_panel = bundle.panel_matrix.T @ t
        report["panel"] = [int(p) for p in np.flatnonzero(per_panel != 1)]

    ok = not (report["count"] or report["spacing"] or report["panel"])
    return ok, report


def enumerate_feasible(bundle: ConstraintBundle, kind: str,
                       n_select: int) -> list[np.ndarray]:
    """All feasible binary selections with ``n_select`` antennas (brute force).

    Guarded to N_t <= 24; intended as a test oracle at tiny scale.
    """
    nt = bundle.size
    if nt > 24:
        raise ValueError(f"enumeration guard: N_t={nt} > 24")
    out = []
    for combo in itertools.combinations(range(nt), n_select):
        t = np.zeros(nt)
        t[list(combo)] = 1.0
        ok, _ = is_feasible(SelectionVector(t, n_select), bundle, kind)
        if ok:
            out.append(t)
    return out
