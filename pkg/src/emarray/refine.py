"""Coordinate-descent enhancement: swap each selected antenna in turn.

Step d re-evaluates selected slot n = mod(d-1, N_s) + 1: the slot's antenna
is removed, every candidate reinstatement is scored by a warm-started WMMSE
solve (infeasible candidates score zero), and the best candidate is
installed.  The incumbent is always among the candidates, so the achieved
rate never decreases; the loop ends when a whole pass changes nothing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constraints import BINARY, ConstraintBundle, SelectionVector, is_feasible
from .geometry import PC
from .wmmse import wmmse_solve, _as_channel


@dataclass
class SwapState:
    """Mutable state of one refinement run."""

    selection: SelectionVector
    indices: list[int]
    beamformer: np.ndarray
    rate: float
    step: int = 0
    history: list[int] = field(default_factory=list)
    unchanged_run: int = 0


def start_state(selection: SelectionVector, channel, bundle: ConstraintBundle,
                kind: str, power: float, noise_power: float) -> SwapState:
    ok, report = is_feasible(selection, bundle, kind)
    if not ok:
        raise ValueError(f"refinement needs a feasible start: {report}")
    bf, rate, _ = wmmse_solve(channel, selection.values, power, noise_power)
    return SwapState(selection=selection, indices=[int(i) for i in selection.indices],
                     beamformer=bf.matrix, rate=rate)


def _trial_feasible(trial: np.ndarray, n_select: int, bundle: ConstraintBundle,
                    kind: str) -> bool:
    ok, _ = is_feasible(SelectionVector(trial, n_select, BINARY), bundle, kind)
    return ok


def swap_step(state: SwapState, channel, bundle: ConstraintBundle, kind: str,
              power: float, noise_power: float, eval_iters: int = 25) -> SwapState:
    """One coordinate step: re-choose the antenna of the current slot.

    Candidate scores use a reduced-iteration WMMSE warm-started from the
    incumbent beamformer; an accepted swap is re-solved to full tolerance.
    Ties keep the incumbent (prevents cycling); other ties take the lowest
    candidate index.
    """
    H = _as_channel(channel)
    nt = H.shape[0]
    n_select = state.selection.n_select
    d = state.step + 1
    slot = (d - 1) % n_select
    incumbent = state.indices[slot]

    base = state.selection.values.copy()
    base[incumbent] = 0.0

    best_p = incumbent
    best_rate = state.rate
    for p in range(nt):
        if p == incumbent:
            continue
        trial = base.copy()
        trial[p] = 1.0
        if not _trial_feasible(trial, n_select, bundle, kind):
            continue
        _, rate_p, _ = wmmse_solve(H, trial, power, noise_power,
                                   max_iters=eval_iters, f_init=state.beamformer)
        if rate_p > best_rate:
            best_p, best_rate = p, rate_p

    if best_p == incumbent:
        state.unchanged_run += 1
    else:
        trial = base.copy()
        trial[best_p] = 1.0
        bf, rate_full, _ = wmmse_solve(H, trial, power, noise_power,
                                       f_init=state.beamformer)
        if rate_full >= best_rate:
            best_rate = rate_full
            state.beamformer = bf.matrix
            state.selection = SelectionVector(trial, n_select, BINARY)
            state.indices[slot] = best_p
            state.rate = best_rate
            state.unchanged_run = 0
        else:
            # full solve should only refine; keep the incumbent if it did not
            best_p = incumbent
            state.unchanged_run += 1

    state.step = d
    state.history.append(best_p)
    return state


def refine(selection: SelectionVector, channel, bundle: ConstraintBundle,
           kind: str, power: float, noise_power: float,
           cap: int | None = None) -> tuple[SelectionVector, float, dict]:
    """Iterate swap steps until a full pass makes no change (or a step cap).

    Returns (final selection, achieved sum rate, info); info['capped'] flags
    an early stop, info['steps'] counts swap steps taken.
    """
    H = _as_channel(channel)
    n_select = selection.n_select
    if cap is None:
        cap = 50 * n_select
    state = start_state(selection, H, bundle, kind, power, noise_power)
    info = {"capped": False, "steps": 0, "rates": [state.rate]}

    while state.step < cap:
        state = swap_step(state, H, bundle, kind, power, noise_power)
        info["rates"].append(state.rate)
        if state.unchanged_run >= n_select and state.step >= n_select + 1:
            break
    else:
        info["capped"] = True

    info["steps"] = state.step
    return state.selection, state.rate, info
