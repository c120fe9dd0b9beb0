"""Penalty-based joint beamforming and antenna selection (two-loop scheme).

The binary selection problem is relaxed to a box-constrained quadratic
subproblem in t with three penalties: binaryness t'(1-t), cardinality
(1't - N_s)^2, and (PC only) panel membership ||Q't - 1||^2.  An outer loop
scales the penalty coefficients; an inner loop alternates the WMMSE block
updates (u, v, F) with the relaxed t-subproblem, then thresholds t.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constraints import BINARY, RELAXED, ConstraintBundle, SelectionVector, is_feasible
from .geometry import PC
from .wmmse import mse_terms, update_f, update_u, update_v, _as_channel


@dataclass
class PenaltyState:
    """Penalty coefficients, their growth factors, and the rounding threshold."""

    rho1: float = 1.0
    rho2: float = 1.0
    rho3: float = 1.0
    beta1: float = 2.0
    beta2: float = 2.0
    beta3: float = 2.0
    threshold: float = 0.5

    def __post_init__(self):
        if min(self.rho1, self.rho2, self.rho3) <= 0:
            raise ValueError("penalty coefficients must be positive")
        if min(self.beta1, self.beta2, self.beta3) <= 1:
            raise ValueError("scale factors must exceed 1")
        if not 0 < self.threshold < 1:
            raise ValueError("threshold must lie in (0, 1)")


@dataclass
class QpSubproblem:
    """Relaxed t-subproblem: minimize t'Ut + u't over the spacing polytope.

    ``spacing_matrix`` rows are the contiguous spacing windows (each must sum
    to at most one); the box [0, 1]^N always applies.
    """

    quad_matrix: np.ndarray
    lin_vector: np.ndarray
    spacing_matrix: np.ndarray
    bounds: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        self.quad_matrix = np.asarray(self.quad_matrix, dtype=float)
        self.lin_vector = np.asarray(self.lin_vector, dtype=float)
        if not np.allclose(self.quad_matrix, self.quad_matrix.T, atol=1e-10):
            raise ValueError("quadratic matrix must be symmetric")
        if not (np.isfinite(self.quad_matrix).all() and np.isfinite(self.lin_vector).all()):
            raise ValueError("QP data must be finite")

    def objective(self, t: np.ndarray) -> float:
        return float(t @ self.quad_matrix @ t + self.lin_vector @ t)


def penalty_objective(channel, t: np.ndarray, u: np.ndarray, v: np.ndarray,
                      beamformer, rhos, bundle: ConstraintBundle, kind: str,
                      n_select: int, noise_power: float, power: float) -> float:
    """Exact relaxed objective: surrogate MSE cost plus the three penalties."""
    H = _as_channel(channel)
    t = np.asarray(t, dtype=float)
    rho1, rho2, rho3 = rhos
    e = mse_terms(H, t, beamformer, u, noise_power, power)
    val = float((v * e - np.log(v)).sum())
    val += rho1 * float(t @ (1.0 - t))
    val += rho2 * float((t.sum() - n_select) ** 2)
    if kind == PC:
        val += rho3 * float(np.sum((bundle.panel_matrix.T @ t - 1.0) ** 2))
    return val


def assemble_qp(channel, u: np.ndarray, v: np.ndarray, beamformer, rhos,
                bundle: ConstraintBundle, kind: str, n_select: int) -> QpSubproblem:
    """Build the quadratic form of the relaxed t-subproblem.

    With w_{k,i} = conj(h_k) * f_i (entrywise), t' Re(w w^H) t reproduces
    |h_k^H diag(t) f_i|^2 for real t, so the channel part of the quadratic
    matrix is assembled from the real parts of those outer products.
    """
    H = _as_channel(channel)
    F = beamformer.matrix if hasattr(beamformer, "matrix") else np.asarray(beamformer)
    nt, k = H.shape
    rho1, rho2, rho3 = rhos
    c = v * np.abs(u) ** 2

    quad = np.zeros((nt, nt))
    lin = np.zeros(nt)
    for kk in range(k):
        w = H[:, kk].conj()[:, None] * F            # columns w_{k,i}
        quad += c[kk] * (w @ w.conj().T).real
        lin += -2.0 * v[kk] * (u[kk] * w[:, kk]).real
    quad += -rho1 * np.eye(nt) + rho2 * np.ones((nt, nt))
    lin += rho1 - 2.0 * rho2 * n_select
    if kind == PC:
        q = bundle.panel_matrix.astype(float)
        quad += rho3 * (q @ q.T)
        lin += -2.0 * rho3 * (q @ np.ones(bundle.n_panels))
    quad = 0.5 * (quad + quad.T)
    return QpSubproblem(quad_matrix=quad, lin_vector=lin,
                        spacing_matrix=bundle.window_rows.astype(float))


def _restore_spacing(t: np.ndarray, windows: np.ndarray) -> np.ndarray:
    """Shrink window members so every spacing row sums to at most one.

    One sequential sweep suffices: scaling only ever decreases entries, so
    rows already processed can only improve.
    """
    t = t.copy()
    for row in windows:
        idx = np.flatnonzero(row)
        s = t[idx].sum()
        if s > 1.0:
            t[idx] /= s
    return t


def solve_selection_qp(qp: QpSubproblem, start: np.ndarray,
                       max_iters: int = 100, tol: float = 1e-8) -> tuple[np.ndarray, dict]:
    """Projected gradient descent with Armijo backtracking on the relaxed QP.

    The iterate stays feasible (box plus spacing rows) throughout; the method
    guarantees monotone improvement from the (restored) warm start, which is
    all the nonconvex case admits.
    """
    lo, hi = qp.bounds
    win = qp.spacing_matrix
    t = np.clip(np.asarray(start, dtype=float), lo, hi)
    if win.size:
        t = _restore_spacing(t, win)

    eigs = np.linalg.eigvalsh(qp.quad_matrix)
    lip = 2.0 * max(np.abs(eigs).max(), 1e-12)
    step0 = 1.0 / lip

    f = qp.objective(t)
    f_start = f
    n_iters = 0
    for n_iters in range(1, max_iters + 1):
        g = 2.0 * qp.quad_matrix @ t + qp.lin_vector
        improved = False
        step = step0
        for _ in range(30):
            cand = np.clip(t - step * g, lo, hi)
            if win.size:
                cand = _restore_spacing(cand, win)
            fc = qp.objective(cand)
            if fc < f - 1e-14 * max(1.0, abs(f)):
                t, f = cand, fc
                improved = True
                break
            step *= 0.5
        if not improved:
            break
        # box-projected gradient as a stationarity proxy
        g = 2.0 * qp.quad_matrix @ t + qp.lin_vector
        if np.linalg.norm(t - np.clip(t - g, lo, hi), np.inf) <= tol:
            break

    g = 2.0 * qp.quad_matrix @ t + qp.lin_vector
    residual = float(np.linalg.norm(t - np.clip(t - g, lo, hi), np.inf))
    info = {"objective": f, "improved": f <= f_start + 1e-12,
            "iterations": n_iters, "kkt_residual": residual}
    return t, info


def _round_threshold(t: np.ndarray, threshold: float) -> np.ndarray:
    return (t >= threshold).astype(float)


def _greedy_round(t_relaxed: np.ndarray, bundle: ConstraintBundle, kind: str,
                  n_select: int, node_budget: int = 20000) -> np.ndarray:
    """Fallback rounding: pick the largest relaxed entries subject to
    feasibility, with bounded backtracking when the greedy order dead-ends."""
    order = np.argsort(-t_relaxed, kind="stable")
    rows, cols = bundle.row_index, bundle.col_index
    d = bundle.min_gap

    chosen: list[int] = []
    used_panels: set[int] = set()
    budget = [node_budget]

    def compatible(cand: int) -> bool:
        for c in chosen:
            if max(abs(int(rows[cand]) - int(rows[c])),
                   abs(int(cols[cand]) - int(cols[c]))) <= d:
                return False
        if kind == PC and bundle.panel_of[cand] in used_panels:
            return False
        return True

    def search(pos: int) -> bool:
        if len(chosen) == n_select:
            return True
        if budget[0] <= 0:
            return False
        for i in range(pos, len(order)):
            cand = int(order[i])
            budget[0] -= 1
            if not compatible(cand):
                continue
            chosen.append(cand)
            if kind == PC:
                used_panels.add(int(bundle.panel_of[cand]))
            if search(i + 1):
                return True
            chosen.pop()
            if kind == PC:
                used_panels.discard(int(bundle.panel_of[cand]))
        return False

    if not search(0):
        raise RuntimeError("fallback rounding found no feasible selection")
    t = np.zeros(bundle.size)
    t[chosen] = 1.0
    return t


def two_loop_select(channel, bundle: ConstraintBundle, kind: str, n_select: int,
                    power: float, noise_power: float,
                    penalties: PenaltyState | None = None,
                    outer_cap: int = 25, inner_cap: int = 50,
                    inner_tol: float = 1e-5,
                    trace: list | None = None) -> tuple[SelectionVector, dict]:
    """Run the two-loop relaxation and return a feasible binary selection.

    Each outer iteration scales the penalties, re-initializes (t = 1, F = H),
    and alternates u / v / F / t updates until the inner objective settles.
    The loop stops once thresholding yields exactly ``n_select`` antennas
    that pass feasibility with a near-binary relaxation; hitting the outer
    cap falls back to greedy rounding of the relaxed scores (flagged).

    ``trace``: pass a list to collect per-update rows
    (outer, inner, block, objective, rho1..3, thresholded cardinality).
    """
    H = _as_channel(channel)
    nt, k = H.shape
    if n_select < k:
        raise ValueError("need at least as many selected antennas as users")
    if kind == PC and n_select != bundle.n_panels:
        raise ValueError("PC selection must activate exactly one antenna per panel")
    pen = penalties or PenaltyState()
    info: dict = {"converged": False, "fallback": False, "outer_iterations": 0}

    if n_select == nt:
        t = np.ones(nt)
        info["converged"] = True
        return SelectionVector(t, n_select, BINARY), info

    rho = np.array([pen.rho1, pen.rho2, pen.rho3])
    beta = np.array([pen.beta1, pen.beta2, pen.beta3])
    t_relaxed = np.ones(nt)

    def log(outer, inner, block, objective, t_now):
        if trace is not None:
            card = int((t_now >= pen.threshold).sum())
            trace.append({"outer": outer, "inner": inner, "block": block,
                          "objective": objective, "rho": tuple(rho),
                          "cardinality": card})

    for outer in range(1, outer_cap + 1):
        rho = rho * beta
        info["outer_iterations"] = outer
        t = np.ones(nt)
        F = H.copy()
        v = np.ones(k)
        obj_prev = None

        def objective(u_now, v_now, f_now, t_now):
            return penalty_objective(H, t_now, u_now, v_now, f_now, rho, bundle,
                                     kind, n_select, noise_power, power)

        for inner in range(1, inner_cap + 1):
            u = update_u(H, t, F, noise_power, power)
            if trace is not None:
                log(outer, inner, "u", objective(u, v, F, t), t)
            e = mse_terms(H, t, F, u, noise_power, power)
            v = update_v(e)
            if trace is not None:
                log(outer, inner, "v", objective(u, v, F, t), t)
            F = update_f(H, t, u, v, noise_power, power)
            if trace is not None:
                log(outer, inner, "f", objective(u, v, F, t), t)
            qp = assemble_qp(H, u, v, F, rho, bundle, kind, n_select)
            t, qp_info = solve_selection_qp(qp, start=t)
            obj = objective(u, v, F, t)
            log(outer, inner, "t", obj, t)
            if obj_prev is not None and abs(obj_prev - obj) <= inner_tol * max(1.0, abs(obj_prev)):
                break
            obj_prev = obj
        t_relaxed = t

        rounded = _round_threshold(t_relaxed, pen.threshold)
        if int(rounded.sum()) == n_select:
            sel = SelectionVector(rounded, n_select, BINARY)
            ok, _ = is_feasible(sel, bundle, kind)
            near_binary = float(np.max(t_relaxed * (1.0 - t_relaxed))) <= 0.05
            if ok and near_binary:
                info["converged"] = True
                info["relaxed"] = t_relaxed
                return sel, info

    t_fallback = _greedy_round(t_relaxed, bundle, kind, n_select)
    info["fallback"] = True
    info["relaxed"] = t_relaxed
    sel = SelectionVector(t_fallback, n_select, BINARY)
    ok, report = is_feasible(sel, bundle, kind)
    if not ok:
        raise RuntimeError(f"fallback rounding produced infeasible selection: {report}")
    return sel, info
