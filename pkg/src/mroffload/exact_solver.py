"""Exhaustive placement search with an exact per-placement LP over the split.

For a fixed placement and downlink choice the energy, the application time
and the uplink load are all affine in the split, so each placement reduces
to a small dense linear program. Placements are scored in vectorized
batches; a placement whose cheapest-radio split already satisfies the
coupling constraints is solved by that split, the rest go through the
simplex below.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .energymodel import plan_costs, transfer_tables
from .profile import DEADLINE_TOL, RATE_MARGIN, Instance, OffloadPlan

__all__ = [
    "LinearProgram",
    "LPResult",
    "ExactResult",
    "EnumerationTooLarge",
    "build_lp",
    "solve_lp",
    "exhaustive_solve",
    "baseline_local",
    "baseline_remote",
    "write_placement_log",
]

MAX_FREE = 24
PIVOT_TOL = 1e-12
FEAS_TOL = 1e-9
# the LP works inside the validation tolerances so its vertices survive rounding in plan_costs
LP_DEADLINE_TOL = 0.5 * DEADLINE_TOL
LP_RATE_MARGIN = 2.0 * RATE_MARGIN


class EnumerationTooLarge(ValueError):
    pass


class UnboundedLP(RuntimeError):
    pass


@dataclass
class LinearProgram:
    """``min c @ x + constant`` s.t. ``A_eq x = b_eq``, ``A_ub x <= b_ub``, bounds per variable."""

    objective: np.ndarray
    constant: float = 0.0
    eq_constraints: list = field(default_factory=list)  # (coefficients, bound)
    ineq_constraints: list = field(default_factory=list)
    variable_bounds: list = field(default_factory=list)  # (lo, hi)
    variable_map: dict = field(default_factory=dict)  # (component, radio) -> column
    time_constant: float = 0.0
    time_coefficients: Optional[np.ndarray] = None
    infeasible: bool = False  # known infeasible before solving

    @property
    def n(self) -> int:
        return int(len(self.objective))


@dataclass
class LPResult:
    status: str  # optimal | infeasible
    x: Optional[np.ndarray]
    objective: float  # includes the constant; inf when infeasible

    @property
    def feasible(self) -> bool:
        return self.status == "optimal"


def _assign_receive(inst: Instance, receive):
    if receive is not None:
        return np.asarray(receive)
    from .iterative_solver import assign_receive

    return assign_receive(inst, "fastest_downlink")


def _deadline_slack(inst: Instance, time_constant: float) -> float:
    t_req = inst.t_req
    return t_req + LP_DEADLINE_TOL * max(1.0, t_req) - time_constant


def build_lp(inst: Instance, placement, receive=None) -> LinearProgram:
    """LP over the uplink split for a fixed placement and downlink choice."""
    placement = np.asarray(placement, dtype=np.int64)
    receive = _assign_receive(inst, receive)
    if np.any(placement[list(inst.pinned_local)] != 0):
        raise ValueError("placement moves a pinned component to the cloud")
    base_plan = OffloadPlan(placement, np.zeros((inst.m, inst.k)), receive)
    base = plan_costs(inst, base_plan)

    tu, _ = transfer_tables(inst)
    I = placement.astype(float)
    up = inst.graph.alpha * np.outer(1 - I, I)
    count = up.sum(axis=1)
    rows = [i for i in range(inst.m) if count[i] > 0]
    tx = np.array([r.tx_power for r in inst.radios])
    demand = np.array([r.demand_rate for r in inst.radios])
    p_id = inst.device.idle_power
    up_time = np.einsum("ij,ijk->ik", up, tu)

    vmap = {}
    for i in rows:
        for k in range(inst.k):
            vmap[(i, k)] = len(vmap)
    n = len(vmap)
    c = np.zeros(n)
    t = np.zeros(n)
    for (i, k), col in vmap.items():
        # Tx at the source plus idle at the cloud-side endpoint
        c[col] = (tx[k] + p_id) * up_time[i, k]
        # the edge is timed once for each endpoint
        t[col] = 2.0 * up_time[i, k]

    lp = LinearProgram(objective=c, constant=base.energy, variable_map=vmap, time_constant=base.time,
                       time_coefficients=t)
    lp.variable_bounds = [(0.0, 1.0)] * n
    for i in rows:
        coef = np.zeros(n)
        for k in range(inst.k):
            coef[vmap[(i, k)]] = 1.0
        lp.eq_constraints.append((coef, 1.0))
    if n:
        for k, radio in enumerate(inst.radios):
            coef = np.zeros(n)
            for i in rows:
                coef[vmap[(i, k)]] = count[i] * demand[k]
            lp.ineq_constraints.append((coef, radio.uplink_rate * (1.0 - LP_RATE_MARGIN)))
    slack = _deadline_slack(inst, base.time)
    if slack < 0:
        lp.infeasible = True
    if math.isfinite(slack):
        lp.ineq_constraints.append((t, slack))
    return lp


# ---------------------------------------------------------------------------
# Dense simplex, Bland's rule
# ---------------------------------------------------------------------------


def _pivot(tab: np.ndarray, basis: list, row: int, col: int):
    tab[row] /= tab[row, col]
    for r in range(tab.shape[0]):
        if r != row and tab[r, col] != 0.0:
            tab[r] -= tab[r, col] * tab[row]
    basis[row] = col


def _simplex(tab: np.ndarray, basis: list, allowed: int, max_iter: int = 10000):
    """Minimize the last row of ``tab`` (reduced costs | -objective) in place."""
    n_rows = tab.shape[0] - 1
    for _ in range(max_iter):
        cost = tab[-1, :allowed]
        entering = np.flatnonzero(cost < -PIVOT_TOL)
        if entering.size == 0:
            return
        col = int(entering[0])
        column = tab[:n_rows, col]
        best_row, best_ratio = -1, math.inf
        for r in range(n_rows):
            if column[r] > PIVOT_TOL:
                ratio = tab[r, -1] / column[r]
                if ratio < best_ratio - PIVOT_TOL or (
                    abs(ratio - best_ratio) <= PIVOT_TOL and basis[r] < basis[best_row]
                ):
                    best_row, best_ratio = r, ratio
        if best_row < 0:
            raise UnboundedLP("objective unbounded below")
        _pivot(tab, basis, best_row, col)
    raise RuntimeError("simplex iteration limit reached")


def solve_lp(lp: LinearProgram) -> LPResult:
    """Two-phase tableau simplex with Bland's anti-cycling rule."""
    n = lp.n
    if lp.infeasible:
        return LPResult("infeasible", None, math.inf)
    if n == 0:
        for coef, bound in lp.ineq_constraints:
            if bound < -FEAS_TOL:
                return LPResult("infeasible", None, math.inf)
        return LPResult("optimal", np.zeros(0), float(lp.constant))

    # shift to x' = x - lo so every variable is >= 0, upper bounds become rows
    lo = np.array([b[0] for b in lp.variable_bounds], dtype=float)
    hi = np.array([b[1] for b in lp.variable_bounds], dtype=float)
    eq = [(np.asarray(a, float), float(b) - float(np.dot(a, lo))) for a, b in lp.eq_constraints]
    ub = [(np.asarray(a, float), float(b) - float(np.dot(a, lo))) for a, b in lp.ineq_constraints]
    for j in range(n):
        if math.isfinite(hi[j]):
            e = np.zeros(n)
            e[j] = 1.0
            ub.append((e, hi[j] - lo[j]))

    n_ub, n_eq = len(ub), len(eq)
    n_rows = n_ub + n_eq
    n_slack = n_ub
    # artificials for equality rows and for inequality rows with a negative bound
    art_rows = [r for r in range(n_ub) if ub[r][1] < 0] + list(range(n_ub, n_rows))
    n_art = len(art_rows)
    width = n + n_slack + n_art + 1
    tab = np.zeros((n_rows + 1, width))
    basis = [0] * n_rows
    for r, (a, b) in enumerate(ub):
        tab[r, :n] = a
        tab[r, n + r] = 1.0
        tab[r, -1] = b
        basis[r] = n + r
    for q, (a, b) in enumerate(eq):
        r = n_ub + q
        tab[r, :n] = a
        tab[r, -1] = b
    for q, r in enumerate(art_rows):
        if tab[r, -1] < 0:
            tab[r, :-1] *= -1.0
            tab[r, -1] *= -1.0
        col = n + n_slack + q
        tab[r, col] = 1.0
        basis[r] = col

    if n_art:
        tab[-1, :] = 0.0
        for r in art_rows:
            tab[-1, :] -= tab[r, :]
        for q in range(n_art):
            tab[-1, n + n_slack + q] = 0.0
        _simplex(tab, basis, n + n_slack + n_art)
        if -tab[-1, -1] > FEAS_TOL:
            return LPResult("infeasible", None, math.inf)
        # drive zero-level artificials out of the basis, drop redundant rows
        keep = []
        for r in range(n_rows):
            if basis[r] >= n + n_slack:
                cols = np.flatnonzero(np.abs(tab[r, : n + n_slack]) > PIVOT_TOL)
                if cols.size:
                    _pivot(tab, basis, r, int(cols[0]))
                    keep.append(r)
            else:
                keep.append(r)
        tab = np.vstack([tab[keep], tab[-1:]])
        basis = [basis[r] for r in keep]
        tab = np.delete(tab, np.s_[n + n_slack: n + n_slack + n_art], axis=1)
        n_rows = len(keep)

    c = np.zeros(n + n_slack)
    c[:n] = lp.objective
    tab[-1, :] = 0.0
    tab[-1, : n + n_slack] = c
    for r in range(n_rows):
        if c[basis[r]] != 0.0:
            tab[-1] -= c[basis[r]] * tab[r]
    _simplex(tab, basis, n + n_slack)

    x = np.zeros(n + n_slack)
    for r in range(n_rows):
        x[basis[r]] = tab[r, -1]
    x = np.clip(x[:n], 0.0, None) + lo
    objective = float(np.dot(lp.objective, x)) + float(lp.constant)
    return LPResult("optimal", x, objective)


def lp_split(inst: Instance, lp: LinearProgram, x: np.ndarray) -> np.ndarray:
    nu = np.zeros((inst.m, inst.k))
    for (i, k), col in lp.variable_map.items():
        nu[i, k] = x[col]
    return nu


# ---------------------------------------------------------------------------
# Exhaustive search
# ---------------------------------------------------------------------------


@dataclass
class ExactResult:
    best_plan: Optional[OffloadPlan]
    best_energy: float
    evaluated: int
    feasible: bool
    best_time: float = math.nan
    lp_solves: int = 0
    per_placement_log: Optional[list] = None  # dicts: placement, feasible, energy_J, time_s


def gray_placements(inst: Instance) -> np.ndarray:
    """All placements with pinned components local, in reflected Gray-code order."""
    free = [i for i in range(inst.m) if i not in inst.pinned_local]
    n = 1 << len(free)
    idx = np.arange(n, dtype=np.int64)
    gray = idx ^ (idx >> 1)
    out = np.zeros((n, inst.m), dtype=np.int64)
    for bit, comp in enumerate(free):
        out[:, comp] = (gray >> bit) & 1
    return out


class _BatchScorer:
    """Vectorized per-placement quantities of the split LP."""

    def __init__(self, inst: Instance, receive: np.ndarray):
        self.inst = inst
        tu, td = transfer_tables(inst)
        a = inst.graph.alpha
        g = receive.astype(float)
        tx = np.array([r.tx_power for r in inst.radios])
        rx = np.array([r.rx_power for r in inst.radios])
        p_id = inst.device.idle_power
        self.demand = np.array([r.demand_rate for r in inst.radios])
        self.cap = np.array([r.uplink_rate for r in inst.radios]) * (1.0 - LP_RATE_MARGIN)
        # downlink on edge i->j (i cloud, j device) lands on radio receive[j]
        self.down_e = a * np.einsum("jk,ijk->ij", g, td * (p_id + rx))
        self.down_t = a * 2.0 * np.einsum("jk,ijk->ij", g, td)
        self.up_e = tu * (tx + p_id)
        self.up_t = 2.0 * tu
        self.alpha = a
        self.local_e = inst.device.active_power * inst.graph.local_time
        self.cloud_e = p_id * inst.graph.cloud_time

    def score(self, P: np.ndarray):
        inst = self.inst
        Pf = P.astype(float)
        Q = 1.0 - Pf
        e0 = Q @ self.local_e + Pf @ self.cloud_e + np.einsum("ni,ij,nj->n", Pf, self.down_e, Q)
        t0 = Q @ inst.graph.local_time + Pf @ inst.graph.cloud_time + np.einsum("ni,ij,nj->n", Pf, self.down_t, Q)
        ce = np.einsum("nj,ijk->nik", Pf, self.up_e) * Q[:, :, None]
        ct = np.einsum("nj,ijk->nik", Pf, self.up_t) * Q[:, :, None]
        count = (Pf @ self.alpha.T) * Q
        return e0, t0, ce, ct, count


def exhaustive_solve(inst: Instance, downlink_rule="fastest_downlink", log: bool = False,
                     batch: int = 4096) -> ExactResult:
    """Minimum-energy feasible plan over every placement of the free components.

    Ties in energy go to the lexicographically smallest placement vector.
    """
    from .iterative_solver import assign_receive

    free = inst.m - len(inst.pinned_local)
    if free > MAX_FREE:
        raise EnumerationTooLarge(f"{free} free components exceed the enumeration limit of {MAX_FREE}")
    receive = assign_receive(inst, downlink_rule)
    placements = gray_placements(inst)
    scorer = _BatchScorer(inst, receive)
    slack_t = inst.t_req + LP_DEADLINE_TOL * max(1.0, inst.t_req)

    best_key = (math.inf, ())
    best = None  # (placement, split, energy, time)
    rows_log = [] if log else None
    lp_solves = 0

    for start in range(0, len(placements), batch):
        P = placements[start: start + batch]
        e0, t0, ce, ct, count = scorer.score(P)
        active = count > 0
        choice = np.argmin(ce, axis=2)  # first minimum on ties
        pick_e = np.take_along_axis(ce, choice[:, :, None], axis=2)[:, :, 0] * active
        pick_t = np.take_along_axis(ct, choice[:, :, None], axis=2)[:, :, 0] * active
        relax_e = e0 + pick_e.sum(axis=1)
        relax_t = t0 + pick_t.sum(axis=1)
        onehot = (choice[:, :, None] == np.arange(inst.k)) & active[:, :, None]
        load = np.einsum("ni,nik->nk", count, onehot) * scorer.demand
        relax_ok = np.all(load <= scorer.cap, axis=1) & (relax_t <= slack_t)
        const_bad = t0 > slack_t

        for n in range(len(P)):
            placement = P[n]
            if const_bad[n]:
                if log:
                    rows_log.append(_log_row(placement, False, math.inf, float(t0[n])))
                continue
            if relax_ok[n]:
                energy, time = float(relax_e[n]), float(relax_t[n])
                split = None
                feasible = True
            else:
                if not log and relax_e[n] > best_key[0]:
                    continue  # the relaxation already loses; the LP cannot do better
                lp = build_lp(inst, placement, receive)
                res = solve_lp(lp)
                lp_solves += 1
                feasible = res.feasible
                if not feasible:
                    if log:
                        rows_log.append(_log_row(placement, False, math.inf, math.nan))
                    continue
                split = lp_split(inst, lp, res.x)
                energy = res.objective
                time = lp.time_constant + float(lp.time_coefficients @ res.x)
            if log:
                rows_log.append(_log_row(placement, True, energy, time))
            key = (energy, tuple(placement.tolist()))
            if key < best_key:
                if split is None:
                    split = np.zeros((inst.m, inst.k))
                    act = active[n]
                    split[act, choice[n][act]] = 1.0
                best_key = key
                best = (placement.copy(), split)

    if best is None:
        return ExactResult(None, math.inf, len(placements), False, lp_solves=lp_solves, per_placement_log=rows_log)
    plan = OffloadPlan(best[0], best[1], receive)
    costs = plan_costs(inst, plan)
    return ExactResult(plan, costs.energy, len(placements), True, best_time=costs.time,
                       lp_solves=lp_solves, per_placement_log=rows_log)


def _log_row(placement, feasible, energy, time) -> dict:
    return {
        "placement": "".join(str(int(b)) for b in placement),
        "feasible": bool(feasible),
        "energy_J": energy,
        "time_s": time,
    }


def write_placement_log(result: ExactResult, path) -> None:
    if result.per_placement_log is None:
        raise ValueError("result carries no per-placement log; run exhaustive_solve(..., log=True)")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=["placement", "feasible", "energy_J", "time_s"])
        w.writeheader()
        for row in result.per_placement_log:
            w.writerow(row)


# ---------------------------------------------------------------------------
# Baselines
# ---------------------------------------------------------------------------


def baseline_local(inst: Instance, downlink_rule="fastest_downlink") -> OffloadPlan:
    from .iterative_solver import assign_receive

    return OffloadPlan.local(inst, assign_receive(inst, downlink_rule))


def baseline_remote(inst: Instance, downlink_rule="fastest_downlink") -> OffloadPlan:
    """Every unpinned component in the cloud, split from the placement's LP.

    When that LP is infeasible the upload rows fall back to an even split;
    ``validate_plan`` then reports the plan infeasible.
    """
    from .iterative_solver import assign_receive

    receive = assign_receive(inst, downlink_rule)
    placement = np.ones(inst.m, dtype=np.int64)
    placement[list(inst.pinned_local)] = 0
    lp = build_lp(inst, placement, receive)
    res = solve_lp(lp)
    if res.feasible:
        split = lp_split(inst, lp, res.x)
    else:
        split = np.zeros((inst.m, inst.k))
        for (i, k) in lp.variable_map:
            split[i, k] = 1.0 / inst.k
    return OffloadPlan(placement, split, receive)
