"""Iterative radio-aware offloading schedule.

An inner modification loop alternates placement updates from the sign of
``delta`` with closed-form uplink splits while the Lagrangian keeps
decreasing; an outer loop moves the multipliers along the constraint
residuals (projected subgradient) until they settle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .energymodel import PlanCosts, plan_costs, transfer_tables
from .lagrangian import (
    Multipliers,
    StepSizes,
    component_lagrangian,
    deltas,
    initial_placement,
    lambdas,
    nu_star,
)
from .profile import Instance, OffloadPlan, fastest_downlink, validate_plan

__all__ = [
    "IterativeConfig",
    "SolveReport",
    "assign_receive",
    "inner_modification_loop",
    "solve",
]

DownlinkRule = Union[str, tuple]


def _parse_rule(rule: DownlinkRule):
    if rule == "fastest_downlink":
        return None
    if isinstance(rule, tuple) and len(rule) == 2 and rule[0] == "fixed":
        return int(rule[1])
    if isinstance(rule, str) and rule.startswith("fixed(") and rule.endswith(")"):
        return int(rule[6:-1])
    if isinstance(rule, (int, np.integer)):
        return int(rule)
    raise ValueError(f"unknown downlink rule {rule!r}")


def assign_receive(inst: Instance, rule: DownlinkRule = "fastest_downlink") -> np.ndarray:
    """One-hot downlink radio per component.

    ``"fastest_downlink"`` picks the highest downlink rate (first on ties);
    ``("fixed", k)`` or ``"fixed(k)"`` pins every component to radio ``k``.
    """
    k = _parse_rule(rule)
    if k is None:
        k = fastest_downlink(inst.radios)
    elif not 0 <= k < inst.k:
        raise ValueError(f"fixed downlink radio {k} out of range 0..{inst.k - 1}")
    receive = np.zeros((inst.m, inst.k), dtype=np.int64)
    receive[:, k] = 1
    return receive


@dataclass(frozen=True)
class IterativeConfig:
    steps: StepSizes = field(default_factory=StepSizes)
    init_kappa: float = 0.1
    init_zeta: float = 1e-6
    init_phi: float = 0.1
    max_outer: int = 500
    max_inner: int = 200
    downlink_rule: DownlinkRule = "fastest_downlink"
    phi_outside_sum: bool = False

    def __post_init__(self):
        if self.max_outer < 1 or self.max_inner < 1:
            raise ValueError("iteration caps must be >= 1")
        _parse_rule(self.downlink_rule)

    def initial_multipliers(self, inst: Instance) -> Multipliers:
        return Multipliers.initial(inst, self.init_kappa, self.init_zeta, self.init_phi)


@dataclass
class SolveReport:
    plan: OffloadPlan
    costs: PlanCosts
    outer_iters: int
    inner_iters_total: int
    converged: bool
    feasible: bool
    multiplier_history: list = field(default_factory=list)
    inner_iters: list = field(default_factory=list)  # per outer step

    @property
    def energy(self) -> float:
        return self.costs.energy

    @property
    def time(self) -> float:
        return self.costs.time

    def to_dict(self) -> dict:
        return {
            "plan": self.plan.to_dict(),
            "energy_J": self.costs.energy,
            "time_s": self.costs.time,
            "uplink_load_bps": self.costs.uplink_load.tolist(),
            "feasible": self.feasible,
            "converged": self.converged,
            "outer_iters": self.outer_iters,
            "inner_iters_total": self.inner_iters_total,
            "inner_iters": list(self.inner_iters),
            "multiplier_history": [m.to_dict() for m in self.multiplier_history],
        }


class _Context:
    """Per-solve constants shared by the kernels."""

    def __init__(self, inst: Instance, cfg: IterativeConfig):
        self.inst = inst
        self.cfg = cfg
        self.tables = transfer_tables(inst)
        self.free = np.array([i for i in range(inst.m) if i not in inst.pinned_local], dtype=np.int64)

    def with_split(self, plan: OffloadPlan, mult: Multipliers) -> OffloadPlan:
        nu = nu_star(self.inst, plan, mult, self.cfg.phi_outside_sum, self.tables)
        return plan.with_(split=nu)

    def lagrangian(self, plan: OffloadPlan, mult: Multipliers) -> float:
        return float(component_lagrangian(self.inst, plan, mult, self.tables).sum())


def inner_modification_loop(inst: Instance, plan: OffloadPlan, mult: Multipliers, cfg: IterativeConfig,
                            delta_prev: Optional[np.ndarray] = None, _ctx: Optional[_Context] = None,
                            _visit=None):
    """Placement/split refinement at fixed multipliers.

    Returns ``(best_plan, inner_iterations, last_delta)`` where ``best_plan``
    has the lowest Lagrangian among the starting plan and every iterate.
    """
    ctx = _ctx or _Context(inst, cfg)
    if delta_prev is None:
        delta_prev = deltas(inst, plan, mult, ctx.tables)
    current = plan
    l_current = ctx.lagrangian(current, mult)
    best, l_best = current, l_current
    r = 0
    while r < cfg.max_inner:
        d_new = deltas(inst, current, mult, ctx.tables)
        placement = (d_new < 0).astype(np.int64)
        placement[list(inst.pinned_local)] = 0
        if np.any(d_new * delta_prev < 0) and ctx.free.size:
            flip = ctx.free[int(np.argmin(d_new[ctx.free]))]
            placement[flip] = 1 - placement[flip]
        candidate = ctx.with_split(current.with_(placement=placement), mult)
        l_candidate = ctx.lagrangian(candidate, mult)
        if _visit is not None:
            _visit(candidate)
        r += 1
        delta_prev = d_new
        stop = l_candidate >= l_current
        current, l_current = candidate, l_candidate
        if l_current < l_best:
            best, l_best = current, l_current
        if stop:
            break
    return best, r, delta_prev


def _residuals(inst: Instance, plan: OffloadPlan, costs: PlanCosts):
    """Constraint residuals in the sign convention of the multiplier updates."""
    deadline = inst.t_req - costs.time
    uplink = np.array([r.uplink_rate for r in inst.radios])
    rate = uplink - costs.uplink_load
    uploads = (inst.graph.alpha * np.outer(1 - plan.placement, plan.placement)).sum(axis=1) > 0
    alloc = np.where(uploads, 1.0 - plan.split.sum(axis=1), 0.0)
    return deadline, rate, alloc


def _update(inst: Instance, mult: Multipliers, plan: OffloadPlan, costs: PlanCosts, cfg: IterativeConfig, s: int):
    steps = cfg.steps
    decay = 1.0 / math.sqrt(s)
    deadline, rate, alloc = _residuals(inst, plan, costs)
    if math.isinf(deadline):
        kappa = 0.0
    else:
        kappa = max(0.0, mult.kappa - steps.eps_kappa * decay * deadline)
    uplink = np.array([r.uplink_rate for r in inst.radios])
    # rate residuals are taken relative to each radio's service rate
    zeta = np.maximum(0.0, mult.zeta - steps.eps_zeta * decay * rate / uplink)
    phi = mult.phi - steps.eps_phi * decay * alloc
    return Multipliers(kappa, zeta, phi)


def _rel_change(new, old, tol) -> bool:
    new = np.atleast_1d(np.asarray(new, dtype=float))
    old = np.atleast_1d(np.asarray(old, dtype=float))
    diff = np.abs(new - old)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(new != 0, diff / np.abs(new), diff)
    return bool(np.all(rel < tol))


def _converged(new: Multipliers, old: Multipliers, steps: StepSizes) -> bool:
    return (
        _rel_change(new.kappa, old.kappa, steps.tol_kappa)
        and _rel_change(new.zeta, old.zeta, steps.tol_zeta)
        and _rel_change(new.phi, old.phi, steps.tol_phi)
    )


def _violation_score(inst: Instance, costs: PlanCosts) -> float:
    uplink = np.array([r.uplink_rate for r in inst.radios])
    over_rate = np.maximum(0.0, costs.uplink_load - uplink) / uplink
    over_time = max(0.0, costs.time - inst.t_req) / inst.t_req if math.isfinite(inst.t_req) else 0.0
    return float(over_time + over_rate.sum())


def solve(inst: Instance, cfg: Optional[IterativeConfig] = None) -> SolveReport:
    cfg = cfg or IterativeConfig()
    ctx = _Context(inst, cfg)
    receive = assign_receive(inst, cfg.downlink_rule)
    mult = cfg.initial_multipliers(inst)

    placement = initial_placement(inst, mult)
    delta = lambdas(inst, mult)
    plan = ctx.with_split(OffloadPlan(placement, np.zeros((inst.m, inst.k)), receive), mult)

    best_feasible = None  # (energy, plan, costs)
    least_bad = None  # (violation, energy, plan, costs)

    def visit(p: OffloadPlan):
        nonlocal best_feasible, least_bad
        c = plan_costs(inst, p, ctx.tables)
        if not validate_plan(inst, p):
            if best_feasible is None or c.energy < best_feasible[0]:
                best_feasible = (c.energy, p, c)
        else:
            key = (_violation_score(inst, c), c.energy)
            if least_bad is None or key < least_bad[:2]:
                least_bad = (key[0], key[1], p, c)

    visit(plan)
    history = [mult]
    inner_counts = []
    converged = False
    s = 0
    while s < cfg.max_outer:
        s += 1
        if np.any(delta < 0):
            plan, r, delta = inner_modification_loop(inst, plan, mult, cfg, delta, ctx, visit)
        else:
            r = 0
        inner_counts.append(r)
        costs = plan_costs(inst, plan, ctx.tables)
        feasible_now = not validate_plan(inst, plan)
        new_mult = _update(inst, mult, plan, costs, cfg, s)
        settled = _converged(new_mult, mult, cfg.steps)
        mult = new_mult
        history.append(mult)
        if settled and feasible_now:
            converged = True
            break
        if r == 0:
            # the guard skipped the inner loop; refresh it under the new multipliers
            delta = deltas(inst, plan, mult, ctx.tables)

    if best_feasible is not None:
        _, plan, costs = best_feasible
        feasible = True
    else:
        _, _, plan, costs = least_bad
        feasible = False
    return SolveReport(
        plan=plan,
        costs=costs,
        outer_iters=s,
        inner_iters_total=int(sum(inner_counts)),
        converged=converged,
        feasible=feasible,
        multiplier_history=history,
        inner_iters=inner_counts,
    )
