"""Lagrangian relaxation kernels.

The deadline, uplink-rate and allocation constraints are folded into the
objective with multipliers ``kappa`` (deadline), ``zeta[k]`` (rate of radio
``k``) and ``phi[i]`` (allocation row ``i``). The placement and split
updates below work on the per-component share ``L_i`` of that Lagrangian:
``L_i(I_i = 1) - L_i(I_i = 0) == delta_i`` with everything else held fixed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .energymodel import _arrays, plan_costs, transfer_tables
from .profile import Instance, OffloadPlan

__all__ = [
    "Multipliers",
    "StepSizes",
    "component_lagrangian",
    "lagrangian_value",
    "lambda_i",
    "lambdas",
    "gammas",
    "gamma_matrices",
    "delta_i",
    "deltas",
    "initial_placement",
    "omega",
    "omega_matrix",
    "nu_star",
    "update_placement",
]


@dataclass(frozen=True, eq=False)
class Multipliers:
    kappa: float
    zeta: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        kappa = float(self.kappa)
        zeta = np.array(self.zeta, dtype=float).reshape(-1)
        phi = np.array(self.phi, dtype=float).reshape(-1)
        if not math.isfinite(kappa) or kappa < 0:
            raise ValueError(f"kappa must be finite and >= 0, got {kappa}")
        if not np.all(np.isfinite(zeta)) or np.any(zeta < 0):
            raise ValueError("zeta must be finite and >= 0")
        if not np.all(np.isfinite(phi)):
            raise ValueError("phi must be finite")
        zeta.setflags(write=False)
        phi.setflags(write=False)
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "zeta", zeta)
        object.__setattr__(self, "phi", phi)

    @classmethod
    def initial(cls, inst: Instance, kappa: float = 0.1, zeta: float = 1e-6, phi: float = 0.1) -> "Multipliers":
        return cls(kappa, np.full(inst.k, zeta), np.full(inst.m, phi))

    @classmethod
    def zero(cls, inst: Instance) -> "Multipliers":
        return cls(0.0, np.zeros(inst.k), np.zeros(inst.m))

    def to_dict(self) -> dict:
        return {"kappa": self.kappa, "zeta": self.zeta.tolist(), "phi": self.phi.tolist()}

    def __eq__(self, other):
        if not isinstance(other, Multipliers):
            return NotImplemented
        return (self.kappa == other.kappa and np.array_equal(self.zeta, other.zeta)
                and np.array_equal(self.phi, other.phi))

    __hash__ = None


@dataclass(frozen=True)
class StepSizes:
    """Subgradient steps (``eps_*``) and relative-change tolerances (``tol_*``)."""

    eps_kappa: float = 0.05
    eps_zeta: float = 0.01
    eps_phi: float = 0.01
    tol_kappa: float = 1e-3
    tol_zeta: float = 1e-3
    tol_phi: float = 1e-3

    def __post_init__(self):
        for name in ("eps_kappa", "eps_zeta", "eps_phi", "tol_kappa", "tol_zeta", "tol_phi"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive, got {v}")


def _check(inst: Instance, plan: Optional[OffloadPlan], mult: Multipliers):
    if mult.zeta.shape != (inst.k,) or mult.phi.shape != (inst.m,):
        raise ValueError(
            f"multiplier shapes zeta {mult.zeta.shape}, phi {mult.phi.shape} do not match ({inst.m}, {inst.k})"
        )
    if plan is not None and (plan.placement.shape != (inst.m,) or plan.split.shape != (inst.m, inst.k)):
        raise ValueError(f"plan shape {plan.split.shape} does not match instance ({inst.m}, {inst.k})")


def _index(i: int, n: int, what: str):
    if not 0 <= i < n:
        raise IndexError(f"{what} index {i} out of range 0..{n - 1}")


def _demand(inst: Instance) -> np.ndarray:
    return np.array([r.demand_rate for r in inst.radios])


def _uplink(inst: Instance) -> np.ndarray:
    return np.array([r.uplink_rate for r in inst.radios])


def component_lagrangian(inst: Instance, plan: OffloadPlan, mult: Multipliers, tables=None) -> np.ndarray:
    """Per-component shares ``L_i``; they sum to the Lagrangian minus its constant part."""
    _check(inst, plan, mult)
    e_m, e_c, e_com, t_m, t_c, t_com, _ = _arrays(inst, plan, tables)
    I = plan.placement.astype(float)
    a = inst.graph.alpha
    up = a * np.outer(1 - I, I)
    rate_term = up.sum(axis=1) * (plan.split @ (mult.zeta * _demand(inst)))
    alloc_term = mult.phi * (a.sum(axis=1) * plan.split.sum(axis=1) - 1.0)
    return e_m + e_c + e_com + mult.kappa * (t_m + t_c + t_com) + rate_term + alloc_term


def lagrangian_value(inst: Instance, plan: OffloadPlan, mult: Multipliers) -> float:
    """Energy plus multiplier-weighted constraint residuals.

    The deadline and rate residuals are ``sum(T_i) - T_req`` and
    ``load_k - R_k``; the allocation residual of row ``i`` is
    ``sum_j alpha_ij * sum_k nu_ik - 1``.
    """
    _check(inst, plan, mult)
    costs = plan_costs(inst, plan)
    total = costs.energy
    if mult.kappa > 0:
        total += mult.kappa * (costs.time - inst.t_req)
    total += float(mult.zeta @ (costs.uplink_load - _uplink(inst)))
    alloc = inst.graph.alpha.sum(axis=1) * plan.split.sum(axis=1) - 1.0
    return total + float(mult.phi @ alloc)


def lambda_i(inst: Instance, mult: Multipliers, i: int) -> float:
    _index(i, inst.m, "component")
    return float(lambdas(inst, mult)[i])


def lambdas(inst: Instance, mult: Multipliers) -> np.ndarray:
    """Placement-only part of ``delta``: cloud minus local cost of each component."""
    g = inst.graph
    return (
        inst.device.idle_power * g.cloud_time
        - inst.device.active_power * g.local_time
        + mult.kappa * (g.cloud_time - g.local_time)
    )


def gamma_matrices(inst: Instance, plan: OffloadPlan, mult: Multipliers, tables=None) -> tuple[np.ndarray, np.ndarray]:
    """``(gamma_c, gamma_m)``, each (M, M).

    ``gamma_c[i, j]`` is what component ``i`` pays in the cloud when ``j``
    stays on the device; ``gamma_m[i, j]`` what it pays on the device when
    ``j`` runs in the cloud.
    """
    _check(inst, plan, mult)
    tu, td = transfer_tables(inst) if tables is None else tables
    a = inst.graph.alpha
    nu, g = plan.split, plan.receive.astype(float)
    kappa = mult.kappa
    tx = np.array([r.tx_power for r in inst.radios])
    rx = np.array([r.rx_power for r in inst.radios])

    # tu.transpose(1, 0, 2)[i, j, k] == tu[j, i, k]
    tu_t = tu.transpose(1, 0, 2)
    td_t = td.transpose(1, 0, 2)
    gc = (inst.device.idle_power + kappa) * (
        a.T * np.einsum("jk,ijk->ij", nu, tu_t) + a * np.einsum("jk,ijk->ij", g, td)
    )
    gm = (
        a * np.einsum("ik,k,ijk->ij", nu, tx + kappa, tu)
        + a.T * np.einsum("ik,k,ijk->ij", g, rx + kappa, td_t)
        + a * (nu @ (mult.zeta * _demand(inst)))[:, None]
    )
    return gc, gm


def gammas(inst: Instance, plan: OffloadPlan, mult: Multipliers, i: int, j: int) -> tuple[float, float]:
    _index(i, inst.m, "component")
    _index(j, inst.m, "component")
    gc, gm = gamma_matrices(inst, plan, mult)
    return float(gc[i, j]), float(gm[i, j])


def deltas(inst: Instance, plan: OffloadPlan, mult: Multipliers, tables=None) -> np.ndarray:
    """Change in ``L_i`` from moving component ``i`` to the cloud, for every ``i``."""
    gc, gm = gamma_matrices(inst, plan, mult, tables)
    I = plan.placement.astype(float)
    np.fill_diagonal(gc, 0.0)
    np.fill_diagonal(gm, 0.0)
    return lambdas(inst, mult) + gc @ (1 - I) - gm @ I


def delta_i(inst: Instance, plan: OffloadPlan, mult: Multipliers, i: int) -> float:
    _index(i, inst.m, "component")
    return float(deltas(inst, plan, mult)[i])


def _pin(inst: Instance, placement: np.ndarray) -> np.ndarray:
    placement = placement.astype(np.int64)
    placement[list(inst.pinned_local)] = 0
    return placement


def initial_placement(inst: Instance, mult: Multipliers) -> np.ndarray:
    """Cloud wherever the placement-only term is negative; ties stay local."""
    return _pin(inst, lambdas(inst, mult) < 0)


def update_placement(inst: Instance, plan: OffloadPlan, mult: Multipliers, tables=None) -> np.ndarray:
    return _pin(inst, deltas(inst, plan, mult, tables) < 0)


def omega_matrix(inst: Instance, plan: OffloadPlan, mult: Multipliers, phi_outside_sum: bool = False,
                 tables=None) -> np.ndarray:
    """Marginal Lagrangian cost of routing component ``i``'s upload over radio ``k``, (M, K).

    By default ``phi_i`` is added once per summand of the ``j`` sum (``M``
    times); ``phi_outside_sum`` adds it once.
    """
    _check(inst, plan, mult)
    tu = (transfer_tables(inst) if tables is None else tables)[0]
    I = plan.placement.astype(float)
    up = inst.graph.alpha * np.outer(1 - I, I)
    tx = np.array([r.tx_power for r in inst.radios])
    per_edge = np.einsum("ij,ijk->ik", up, tu) * (tx + mult.kappa)
    per_edge += up.sum(axis=1)[:, None] * (mult.zeta * _demand(inst))
    reps = 1.0 if phi_outside_sum else float(inst.m)
    return per_edge + reps * mult.phi[:, None]


def omega(inst: Instance, plan: OffloadPlan, mult: Multipliers, i: int, k: int,
          phi_outside_sum: bool = False) -> float:
    _index(i, inst.m, "component")
    _index(k, inst.k, "radio")
    return float(omega_matrix(inst, plan, mult, phi_outside_sum)[i, k])


def nu_star(inst: Instance, plan: OffloadPlan, mult: Multipliers, phi_outside_sum: bool = False,
            tables=None) -> np.ndarray:
    """Uplink split for the plan's placement.

    Rows of device-side components with outgoing edges get
    ``1 - omega_ik / sum(omega)``, clamped at zero and rescaled to sum to 1;
    all other rows are zero. A non-positive or non-finite ``sum(omega)``, or
    a row that clamps to all zeros, falls back to the uniform split.
    """
    om = omega_matrix(inst, plan, mult, phi_outside_sum, tables)
    active = (plan.placement == 0) & (inst.graph.out_degree > 0)
    nu = np.zeros((inst.m, inst.k))
    if not active.any():
        return nu
    total = om.sum()
    if not math.isfinite(total) or total <= 0:
        nu[active] = 1.0 / inst.k
        return nu
    raw = np.clip(1.0 - om[active] / total, 0.0, None)
    sums = raw.sum(axis=1, keepdims=True)
    dead = sums[:, 0] <= 0
    raw[dead] = 1.0
    sums[dead] = inst.k
    nu[active] = raw / sums
    return nu
