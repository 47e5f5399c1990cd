"""Device energy and application time for a placement plus radio split.

Transfer times are keyed on the directed dependency edge: the data that
moves along ``i -> j`` is ``data[i, j]`` whichever direction the radio link
carries it. A cross-entity edge shows up in the communication energy and
time of both of its endpoints.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .profile import Instance, OffloadPlan, RadioInterface

__all__ = [
    "ComponentCosts",
    "PlanCosts",
    "uplink_transfer_time",
    "downlink_transfer_time",
    "transfer_tables",
    "edge_energy",
    "component_costs",
    "plan_costs",
]


@dataclass(frozen=True)
class ComponentCosts:
    e_m: float
    e_c: float
    e_com: float
    t_m: float
    t_c: float
    t_com: float

    @property
    def energy(self) -> float:
        return self.e_m + self.e_c + self.e_com

    @property
    def time(self) -> float:
        return self.t_m + self.t_c + self.t_com


@dataclass(frozen=True)
class PlanCosts:
    per_component: list
    energy: float  # J
    time: float  # s
    uplink_load: np.ndarray  # bits/s per radio

    def to_dict(self) -> dict:
        return {
            "energy_J": self.energy,
            "time_s": self.time,
            "uplink_load_bps": [float(v) for v in self.uplink_load],
            "components": [
                {"e_m": c.e_m, "e_c": c.e_c, "e_com": c.e_com, "t_m": c.t_m, "t_c": c.t_c, "t_com": c.t_com}
                for c in self.per_component
            ],
        }


def _latency(radio: RadioInterface, rtt_model: bool) -> float:
    return radio.rtt / 2.0 if rtt_model else 0.0


def uplink_transfer_time(d: float, radio: RadioInterface, rtt_model: bool = False) -> float:
    """Seconds to push ``d`` bits from the device to the cloud over ``radio``."""
    if d < 0:
        raise ValueError(f"data size must be >= 0, got {d}")
    return d / radio.uplink_rate + _latency(radio, rtt_model)


def downlink_transfer_time(d: float, radio: RadioInterface, rtt_model: bool = False) -> float:
    if d < 0:
        raise ValueError(f"data size must be >= 0, got {d}")
    return d / radio.downlink_rate + _latency(radio, rtt_model)


def transfer_tables(inst: Instance) -> tuple[np.ndarray, np.ndarray]:
    """Uplink and downlink times, each (M, M, K), zero off the edge set."""
    up_rate = np.array([r.uplink_rate for r in inst.radios])
    down_rate = np.array([r.downlink_rate for r in inst.radios])
    lat = np.array([_latency(r, inst.rtt_model) for r in inst.radios])
    d = inst.graph.data[:, :, None]
    edge = inst.graph.alpha[:, :, None]
    tu = edge * (d / up_rate + lat)
    td = edge * (d / down_rate + lat)
    return tu, td


def _check(inst: Instance, plan: OffloadPlan):
    if plan.placement.shape != (inst.m,) or plan.split.shape != (inst.m, inst.k):
        raise ValueError(
            f"plan shape {plan.split.shape} does not match instance ({inst.m}, {inst.k})"
        )


def _index(i: int, n: int, what: str):
    if not 0 <= i < n:
        raise IndexError(f"{what} index {i} out of range 0..{n - 1}")


def edge_energy(inst: Instance, plan: OffloadPlan, i: int, j: int, k: int) -> tuple[float, float]:
    """Transfer energies on radio ``k`` between components ``i`` and ``j``.

    Returns ``(eps_ij, eps_ji)``: the first is the share charged to ``i`` for
    the edge ``i -> j``, the second the share charged to ``i`` for ``j -> i``.
    The two use different power terms, exactly as the model states them.
    """
    _check(inst, plan)
    _index(i, inst.m, "component")
    _index(j, inst.m, "component")
    _index(k, inst.k, "radio")
    radio = inst.radios[k]
    d = inst.graph.data
    I, nu, g = plan.placement, plan.split, plan.receive
    p_id = inst.device.idle_power
    rtt = inst.rtt_model
    eps_ij = (
        I[i] * (1 - I[j]) * g[j, k] * p_id * downlink_transfer_time(d[i, j], radio, rtt)
        + (1 - I[i]) * I[j] * nu[i, k] * radio.tx_power * uplink_transfer_time(d[i, j], radio, rtt)
    )
    eps_ji = (
        I[i] * (1 - I[j]) * nu[j, k] * p_id * uplink_transfer_time(d[j, i], radio, rtt)
        + (1 - I[i]) * I[j] * g[i, k] * radio.rx_power * downlink_transfer_time(d[j, i], radio, rtt)
    )
    return float(eps_ij), float(eps_ji)


def _arrays(inst: Instance, plan: OffloadPlan, tables=None):
    tu, td = transfer_tables(inst) if tables is None else tables
    I = plan.placement.astype(float)
    nu, g = plan.split, plan.receive.astype(float)
    a = inst.graph.alpha
    up = a * np.outer(1 - I, I)  # i on device, j in cloud
    down = a * np.outer(I, 1 - I)  # i in cloud, j on device
    tx = np.array([r.tx_power for r in inst.radios])
    rx = np.array([r.rx_power for r in inst.radios])
    p_id = inst.device.idle_power

    # share of edge i->j charged to its source i
    e_out = p_id * np.einsum("ij,jk,ijk->i", down, g, td) + np.einsum("ij,ik,k,ijk->i", up, nu, tx, tu)
    # share of edge j->i charged to its destination i
    e_in = p_id * np.einsum("ji,jk,jik->i", up, nu, tu) + np.einsum("ji,ik,k,jik->i", down, g, rx, td)
    t_com = (
        np.einsum("ji,jk,jik->i", up, nu, tu)
        + np.einsum("ij,jk,ijk->i", down, g, td)
        + np.einsum("ij,ik,ijk->i", up, nu, tu)
        + np.einsum("ji,ik,jik->i", down, g, td)
    )
    e_m = (1 - I) * inst.device.active_power * inst.graph.local_time
    e_c = I * p_id * inst.graph.cloud_time
    t_m = (1 - I) * inst.graph.local_time
    t_c = I * inst.graph.cloud_time
    r = np.array([rad.demand_rate for rad in inst.radios])
    load = up.sum(axis=1) @ nu * r
    return e_m, e_c, e_out + e_in, t_m, t_c, t_com, load


def component_costs(inst: Instance, plan: OffloadPlan, i: int) -> ComponentCosts:
    _check(inst, plan)
    _index(i, inst.m, "component")
    e_m, e_c, e_com, t_m, t_c, t_com, _ = _arrays(inst, plan)
    return ComponentCosts(float(e_m[i]), float(e_c[i]), float(e_com[i]), float(t_m[i]), float(t_c[i]), float(t_com[i]))


def plan_costs(inst: Instance, plan: OffloadPlan, tables=None) -> PlanCosts:
    """Total device energy, total application time and per-radio uplink load."""
    _check(inst, plan)
    e_m, e_c, e_com, t_m, t_c, t_com, load = _arrays(inst, plan, tables)
    per = [
        ComponentCosts(float(e_m[i]), float(e_c[i]), float(e_com[i]), float(t_m[i]), float(t_c[i]), float(t_com[i]))
        for i in range(inst.m)
    ]
    return PlanCosts(
        per_component=per,
        energy=float(sum(c.energy for c in per)),
        time=float(sum(c.time for c in per)),
        uplink_load=load,
    )
