"""Independent reference implementations used by the tests.

Everything here is written as explicit loops straight from the model's
scalar formulas and shares no code with the package beyond the data types.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from mroffload.profile import AppGraph, DeviceProfile, Instance, OffloadPlan, RadioInterface


def t_up(inst, a, b, k):
    """Uplink time of the data on edge a->b over radio k."""
    r = inst.radios[k]
    lat = r.rtt / 2 if inst.rtt_model else 0.0
    return inst.graph.data[a, b] / r.uplink_rate + lat


def t_down(inst, a, b, k):
    r = inst.radios[k]
    lat = r.rtt / 2 if inst.rtt_model else 0.0
    return inst.graph.data[a, b] / r.downlink_rate + lat


def literal_costs(inst, plan):
    """Per-component (e_m, e_c, e_com, t_m, t_c, t_com) plus uplink load, by loops."""
    M, K = inst.m, inst.k
    A = inst.graph.alpha
    I = [int(v) for v in plan.placement]
    nu, g = plan.split, plan.receive
    pid = inst.device.idle_power
    comps = []
    for i in range(M):
        e_m = (1 - I[i]) * inst.device.active_power[i] * inst.graph.local_time[i]
        e_c = I[i] * pid * inst.graph.cloud_time[i]
        e_com = 0.0
        t_com = 0.0
        for j in range(M):
            if j == i:
                continue
            for k in range(K):
                tx = inst.radios[k].tx_power
                rx = inst.radios[k].rx_power
                # share of edge i->j charged to i
                eps_ij = (I[i] * (1 - I[j]) * g[j, k] * pid * t_down(inst, i, j, k)
                          + (1 - I[i]) * I[j] * nu[i, k] * tx * t_up(inst, i, j, k))
                # share of edge j->i charged to i
                eps_ji = (I[i] * (1 - I[j]) * nu[j, k] * pid * t_up(inst, j, i, k)
                          + (1 - I[i]) * I[j] * g[i, k] * rx * t_down(inst, j, i, k))
                e_com += A[i, j] * eps_ij + A[j, i] * eps_ji
                t_com += (I[i] * (1 - I[j]) * (A[j, i] * nu[j, k] * t_up(inst, j, i, k)
                                               + A[i, j] * g[j, k] * t_down(inst, i, j, k))
                          + (1 - I[i]) * I[j] * (A[i, j] * nu[i, k] * t_up(inst, i, j, k)
                                                 + A[j, i] * g[i, k] * t_down(inst, j, i, k)))
        t_m = (1 - I[i]) * inst.graph.local_time[i]
        t_c = I[i] * inst.graph.cloud_time[i]
        comps.append((e_m, e_c, e_com, t_m, t_c, t_com))
    load = []
    for k in range(K):
        s = 0.0
        for i in range(M):
            for j in range(M):
                if j != i:
                    s += A[i, j] * (1 - I[i]) * I[j] * nu[i, k] * inst.radios[k].demand_rate
        load.append(s)
    energy = sum(c[0] + c[1] + c[2] for c in comps)
    time = sum(c[3] + c[4] + c[5] for c in comps)
    return comps, energy, time, load


def literal_component_lagrangian(inst, plan, mult, i):
    """Component i's share of the Lagrangian, by loops."""
    comps, _, _, _ = literal_costs(inst, plan)
    e_m, e_c, e_com, t_m, t_c, t_com = comps[i]
    I = plan.placement
    A = inst.graph.alpha
    rate = 0.0
    for k in range(inst.k):
        for j in range(inst.m):
            if j != i:
                rate += mult.zeta[k] * A[i, j] * (1 - I[i]) * I[j] * plan.split[i, k] * inst.radios[k].demand_rate
    outdeg = sum(A[i, j] for j in range(inst.m))
    alloc = mult.phi[i] * (outdeg * sum(plan.split[i, k] for k in range(inst.k)) - 1.0)
    return e_m + e_c + e_com + mult.kappa * (t_m + t_c + t_com) + rate + alloc


def literal_lagrangian(inst, plan, mult):
    total = sum(literal_component_lagrangian(inst, plan, mult, i) for i in range(inst.m))
    if math.isfinite(inst.t_req):
        total -= mult.kappa * inst.t_req
    for k in range(inst.k):
        total -= mult.zeta[k] * inst.radios[k].uplink_rate
    return total


def literal_gammas(inst, plan, mult, i, j):
    """(Gamma_c, Gamma_m) for the pair (i, j), typed out term by term."""
    A = inst.graph.alpha
    nu, g = plan.split, plan.receive
    pid, kap = inst.device.idle_power, mult.kappa
    gc = 0.0
    gm = 0.0
    for k in range(inst.k):
        r = inst.radios[k]
        gc += A[j, i] * nu[j, k] * t_up(inst, j, i, k) + A[i, j] * g[j, k] * t_down(inst, i, j, k)
        gm += (A[i, j] * nu[i, k] * r.tx_power * t_up(inst, i, j, k)
               + A[j, i] * g[i, k] * r.rx_power * t_down(inst, j, i, k)
               + kap * (A[i, j] * nu[i, k] * t_up(inst, i, j, k) + A[j, i] * g[i, k] * t_down(inst, j, i, k))
               + mult.zeta[k] * A[i, j] * nu[i, k] * r.demand_rate)
    return (pid + kap) * gc, gm


def literal_delta(inst, plan, mult, i):
    g = inst.graph
    lam = (inst.device.idle_power * g.cloud_time[i] - inst.device.active_power[i] * g.local_time[i]
           + mult.kappa * (g.cloud_time[i] - g.local_time[i]))
    s = lam
    for j in range(inst.m):
        if j == i:
            continue
        gc, gm = literal_gammas(inst, plan, mult, i, j)
        s += (1 - plan.placement[j]) * gc - plan.placement[j] * gm
    return s


def toggled(plan, i, value):
    p = plan.placement.copy()
    p[i] = value
    return OffloadPlan(p, plan.split, plan.receive)


# ---------------------------------------------------------------------------
# random objects
# ---------------------------------------------------------------------------


def random_instance(rng, m, k, *, edge_p=0.5, t_req=None, rtt_model=None, pinned=None,
                    data_scale=2e6):
    alpha = np.zeros((m, m), dtype=np.int64)
    for a in range(m):
        for b in range(a + 1, m):
            if b == a + 1 or rng.random() < edge_p:
                alpha[a, b] = 1
    data = alpha * rng.uniform(0.0, data_scale, (m, m))
    local = rng.uniform(0.01, 1.0, m)
    cloud = local / rng.uniform(1.0, 10.0, m)
    graph = AppGraph(alpha, data, local, cloud)
    idle = rng.uniform(0.005, 0.05)
    device = DeviceProfile(rng.uniform(idle * 2, 1.5, m), idle)
    radios = tuple(
        RadioInterface(
            uplink_rate=rng.uniform(0.5e6, 5e6),
            downlink_rate=rng.uniform(1e6, 8e6),
            tx_power=rng.uniform(0.1, 1.0),
            rx_power=rng.uniform(0.05, 0.5),
            demand_rate=rng.uniform(0.2e6, 2e6),
            rtt=rng.uniform(0.0, 0.2),
        )
        for _ in range(k)
    )
    if t_req is None:
        t_req = float(local.sum() * rng.uniform(0.5, 2.0))
    if rtt_model is None:
        rtt_model = bool(rng.random() < 0.5)
    return Instance(graph, device, radios, t_req, pinned_local=pinned, rtt_model=rtt_model)


def random_plan(rng, inst, *, normalized=False):
    placement = rng.integers(0, 2, inst.m)
    placement[list(inst.pinned_local)] = 0
    split = rng.random((inst.m, inst.k))
    if normalized:
        split /= split.sum(axis=1, keepdims=True)
    receive = np.zeros((inst.m, inst.k), dtype=np.int64)
    receive[np.arange(inst.m), rng.integers(0, inst.k, inst.m)] = 1
    return OffloadPlan(placement, split, receive)


def brute_force_best(inst, receive, lp_solver):
    """Minimum energy over all placements, each solved with ``lp_solver(inst, placement)``."""
    free = [i for i in range(inst.m) if i not in inst.pinned_local]
    best = (math.inf, None)
    for bits in itertools.product((0, 1), repeat=len(free)):
        placement = np.zeros(inst.m, dtype=np.int64)
        placement[free] = bits
        value = lp_solver(inst, placement)
        if value < best[0]:
            best = (value, placement)
    return best


def literal_lp(inst, placement, receive):
    """Split LP for a fixed placement, with coefficients probed from ``literal_costs``.

    Energy, time and per-radio load are affine in the split, so evaluating
    the literal expansion at zero and at each unit vector recovers them.
    Returns ``(cols, c, c0, t, t0, load, load0)``.
    """
    A = inst.graph.alpha
    I = np.asarray(placement)
    cols = [(i, k) for i in range(inst.m)
            if any(A[i, j] * (1 - I[i]) * I[j] for j in range(inst.m))
            for k in range(inst.k)]

    def probe(nu):
        _, energy, time, load = literal_costs(inst, OffloadPlan(I, nu, receive))
        return energy, time, np.array(load)

    e0, t0, l0 = probe(np.zeros((inst.m, inst.k)))
    c, t, load = [], [], []
    for i, k in cols:
        nu = np.zeros((inst.m, inst.k))
        nu[i, k] = 1.0
        e, tt, ll = probe(nu)
        c.append(e - e0)
        t.append(tt - t0)
        load.append(ll - l0)
    return cols, np.array(c), e0, np.array(t), t0, np.array(load).T.reshape(inst.k, len(cols)), l0


def scipy_lp_energy(inst, placement, receive):
    """Optimal energy of the split LP via scipy, ``inf`` when infeasible."""
    from scipy.optimize import linprog

    cols, c, c0, t, t0, load, _ = literal_lp(inst, placement, receive)
    slack_t = inst.t_req + 0.5e-9 * max(1.0, inst.t_req) - t0
    if slack_t < 0:
        return math.inf
    if not cols:
        return c0
    rows = sorted({i for i, _ in cols})
    a_eq = np.array([[1.0 if i == r else 0.0 for i, _ in cols] for r in rows])
    a_ub = [row for row in load]
    b_ub = [r.uplink_rate * (1 - 2e-9) for r in inst.radios]
    if math.isfinite(slack_t):
        a_ub.append(t)
        b_ub.append(slack_t)
    res = linprog(c, A_ub=np.array(a_ub), b_ub=b_ub, A_eq=a_eq, b_eq=np.ones(len(rows)),
                  bounds=[(0, 1)] * len(cols), method="highs")
    return float(res.fun) + c0 if res.status == 0 else math.inf
