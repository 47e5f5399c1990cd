"""Application, device and radio data model.

Everything is stored in SI units (seconds, watts, bits, bits/s). The JSON
loader accepts a ``units`` block and converts on the way in; see
``docs/format.md`` for the file layout.

Component and radio indices are 0-based throughout.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "ProfileError",
    "ParseError",
    "ValidationError",
    "AppGraph",
    "RadioInterface",
    "DeviceProfile",
    "Instance",
    "OffloadPlan",
    "Violation",
    "SynthRanges",
    "load_instance",
    "loads_instance",
    "dump_instance",
    "instance_to_dict",
    "instance_from_dict",
    "synthesize_instance",
    "resample_unpublished",
    "validate_plan",
    "bundled_instance_path",
]

DEADLINE_TOL = 1e-9
RATE_MARGIN = 1e-9
SPLIT_TOL = 1e-9


class ProfileError(ValueError):
    pass


class ParseError(ProfileError):
    """The file could not be read or decoded."""


class ValidationError(ProfileError):
    """A domain invariant does not hold.

    ``invariant`` is a short dotted name such as ``"alpha.self_dependency"``.
    """

    def __init__(self, invariant: str, message: str):
        super().__init__(f"{invariant}: {message}")
        self.invariant = invariant
        self.message = message


def _frozen_array(values, dtype=float, ndim=None, name="array") -> np.ndarray:
    try:
        arr = np.array(values, dtype=dtype)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{name}.type", str(exc)) from None
    if ndim is not None and arr.ndim != ndim:
        raise ValidationError(f"{name}.shape", f"expected {ndim}-d, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AppGraph:
    """Component call graph with per-component execution times.

    ``alpha[i, j] == 1`` means component ``i`` runs immediately before ``j``
    and ``data[i, j]`` bits flow along that edge.
    """

    alpha: np.ndarray
    data: np.ndarray
    local_time: np.ndarray
    cloud_time: np.ndarray

    def __post_init__(self):
        alpha = _frozen_array(self.alpha, float, 2, "alpha")
        data = _frozen_array(self.data, float, 2, "data")
        local = _frozen_array(self.local_time, float, 1, "local_time")
        cloud = _frozen_array(self.cloud_time, float, 1, "cloud_time")
        m = local.shape[0]
        if m < 2:
            raise ValidationError("graph.size", f"need at least 2 components, got {m}")
        for name, arr, shape in (
            ("alpha", alpha, (m, m)),
            ("data", data, (m, m)),
            ("cloud_time", cloud, (m,)),
        ):
            if arr.shape != shape:
                raise ValidationError(f"{name}.shape", f"expected {shape}, got {arr.shape}")
        if not np.all((alpha == 0) | (alpha == 1)):
            raise ValidationError("alpha.binary", "entries must be 0 or 1")
        diag = np.flatnonzero(np.diag(alpha))
        if diag.size:
            i = int(diag[0])
            raise ValidationError("alpha.self_dependency", f"alpha[{i}][{i}] = 1")
        back = np.argwhere(np.tril(alpha, -1))
        if back.size:
            i, j = (int(v) for v in back[0])
            raise ValidationError(
                "alpha.order",
                f"edge {i}->{j} runs against the execution order (only forward edges allowed)",
            )
        for name, arr in (("data", data), ("local_time", local), ("cloud_time", cloud)):
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"{name}.finite", "values must be finite")
            if np.any(arr < 0):
                idx = np.argwhere(arr < 0)[0]
                raise ValidationError(f"{name}.nonnegative", f"negative value at {tuple(int(v) for v in idx)}")
        stray = np.argwhere((data > 0) & (alpha == 0))
        if stray.size:
            i, j = (int(v) for v in stray[0])
            raise ValidationError("data.without_edge", f"data[{i}][{j}] > 0 but alpha[{i}][{j}] = 0")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "local_time", local)
        object.__setattr__(self, "cloud_time", cloud)

    @property
    def m(self) -> int:
        return int(self.local_time.shape[0])

    @property
    def out_degree(self) -> np.ndarray:
        return self.alpha.sum(axis=1)

    def edges(self) -> list[tuple[int, int]]:
        return [(int(i), int(j)) for i, j in np.argwhere(self.alpha)]

    def __eq__(self, other):
        if not isinstance(other, AppGraph):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, f), getattr(other, f))
            for f in ("alpha", "data", "local_time", "cloud_time")
        )

    __hash__ = None


@dataclass(frozen=True)
class RadioInterface:
    uplink_rate: float  # bits/s
    downlink_rate: float  # bits/s
    tx_power: float  # W
    rx_power: float  # W
    demand_rate: float  # bits/s offered per uploading edge
    rtt: float = 0.0  # s
    name: str = ""

    def __post_init__(self):
        for f in ("uplink_rate", "downlink_rate", "tx_power", "rx_power", "demand_rate"):
            v = float(getattr(self, f))
            if not math.isfinite(v) or v <= 0:
                raise ValidationError(f"radio.{f}", f"must be finite and > 0, got {v}")
            object.__setattr__(self, f, v)
        rtt = float(self.rtt)
        if not math.isfinite(rtt) or rtt < 0:
            raise ValidationError("radio.rtt", f"must be finite and >= 0, got {rtt}")
        object.__setattr__(self, "rtt", rtt)


@dataclass(frozen=True, eq=False)
class DeviceProfile:
    active_power: np.ndarray  # W, per component
    idle_power: float  # W

    def __post_init__(self):
        active = _frozen_array(self.active_power, float, 1, "active_power")
        idle = float(self.idle_power)
        if not math.isfinite(idle) or idle <= 0:
            raise ValidationError("device.idle_power", f"must be finite and > 0, got {idle}")
        if not np.all(np.isfinite(active)):
            raise ValidationError("device.active_power", "values must be finite")
        low = np.flatnonzero(active <= idle)
        if low.size:
            i = int(low[0])
            raise ValidationError(
                "device.active_power",
                f"active_power[{i}] = {active[i]} must exceed idle_power = {idle}",
            )
        object.__setattr__(self, "active_power", active)
        object.__setattr__(self, "idle_power", idle)

    def __eq__(self, other):
        if not isinstance(other, DeviceProfile):
            return NotImplemented
        return self.idle_power == other.idle_power and np.array_equal(
            self.active_power, other.active_power
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Instance:
    """A complete planning problem.

    ``rtt_model`` switches on the additive ``rtt/2`` latency per one-way
    transfer; with it off the transfer times are plain ``d / R``.
    """

    graph: AppGraph
    device: DeviceProfile
    radios: tuple
    t_req: float
    pinned_local: frozenset = None
    rtt_model: bool = False
    name: str = ""
    synthetic_fields: tuple = ()

    def __post_init__(self):
        radios = tuple(self.radios)
        if len(radios) < 1:
            raise ValidationError("radios.count", "need at least one radio interface")
        for r in radios:
            if not isinstance(r, RadioInterface):
                raise ValidationError("radios.type", f"expected RadioInterface, got {type(r).__name__}")
        m = self.graph.m
        if self.device.active_power.shape != (m,):
            raise ValidationError(
                "device.shape", f"active_power has {self.device.active_power.shape[0]} entries, graph has {m}"
            )
        t_req = float(self.t_req)
        if math.isnan(t_req) or t_req <= 0:
            raise ValidationError("t_req.positive", f"deadline must be > 0, got {t_req}")
        pinned = {0, m - 1} if self.pinned_local is None else set(self.pinned_local)
        for p in pinned:
            if not isinstance(p, (int, np.integer)) or not 0 <= p < m:
                raise ValidationError("pinned_local.range", f"index {p!r} outside 0..{m - 1}")
        object.__setattr__(self, "radios", radios)
        object.__setattr__(self, "t_req", t_req)
        object.__setattr__(self, "pinned_local", frozenset(int(p) for p in pinned))
        object.__setattr__(self, "rtt_model", bool(self.rtt_model))
        object.__setattr__(self, "synthetic_fields", tuple(self.synthetic_fields))

    @property
    def m(self) -> int:
        return self.graph.m

    @property
    def k(self) -> int:
        return len(self.radios)

    @property
    def pinned_mask(self) -> np.ndarray:
        mask = np.zeros(self.m, dtype=bool)
        mask[list(self.pinned_local)] = True
        return mask

    def with_(self, **changes) -> "Instance":
        return replace(self, **changes)

    def with_radio(self, k: int, **changes) -> "Instance":
        radios = list(self.radios)
        radios[k] = replace(radios[k], **changes)
        return replace(self, radios=tuple(radios))

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.graph == other.graph
            and self.device == other.device
            and self.radios == other.radios
            and self.t_req == other.t_req
            and self.pinned_local == other.pinned_local
            and self.rtt_model == other.rtt_model
            and self.name == other.name
            and self.synthetic_fields == other.synthetic_fields
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class OffloadPlan:
    """Placement (1 = cloud), uplink split fractions and downlink radio choice."""

    placement: np.ndarray  # (M,) int
    split: np.ndarray  # (M, K) float
    receive: np.ndarray  # (M, K) int

    def __post_init__(self):
        placement = np.array(self.placement, dtype=np.int64)
        split = np.array(self.split, dtype=float)
        receive = np.array(self.receive, dtype=np.int64)
        if placement.ndim != 1 or split.ndim != 2 or receive.ndim != 2:
            raise ValueError("placement must be 1-d, split and receive 2-d")
        if split.shape != receive.shape or split.shape[0] != placement.shape[0]:
            raise ValueError(
                f"inconsistent shapes: placement {placement.shape}, split {split.shape}, receive {receive.shape}"
            )
        for arr in (placement, split, receive):
            arr.setflags(write=False)
        object.__setattr__(self, "placement", placement)
        object.__setattr__(self, "split", split)
        object.__setattr__(self, "receive", receive)

    @property
    def m(self) -> int:
        return int(self.placement.shape[0])

    @property
    def k(self) -> int:
        return int(self.split.shape[1])

    def with_(self, **changes) -> "OffloadPlan":
        return replace(self, **changes)

    def bitstring(self) -> str:
        return "".join(str(int(b)) for b in self.placement)

    def to_dict(self) -> dict:
        return {
            "placement": self.placement.tolist(),
            "split": self.split.tolist(),
            "receive": self.receive.tolist(),
        }

    def __eq__(self, other):
        if not isinstance(other, OffloadPlan):
            return NotImplemented
        return (
            np.array_equal(self.placement, other.placement)
            and np.array_equal(self.split, other.split)
            and np.array_equal(self.receive, other.receive)
        )

    __hash__ = None

    @classmethod
    def local(cls, inst: Instance, receive: Optional[np.ndarray] = None) -> "OffloadPlan":
        """Everything on the device, no uplink traffic."""
        if receive is None:
            receive = np.zeros((inst.m, inst.k), dtype=np.int64)
            receive[:, fastest_downlink(inst.radios)] = 1
        return cls(np.zeros(inst.m, dtype=np.int64), np.zeros((inst.m, inst.k)), receive)


def fastest_downlink(radios: Sequence[RadioInterface]) -> int:
    rates = [r.downlink_rate for r in radios]
    return int(np.argmax(rates))  # argmax returns the first maximum


def upload_mask(inst: Instance, placement: np.ndarray) -> np.ndarray:
    """(M, M) mask of edges i->j with i on the device and j in the cloud."""
    p = np.asarray(placement)
    return inst.graph.alpha * np.outer(1 - p, p)


# ---------------------------------------------------------------------------
# Plan validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    constraint: str  # pinned | placement | receive | split | allocation | rate | deadline
    index: Optional[int]
    detail: str

    def __str__(self):
        where = "" if self.index is None else f"[{self.index}]"
        return f"{self.constraint}{where}: {self.detail}"


def validate_plan(inst: Instance, plan: OffloadPlan) -> list[Violation]:
    """List every constraint the plan breaks; empty means feasible."""
    from .energymodel import plan_costs

    if plan.placement.shape != (inst.m,) or plan.split.shape != (inst.m, inst.k):
        raise ValueError(
            f"plan dimensions {plan.split.shape} do not match instance ({inst.m}, {inst.k})"
        )
    out: list[Violation] = []
    p = plan.placement
    bad = np.flatnonzero((p != 0) & (p != 1))
    for i in bad:
        out.append(Violation("placement", int(i), f"I = {p[i]} is not binary"))
    if bad.size:
        return out
    for i in sorted(inst.pinned_local):
        if p[i] != 0:
            out.append(Violation("pinned", i, "pinned component placed in the cloud"))

    g = plan.receive
    rows = np.flatnonzero(~np.all((g == 0) | (g == 1), axis=1) | (g.sum(axis=1) != 1))
    for i in rows:
        out.append(Violation("receive", int(i), f"receive row {g[i].tolist()} must be one-hot"))

    nu = plan.split
    for i in np.flatnonzero(np.any((nu < -SPLIT_TOL) | (nu > 1 + SPLIT_TOL) | ~np.isfinite(nu), axis=1)):
        out.append(Violation("split", int(i), f"split row {nu[i].tolist()} outside [0, 1]"))

    uploads = upload_mask(inst, p).sum(axis=1) > 0
    sums = nu.sum(axis=1)
    for i in range(inst.m):
        if uploads[i] and abs(sums[i] - 1.0) > SPLIT_TOL:
            out.append(Violation("allocation", i, f"uploading component splits {sums[i]:.6g} of its data, need 1"))
        elif not uploads[i] and sums[i] > 1.0 + SPLIT_TOL:
            out.append(Violation("allocation", i, f"split row sums to {sums[i]:.6g} > 1"))

    costs = plan_costs(inst, plan)
    for k, radio in enumerate(inst.radios):
        cap = radio.uplink_rate * (1.0 - RATE_MARGIN)
        if costs.uplink_load[k] > cap:
            out.append(
                Violation("rate", k, f"uplink load {costs.uplink_load[k]:.6g} b/s exceeds service rate {radio.uplink_rate:.6g}")
            )
    if costs.time > inst.t_req + DEADLINE_TOL * max(1.0, inst.t_req if math.isfinite(inst.t_req) else 1.0):
        out.append(Violation("deadline", None, f"total time {costs.time:.6g} s exceeds T_req {inst.t_req:.6g} s"))
    return out


# ---------------------------------------------------------------------------
# JSON ingestion
# ---------------------------------------------------------------------------

UNITS = {
    "time": {"s": Fraction(1), "ms": Fraction(1, 1000), "us": Fraction(1, 10**6)},
    "power": {"W": Fraction(1), "mW": Fraction(1, 1000)},
    "rate": {"bps": Fraction(1), "kbps": Fraction(1000), "Mbps": Fraction(10**6)},
    "data": {"bit": Fraction(1), "kbit": Fraction(1000), "Mbit": Fraction(10**6), "byte": Fraction(8), "kB": Fraction(8000), "MB": Fraction(8 * 10**6)},
}
SI_UNITS = {"time": "s", "power": "W", "rate": "bps", "data": "bit"}


def _scale(values, factor: Fraction):
    arr = np.asarray(values, dtype=float)
    if factor.denominator == 1:
        return arr * factor.numerator
    return arr * factor.numerator / factor.denominator


def _unit_factors(units: dict) -> dict:
    factors = {}
    for quantity, table in UNITS.items():
        name = units.get(quantity, SI_UNITS[quantity])
        if name not in table:
            raise ValidationError(f"units.{quantity}", f"unknown unit {name!r}; allowed {sorted(table)}")
        factors[quantity] = table[name]
    extra = set(units) - set(UNITS)
    if extra:
        raise ValidationError("units.keys", f"unknown unit keys {sorted(extra)}")
    return factors


def _require(d: dict, key: str, where: str):
    if not isinstance(d, dict) or key not in d:
        raise ValidationError(f"{where}.{key}", "missing required key")
    return d[key]


def instance_from_dict(doc: dict) -> Instance:
    if not isinstance(doc, dict):
        raise ParseError("top level must be a JSON object")
    f = _unit_factors(doc.get("units", {}))
    g = _require(doc, "graph", "instance")
    graph = AppGraph(
        alpha=_require(g, "alpha", "graph"),
        data=_scale(_require(g, "data", "graph"), f["data"]),
        local_time=_scale(_require(g, "local_time", "graph"), f["time"]),
        cloud_time=_scale(_require(g, "cloud_time", "graph"), f["time"]),
    )
    dv = _require(doc, "device", "instance")
    device = DeviceProfile(
        active_power=_scale(_require(dv, "active_power", "device"), f["power"]),
        idle_power=float(_scale(_require(dv, "idle_power", "device"), f["power"])),
    )
    radios = []
    for n, r in enumerate(_require(doc, "radios", "instance")):
        where = f"radios[{n}]"
        radios.append(
            RadioInterface(
                uplink_rate=float(_scale(_require(r, "uplink_rate", where), f["rate"])),
                downlink_rate=float(_scale(_require(r, "downlink_rate", where), f["rate"])),
                tx_power=float(_scale(_require(r, "tx_power", where), f["power"])),
                rx_power=float(_scale(_require(r, "rx_power", where), f["power"])),
                demand_rate=float(_scale(_require(r, "demand_rate", where), f["rate"])),
                rtt=float(_scale(r.get("rtt", 0.0), f["time"])),
                name=str(r.get("name", "")),
            )
        )
    pinned = doc.get("pinned_local")
    return Instance(
        graph=graph,
        device=device,
        radios=tuple(radios),
        t_req=float(_scale(_require(doc, "t_req", "instance"), f["time"])),
        pinned_local=None if pinned is None else frozenset(int(p) for p in pinned),
        rtt_model=bool(doc.get("rtt_model", False)),
        name=str(doc.get("name", "")),
        synthetic_fields=tuple(doc.get("synthetic_fields", ())),
    )


def loads_instance(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc}") from None
    return instance_from_dict(doc)


def load_instance(path, format: str = "json") -> Instance:
    if format != "json":
        raise ParseError(f"unsupported format {format!r}")
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    try:
        return loads_instance(text)
    except ValidationError as exc:
        raise ValidationError(exc.invariant, f"{path}: {exc.message}") from None
    except ParseError as exc:
        raise ParseError(f"{path}: {exc}") from None


def instance_to_dict(inst: Instance) -> dict:
    """Serialize in SI units (round-trips exactly through ``instance_from_dict``)."""
    return {
        "name": inst.name,
        "units": dict(SI_UNITS),
        "graph": {
            "alpha": inst.graph.alpha.astype(int).tolist(),
            "data": inst.graph.data.tolist(),
            "local_time": inst.graph.local_time.tolist(),
            "cloud_time": inst.graph.cloud_time.tolist(),
        },
        "device": {
            "active_power": inst.device.active_power.tolist(),
            "idle_power": inst.device.idle_power,
        },
        "radios": [
            {
                "name": r.name,
                "uplink_rate": r.uplink_rate,
                "downlink_rate": r.downlink_rate,
                "tx_power": r.tx_power,
                "rx_power": r.rx_power,
                "demand_rate": r.demand_rate,
                "rtt": r.rtt,
            }
            for r in inst.radios
        ],
        "t_req": inst.t_req,
        "pinned_local": sorted(inst.pinned_local),
        "rtt_model": inst.rtt_model,
        "synthetic_fields": list(inst.synthetic_fields),
    }


def dump_instance(inst: Instance, path=None, indent: int = 2) -> str:
    text = json.dumps(instance_to_dict(inst), indent=indent)
    if path is not None:
        Path(path).write_text(text + "\n", encoding="utf-8")
    return text


def bundled_instance_path(name: str = "paper14") -> Path:
    return Path(__file__).parent / "data" / f"{name}.json"


# ---------------------------------------------------------------------------
# Random instances
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SynthRanges:
    """Sampling ranges for synthetic instances, SI units, ``(min, max)`` pairs."""

    local_time: tuple = (0.03, 0.9)
    cloud_speedup: tuple = (5.0, 5.0)
    data_bits: tuple = (1e5, 2e6)
    uplink_rate: tuple = (0.8e6, 2.96e6)
    downlink_rate: tuple = (1.76e6, 4e6)
    tx_power: tuple = (0.3, 0.6)
    rx_power: tuple = (0.1, 0.25)
    active_power: tuple = (0.6449, 0.6449)
    idle_power: float = 0.022
    rtt: tuple = (0.04, 0.2)
    demand_mean: float = 1.5e6
    packet_bits: float = 12000.0
    extra_edge_prob: float = 0.15
    deadline_factor: float = 1.0

    def __post_init__(self):
        for name in ("local_time", "cloud_speedup", "data_bits", "uplink_rate", "downlink_rate",
                     "tx_power", "rx_power", "active_power", "rtt"):
            lo, hi = getattr(self, name)
            if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
                raise ValueError(f"invalid range for {name}: min {lo} > max {hi}")
            if lo < 0:
                raise ValueError(f"invalid range for {name}: negative bound {lo}")
        if self.cloud_speedup[0] <= 0:
            raise ValueError("cloud_speedup must be positive")
        if self.active_power[0] <= self.idle_power:
            raise ValueError("active_power range must lie above idle_power")
        if not 0.0 <= self.extra_edge_prob <= 1.0:
            raise ValueError("extra_edge_prob must lie in [0, 1]")
        if self.demand_mean <= 0 or self.packet_bits <= 0 or self.deadline_factor <= 0:
            raise ValueError("demand_mean, packet_bits and deadline_factor must be positive")


def _uniform(rng: np.random.Generator, bounds, size=None):
    lo, hi = bounds
    return rng.uniform(lo, hi, size=size)


def _demand(rng: np.random.Generator, ranges: SynthRanges, k: int) -> np.ndarray:
    # Poisson count of packets per second, at least one packet.
    packets = rng.poisson(ranges.demand_mean / ranges.packet_bits, size=k)
    return np.maximum(packets, 1) * ranges.packet_bits


def _random_edges(rng: np.random.Generator, m: int, p: float) -> np.ndarray:
    alpha = np.zeros((m, m))
    alpha[np.arange(m - 1), np.arange(1, m)] = 1.0
    extra = np.triu(rng.random((m, m)) < p, k=2)
    alpha[extra] = 1.0
    return alpha


def synthesize_instance(m: int, k: int, seed: int, ranges: Optional[SynthRanges] = None) -> Instance:
    """Random instance: a chain plus random forward edges, first and last pinned local."""
    if m < 2 or k < 1:
        raise ValueError(f"need m >= 2 and k >= 1, got m={m}, k={k}")
    ranges = ranges or SynthRanges()
    rng = np.random.default_rng(seed)
    alpha = _random_edges(rng, m, ranges.extra_edge_prob)
    data = alpha * _uniform(rng, ranges.data_bits, (m, m))
    local = _uniform(rng, ranges.local_time, m)
    cloud = local / _uniform(rng, ranges.cloud_speedup, m)
    demand = _demand(rng, ranges, k)
    radios = tuple(
        RadioInterface(
            uplink_rate=float(_uniform(rng, ranges.uplink_rate)),
            downlink_rate=float(_uniform(rng, ranges.downlink_rate)),
            tx_power=float(_uniform(rng, ranges.tx_power)),
            rx_power=float(_uniform(rng, ranges.rx_power)),
            demand_rate=float(demand[n]),
            rtt=float(_uniform(rng, ranges.rtt)),
            name=f"radio{n}",
        )
        for n in range(k)
    )
    device = DeviceProfile(_uniform(rng, ranges.active_power, m), ranges.idle_power)
    return Instance(
        graph=AppGraph(alpha, data, local, cloud),
        device=device,
        radios=radios,
        t_req=ranges.deadline_factor * float(local.sum()),
        name=f"synth-m{m}-k{k}-s{seed}",
        synthetic_fields=("graph", "device", "radios"),
    )


def resample_unpublished(template: Instance, seed: int, ranges: Optional[SynthRanges] = None,
                         redraw_edges: bool = False) -> Instance:
    """Redraw the quantities the measurements did not publish.

    Keeps the template's device powers, radio rates/powers, local times and
    deadline; redraws edge data sizes, cloud times and per-radio demand
    rates (and the extra forward edges when ``redraw_edges``).
    """
    ranges = ranges or SynthRanges()
    rng = np.random.default_rng(seed)
    m = template.m
    alpha = _random_edges(rng, m, ranges.extra_edge_prob) if redraw_edges else template.graph.alpha
    data = alpha * _uniform(rng, ranges.data_bits, (m, m))
    local = template.graph.local_time
    cloud = local / _uniform(rng, ranges.cloud_speedup, m)
    demand = _demand(rng, ranges, template.k)
    radios = tuple(replace(r, demand_rate=float(demand[n])) for n, r in enumerate(template.radios))
    base = template.name or "instance"
    return replace(
        template,
        graph=AppGraph(alpha, data, local, cloud),
        radios=radios,
        name=f"{base}-s{seed}",
    )
