"""Scenario harness: all-local, all-remote, exhaustive and iterative runs.

Each repetition redraws the unpublished quantities of the base instance
(edge data sizes, cloud times, demand rates) from ``seed + rep``; powers,
radio rates and local times stay fixed. Every (repetition, sweep point,
scenario) becomes one CSV row.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .energymodel import plan_costs
from .exact_solver import baseline_local, baseline_remote, exhaustive_solve
from .iterative_solver import IterativeConfig, solve
from .profile import (
    Instance,
    OffloadPlan,
    ProfileError,
    bundled_instance_path,
    load_instance,
    resample_unpublished,
    synthesize_instance,
    validate_plan,
)

__all__ = ["RunSpec", "ResultRow", "build_parser", "main", "run", "sweep_deadline", "wifi_share"]

SCENARIOS = ("local", "remote", "exhaustive", "iterative")


@dataclass(frozen=True)
class RunSpec:
    """One harness invocation. Times are seconds, RTTs seconds."""

    instance_path: Optional[str] = None
    synth: Optional[tuple] = None  # (m, k)
    scenarios: tuple = SCENARIOS
    t_req: Optional[float] = None  # None keeps the instance deadline
    t_req_sweep: Optional[tuple] = None  # (min, max, steps)
    rtt_sweep: Optional[tuple] = None  # (radio, min, max, steps)
    repetitions: int = 100
    seed: int = 0
    output_path: Optional[str] = None
    phi_outside_sum: bool = False
    rtt_model: Optional[bool] = None  # None: on for RTT sweeps, else as in the instance
    workers: int = 1

    def __post_init__(self):
        if self.instance_path is not None and self.synth is not None:
            raise ValueError("give either an instance path or a synth spec, not both")
        if self.repetitions < 1:
            raise ValueError(f"repetitions must be >= 1, got {self.repetitions}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        unknown = set(self.scenarios) - set(SCENARIOS)
        if unknown or not self.scenarios:
            raise ValueError(f"unknown scenarios {sorted(unknown)}; choose from {', '.join(SCENARIOS)}")
        if self.t_req is not None and self.t_req_sweep is not None:
            raise ValueError("give either t_req or t_req_sweep, not both")
        if self.t_req is not None and not self.t_req > 0:
            raise ValueError(f"t_req must be > 0, got {self.t_req}")
        if self.t_req_sweep is not None:
            lo, hi, n = self.t_req_sweep
            _check_sweep(lo, hi, n, "t_req sweep")
            if lo <= 0:
                raise ValueError("t_req sweep must stay above 0")
        if self.rtt_sweep is not None:
            _, lo, hi, n = self.rtt_sweep
            _check_sweep(lo, hi, n, "rtt sweep")
            if lo < 0:
                raise ValueError("rtt sweep must stay >= 0")

    def deadlines(self, inst: Instance) -> list:
        if self.t_req_sweep is not None:
            lo, hi, n = self.t_req_sweep
            return [float(v) for v in np.linspace(lo, hi, n)]
        return [self.t_req if self.t_req is not None else inst.t_req]

    def rtt_points(self) -> list:
        """``(radio, rtt)`` per sweep point, or ``[None]`` without a sweep."""
        if self.rtt_sweep is None:
            return [None]
        radio, lo, hi, n = self.rtt_sweep
        return [(int(radio), float(v)) for v in np.linspace(lo, hi, n)]


def _check_sweep(lo, hi, n, what):
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError(f"{what} bounds must be finite")
    if lo > hi:
        raise ValueError(f"{what} bounds out of order: {lo} > {hi}")
    if n < 2:
        raise ValueError(f"{what} needs at least 2 points, got {n}")


@dataclass(frozen=True)
class ResultRow:
    scenario: str
    seed: int
    t_req: float
    rtt_s: tuple  # one entry per radio
    energy_J: float
    normalized_energy: float
    time_s: float
    feasible: bool
    wifi_share: float  # NaN when nothing is uploaded
    iterations: int  # outer steps (iterative) or placements scored (exhaustive)

    @classmethod
    def header(cls) -> list:
        return [f.name for f in fields(cls)]

    def to_csv(self) -> list:
        d = asdict(self)
        d["rtt_s"] = ";".join(repr(float(v)) for v in self.rtt_s)
        d["feasible"] = "true" if self.feasible else "false"
        return [d[name] if isinstance(d[name], str) else repr(d[name]) for name in self.header()]

    @classmethod
    def from_csv(cls, record: dict) -> "ResultRow":
        return cls(
            scenario=record["scenario"],
            seed=int(record["seed"]),
            t_req=float(record["t_req"]),
            rtt_s=tuple(float(v) for v in record["rtt_s"].split(";")),
            energy_J=float(record["energy_J"]),
            normalized_energy=float(record["normalized_energy"]),
            time_s=float(record["time_s"]),
            feasible=record["feasible"] == "true",
            wifi_share=float(record["wifi_share"]),
            iterations=int(record["iterations"]),
        )


def wifi_share(inst: Instance, plan: OffloadPlan, radio: int = 0) -> float:
    """Fraction of uploaded bits carried by ``radio``; NaN without uploads."""
    I = plan.placement
    bits = (inst.graph.alpha * inst.graph.data * np.outer(1 - I, I)).sum(axis=1)
    total = float(bits.sum())
    if total <= 0:
        return math.nan
    return float(bits @ plan.split[:, radio]) / total


def _base_instance(spec: RunSpec) -> Instance:
    if spec.synth is not None:
        m, k = spec.synth
        return synthesize_instance(int(m), int(k), spec.seed)
    path = spec.instance_path or bundled_instance_path()
    return load_instance(path)


def _evaluate(inst: Instance, scenario: str, cfg: IterativeConfig):
    """``(plan or None, iterations)`` for one scenario."""
    if scenario == "local":
        return baseline_local(inst), 0
    if scenario == "remote":
        return baseline_remote(inst), 0
    if scenario == "exhaustive":
        res = exhaustive_solve(inst)
        return res.best_plan, res.evaluated
    rep = solve(inst, cfg)
    return rep.plan, rep.outer_iters


def _rows_for_rep(args) -> list:
    spec, base, rep = args
    seed = spec.seed + rep
    drawn = resample_unpublished(base, seed)
    cfg = IterativeConfig(phi_outside_sum=spec.phi_outside_sum)
    rows = []
    for point in spec.rtt_points():
        inst = drawn
        if point is not None:
            inst = inst.with_radio(point[0], rtt=point[1])
        rtt_on = spec.rtt_model if spec.rtt_model is not None else (point is not None or inst.rtt_model)
        inst = inst.with_(rtt_model=rtt_on)
        rtts = tuple(r.rtt for r in inst.radios)
        for t_req in spec.deadlines(inst):
            inst_t = inst.with_(t_req=t_req)
            local_energy = plan_costs(inst_t, baseline_local(inst_t)).energy
            for scenario in spec.scenarios:
                plan, iters = _evaluate(inst_t, scenario, cfg)
                if plan is None:
                    rows.append(ResultRow(scenario, seed, t_req, rtts, math.nan, math.nan, math.nan, False,
                                          math.nan, iters))
                    continue
                costs = plan_costs(inst_t, plan)
                normalized = 1.0 if scenario == "local" else costs.energy / local_energy
                rows.append(ResultRow(
                    scenario=scenario,
                    seed=seed,
                    t_req=t_req,
                    rtt_s=rtts,
                    energy_J=costs.energy,
                    normalized_energy=normalized,
                    time_s=costs.time,
                    feasible=not validate_plan(inst_t, plan),
                    wifi_share=wifi_share(inst_t, plan),
                    iterations=iters,
                ))
    return rows


def run(spec: RunSpec, out=None) -> list:
    """Run every repetition and return rows in (seed, sweep point, scenario) order.

    Writes the CSV to ``spec.output_path`` when set, and a summary to ``out``
    (standard output by default; pass ``False`` to suppress it).
    """
    base = _base_instance(spec)
    jobs = [(spec, base, rep) for rep in range(spec.repetitions)]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            chunks = list(pool.map(_rows_for_rep, jobs))
    else:
        chunks = [_rows_for_rep(job) for job in jobs]
    rows = [row for chunk in chunks for row in chunk]
    if spec.output_path:
        write_rows(rows, spec.output_path)
    if out is not False:
        print_summary(rows, out or sys.stdout)
    return rows


def sweep_deadline(spec: RunSpec, out=None) -> list:
    """Deadline sweep; rows come out ordered by ``t_req`` within each repetition."""
    if spec.t_req_sweep is None:
        raise ValueError("sweep_deadline needs a t_req sweep")
    return run(spec, out)


def write_rows(rows: Sequence[ResultRow], path) -> None:
    path = Path(path)
    try:
        fh = path.open("w", newline="", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from None
    with fh:
        writer = csv.writer(fh)
        writer.writerow(ResultRow.header())
        writer.writerows(row.to_csv() for row in rows)


def read_rows(path) -> list:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return [ResultRow.from_csv(rec) for rec in csv.DictReader(fh)]


def iterative_gap(rows: Sequence[ResultRow]) -> tuple:
    """Mean relative energy excess of iterative over exhaustive, and the pair count.

    Only cases where both solvers returned a feasible plan are paired.
    """
    exact = {(r.seed, r.t_req, r.rtt_s): r for r in rows if r.scenario == "exhaustive" and r.feasible}
    gaps = [
        r.energy_J / exact[key].energy_J - 1.0
        for r in rows
        if r.scenario == "iterative" and r.feasible and (key := (r.seed, r.t_req, r.rtt_s)) in exact
    ]
    return (float(np.mean(gaps)) if gaps else math.nan), len(gaps)


def _mean(values) -> float:
    """Mean of the finite values, NaN when there are none."""
    vals = [v for v in values if math.isfinite(v)]
    return float(np.mean(vals)) if vals else math.nan


def print_summary(rows: Sequence[ResultRow], out) -> None:
    print(f"{'scenario':<12}{'rows':>6}{'feasible':>10}{'norm_energy':>13}{'time_s':>9}{'wifi_share':>12}", file=out)
    for scenario in SCENARIOS:
        sel = [r for r in rows if r.scenario == scenario]
        if not sel:
            continue
        energy = _mean(r.normalized_energy for r in sel)
        time = _mean(r.time_s for r in sel)
        share = _mean(r.wifi_share for r in sel)
        feasible = sum(r.feasible for r in sel)
        print(f"{scenario:<12}{len(sel):>6}{feasible:>10}{energy:>13.4f}{time:>9.3f}{share:>12.3f}", file=out)
    points = list(dict.fromkeys((r.t_req, r.rtt_s) for r in rows))
    if len(points) > 1:
        rtt_txts = {rtt: ";".join(f"{v:g}" for v in rtt) for _, rtt in points}
        w = max(len("rtt_s"), *map(len, rtt_txts.values())) + 2
        print(f"\n{'t_req':>8}  {'rtt_s':<{w}}{'scenario':<12}{'feasible':>9}{'norm_energy':>13}{'wifi_share':>12}",
              file=out)
        for t_req, rtt in points:
            for scenario in SCENARIOS:
                sel = [r for r in rows if r.scenario == scenario and r.t_req == t_req and r.rtt_s == rtt]
                if not sel:
                    continue
                energy = _mean(r.normalized_energy for r in sel)
                share = _mean(r.wifi_share for r in sel)
                feasible = sum(r.feasible for r in sel)
                print(f"{t_req:>8.3f}  {rtt_txts[rtt]:<{w}}{scenario:<12}{feasible:>9}{energy:>13.4f}{share:>12.3f}",
                      file=out)
    gap, n = iterative_gap(rows)
    if n:
        print(f"iterative vs exhaustive energy gap: {100 * gap:.2f}% over {n} feasible pairs", file=out)


def _floats(text: str, count: int, what: str) -> list:
    parts = text.split(":")
    if len(parts) != count:
        raise argparse.ArgumentTypeError(f"{what} expects {count} ':'-separated fields, got {text!r}")
    return parts


def _t_req_sweep(text: str) -> tuple:
    lo, hi, n = _floats(text, 3, "--t-req-sweep")
    try:
        return float(lo), float(hi), int(n)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad --t-req-sweep {text!r}") from None


def _rtt_sweep(text: str) -> tuple:
    radio, lo, hi, n = _floats(text, 4, "--rtt-sweep")
    try:
        return int(radio), float(lo), float(hi), int(n)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad --rtt-sweep {text!r}") from None


def _synth(text: str) -> tuple:
    try:
        m, k = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"--synth expects M,K, got {text!r}") from None
    return m, k


def _scenarios(text: str) -> tuple:
    names = tuple(s.strip() for s in text.split(",") if s.strip())
    bad = [s for s in names if s not in SCENARIOS]
    if bad or not names:
        raise argparse.ArgumentTypeError(f"unknown scenario(s) {bad}; choose from {','.join(SCENARIOS)}")
    return names


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="mroffload",
        description="Compare all-local, all-remote, exhaustive and iterative offloading plans.",
    )
    src = p.add_mutually_exclusive_group()
    src.add_argument("--instance", metavar="PATH", help="instance JSON (default: bundled paper14)")
    src.add_argument("--synth", metavar="M,K", type=_synth, help="synthesize a base instance instead")
    p.add_argument("--scenarios", type=_scenarios, default=SCENARIOS, metavar="LIST",
                   help="comma-separated subset of local,remote,exhaustive,iterative")
    dl = p.add_mutually_exclusive_group()
    dl.add_argument("--t-req", type=float, metavar="SECONDS", help="deadline (default: the instance's)")
    dl.add_argument("--t-req-sweep", type=_t_req_sweep, metavar="MIN:MAX:STEPS")
    p.add_argument("--rtt-sweep", type=_rtt_sweep, metavar="RADIO:MIN:MAX:STEPS",
                   help="sweep one radio's RTT in seconds; turns the RTT model on unless --rtt-model off")
    p.add_argument("--reps", type=int, default=100, help="repetitions (default 100)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", metavar="PATH", help="CSV output path")
    p.add_argument("--phi-outside-sum", action="store_true",
                   help="add the allocation multiplier once per split cost instead of once per summand")
    p.add_argument("--rtt-model", choices=("on", "off"), help="additive rtt/2 latency per transfer")
    p.add_argument("--workers", type=int, default=1, help="worker processes for repetitions")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        spec = RunSpec(
            instance_path=args.instance,
            synth=args.synth,
            scenarios=args.scenarios,
            t_req=args.t_req,
            t_req_sweep=args.t_req_sweep,
            rtt_sweep=args.rtt_sweep,
            repetitions=args.reps,
            seed=args.seed,
            output_path=args.out,
            phi_outside_sum=args.phi_outside_sum,
            rtt_model=None if args.rtt_model is None else args.rtt_model == "on",
            workers=args.workers,
        )
        if args.rtt_sweep is not None:
            radio = args.rtt_sweep[0]
            base_k = _base_instance(spec).k
            if not 0 <= radio < base_k:
                raise ValueError(f"--rtt-sweep radio {radio} out of range 0..{base_k - 1}")
        run(spec)
    except (ProfileError, ValueError, OSError) as exc:
        parser.exit(2, f"mroffload: error: {exc}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
