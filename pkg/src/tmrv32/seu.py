"""Deterministic fault injection: targeted or stochastic upsets, campaigns, reports.

Two injection timing flavors model where an upset lands relative to the clock:

* ``mid-cycle``: the flip happens between edges; the voter masks it immediately and
  the feedback path repairs the replicas at the next edge (latency 1 cycle).
* ``edge-aligned``: the pulse coincides with the edge that closes the scheduled
  cycle, so the corrupted value is latched and survives one full cycle before the
  following edge repairs it (latency 2 cycles).

SRAM rows have no feedback path, so their injections are phase-independent; a row
is repaired when the scrubber writes it back or the core overwrites it. SRAM
correction latency is counted inclusively, from the injection cycle through the
repair cycle, so the analytic single-upset worst case is rows + 1 scrub steps.

Campaigns run either ``isolated`` (one fresh simulation per fault, classified
against a shared fault-free golden run) or ``accumulate`` (all faults into one run,
for upset-accumulation experiments). Everything is deterministic given the seed;
reports serialize to byte-stable JSON lines.
"""

import dataclasses
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .kernel import EDGE_ALIGNED, MID_CYCLE, Kernel, SystemConfig
from .memory import SramArray
from .scrubber import Scrubber, worst_case_correction_cycles
from .tmr import DOMAIN_NAMES, Domain

_DOMAIN_BY_NAME = {name: dom for dom, name in DOMAIN_NAMES.items()}


@dataclass
class FaultSpec:
    """One injection: where (explicit element/row, or random within a domain),
    when, with which clock-edge relationship, and how many same-bit flips.

    ``count`` > 1 flips the same bit position in ``count`` consecutive replicas
    starting at ``replica`` - the instance-group double-fault construction.
    Random targets (``kind="random"``, ``key`` = domain name) are resolved from
    the campaign seed before the run starts.
    """

    at_cycle: int
    kind: str  # "cell" | "sram" | "random"
    key: object = None  # element id, SRAM row, or domain name for "random"
    replica: int | None = 0
    bit: int | None = 0
    phase: str = MID_CYCLE
    count: int = 1

    def validate(self):
        if self.at_cycle < 0:
            raise ConfigError("at_cycle must be non-negative")
        if self.kind not in ("cell", "sram", "random"):
            raise ConfigError(f"unknown fault kind {self.kind!r}")
        if self.kind == "random" and self.key not in _DOMAIN_BY_NAME:
            raise ConfigError(f"random fault domain must be one of {sorted(_DOMAIN_BY_NAME)}")
        if self.phase not in (MID_CYCLE, EDGE_ALIGNED):
            raise ConfigError(f"unknown fault phase {self.phase!r}")
        if not 1 <= self.count <= 3:
            raise ConfigError("count must be 1..3 (flips within one instance group)")


@dataclass
class CampaignConfig:
    """A fault campaign: the system to run, the upsets to inject, and the mode."""

    system: SystemConfig
    faults: list = field(default_factory=list)
    rates: dict | None = None  # domain name -> expected upsets per cycle (Poisson)
    run_cycles: int | None = None  # fixed run length; default: run to program halt
    mode: str = "isolated"  # or "accumulate"
    golden_compare: bool = True
    seed: int = 0
    edge_aligned_fraction: float = 0.0  # phase mix for randomly resolved cell faults

    def validate(self):
        if self.mode not in ("isolated", "accumulate"):
            raise ConfigError(f"unknown campaign mode {self.mode!r}")
        if self.rates:
            if self.mode != "accumulate":
                raise ConfigError("rate-model campaigns require accumulate mode")
            if self.run_cycles is None:
                raise ConfigError("rate-model campaigns require run_cycles")
            for name, rate in self.rates.items():
                if name not in _DOMAIN_BY_NAME:
                    raise ConfigError(f"unknown rate domain {name!r}")
                if rate < 0:
                    raise ConfigError("rates must be non-negative")
        if not 0.0 <= self.edge_aligned_fraction <= 1.0:
            raise ConfigError("edge_aligned_fraction must be within [0, 1]")
        for spec in self.faults:
            spec.validate()

    def to_dict(self):
        return {
            "version": 1,
            "system": self.system.to_dict(),
            "faults": [dataclasses.asdict(f) for f in self.faults],
            "rates": self.rates,
            "run_cycles": self.run_cycles,
            "mode": self.mode,
            "golden_compare": self.golden_compare,
            "seed": self.seed,
            "edge_aligned_fraction": self.edge_aligned_fraction,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        version = d.pop("version", 1)
        if version != 1:
            raise ConfigError(f"unsupported campaign config version {version}")
        d["system"] = SystemConfig.from_dict(d["system"])
        d["faults"] = [FaultSpec(**f) for f in d.get("faults", [])]
        cfg = cls(**d)
        cfg.validate()
        return cfg


@dataclass
class ResolvedFault:
    """A fault with every random choice pinned down."""

    index: int
    at_cycle: int
    kind: str  # "cell" | "sram"
    key: object
    domain: Domain
    replica: int
    bit: int
    phase: str
    count: int


class _TargetMonitor:
    """Watches one injection target: vote change at flip time, replica re-equality."""

    def __init__(self, kernel, fault):
        self.kernel = kernel
        self.fault = fault
        self.landing = fault.at_cycle + (1 if fault.phase == EDGE_ALIGNED else 0)
        self.vote_changed = False
        self.flips_seen = 0
        self.requal_cycle = None
        if fault.kind == "cell":
            self.cell = kernel.registry[fault.key]
        else:
            self.cell = None

    def observe_flip(self, kind, key, vote_before, vote_after):
        if kind == self.fault.kind and key == self.fault.key:
            self.flips_seen += 1
            if vote_after != vote_before:
                self.vote_changed = True

    def on_cycle(self, kernel):
        if self.requal_cycle is not None:
            return
        completed = kernel.cycle - 1
        if completed < self.landing:
            return
        if self.cell is not None:
            equal = not self.cell.discrepancy
        else:
            a, b, c = kernel.sram.scrub_read(self.fault.key)
            equal = a == b == c
        if equal:
            self.requal_cycle = completed

    def latency(self):
        """Correction latency per the domain's counting convention, or None."""
        if self.requal_cycle is None or self.vote_changed:
            return None
        if self.fault.kind == "sram":
            return self.requal_cycle - self.fault.at_cycle + 1
        return self.requal_cycle - self.fault.at_cycle


def resolve_faults(config, registry_kernel, rng):
    """Pin down every random target choice; deterministic given the seed."""
    resolved = []
    domain_cells = {
        dom: registry_kernel.cells_in_domain(dom)
        for dom in (Domain.CORE, Domain.PERIPHERALS, Domain.SRAM)
    }
    specs = list(config.faults)
    if config.rates:
        specs += _poisson_specs(config, rng)
    for index, spec in enumerate(specs):
        spec.validate()
        if spec.kind == "random":
            domain = _DOMAIN_BY_NAME[spec.key]
            if domain == Domain.SRAM:
                kind = "sram"
                key = int(rng.integers(registry_kernel.sram.rows))
                width = 32
                dom = Domain.SRAM
            else:
                kind = "cell"
                cells = domain_cells[domain]
                key = cells[int(rng.integers(len(cells)))]
                width = registry_kernel.registry[key].width
                dom = domain
            replica = int(rng.integers(3))
            bit = int(rng.integers(width))
            if kind == "sram":
                phase = MID_CYCLE
            elif spec.phase != MID_CYCLE:
                phase = spec.phase
            elif config.edge_aligned_fraction and rng.random() < config.edge_aligned_fraction:
                phase = EDGE_ALIGNED
            else:
                phase = MID_CYCLE
        else:
            kind = spec.kind
            key = spec.key
            if kind == "cell":
                if key not in registry_kernel.registry:
                    raise ConfigError(f"no such element {key!r}")
                cell = registry_kernel.registry[key]
                width = cell.width
                dom = cell.domain
            else:
                if not 0 <= key < registry_kernel.sram.rows:
                    raise ConfigError(f"SRAM row {key} out of range")
                width = 32
                dom = Domain.SRAM
            replica = int(rng.integers(3)) if spec.replica is None else spec.replica
            bit = int(rng.integers(width)) if spec.bit is None else spec.bit
            phase = spec.phase
            if not 0 <= bit < width:
                raise ConfigError(f"bit {bit} out of range for {key!r} (width {width})")
        resolved.append(
            ResolvedFault(
                index=index,
                at_cycle=spec.at_cycle,
                kind=kind,
                key=key,
                domain=dom,
                replica=replica,
                bit=bit,
                phase=phase,
                count=spec.count,
            )
        )
    return resolved


def _poisson_specs(config, rng):
    """Expand a per-domain rate model into random FaultSpecs (arrival times first)."""
    specs = []
    horizon = config.run_cycles
    for name in ("core", "sram", "periph"):
        rate = config.rates.get(name, 0.0)
        if rate <= 0:
            continue
        n = int(rng.poisson(rate * horizon))
        cycles = sorted(int(c) for c in rng.integers(0, horizon, n))
        for c in cycles:
            specs.append(FaultSpec(at_cycle=c, kind="random", key=name))
    return specs


def _schedule(kernel, fault):
    for i in range(fault.count):
        kernel.schedule_flip(
            fault.at_cycle, fault.kind, fault.key, (fault.replica + i) % 3, fault.bit,
            phase=fault.phase,
        )


def _record(fault, monitor, detected, diverged, run):
    latency = monitor.latency()
    return {
        "index": fault.index,
        "kind": fault.kind,
        "target": fault.key,
        "domain": DOMAIN_NAMES[fault.domain],
        "replica": fault.replica,
        "bit": fault.bit,
        "count": fault.count,
        "phase": fault.phase,
        "at_cycle": fault.at_cycle,
        "detected": detected,
        "correction_latency_cycles": latency,
        "uncorrectable": monitor.vote_changed,
        "diverged": diverged,
        "counters": list(run.counters),
        "event_totals": run.event_totals,
    }


@dataclass
class _RunOutcome:
    counters: tuple
    event_totals: dict


@dataclass
class CampaignReport:
    config: CampaignConfig
    golden: dict | None
    records: list
    summary: dict

    def to_jsonl(self):
        lines = [json.dumps(r, sort_keys=True) for r in self.records]
        return "\n".join(lines) + ("\n" if lines else "")

    @staticmethod
    def records_from_jsonl(text):
        return [json.loads(line) for line in text.splitlines() if line.strip()]

    def latency_histogram(self):
        hist = {}
        for r in self.records:
            lat = r["correction_latency_cycles"]
            if lat is not None:
                hist[lat] = hist.get(lat, 0) + 1
        return dict(sorted(hist.items()))


def _detected(event_log, fault):
    key = fault.key
    dom = int(fault.domain)
    for cycle, domain, element in event_log:
        if cycle >= fault.at_cycle and domain == dom and element == key:
            return True
    return False


def _run_one(system, length, faults):
    kernel = Kernel(system)
    monitors = []
    for fault in faults:
        _schedule(kernel, fault)
        monitor = _TargetMonitor(kernel, fault)
        monitors.append(monitor)
        kernel.cycle_hooks.append(monitor.on_cycle)

    observers = monitors
    original_do_flip = kernel._do_flip

    def observing_do_flip(kind, key, replica, bit):
        if kind == "cell":
            before = kernel.registry[key].value
        else:
            a, b, c = kernel.sram.scrub_read(key)
            before = (a & b) | (a & c) | (b & c)
        original_do_flip(kind, key, replica, bit)
        if kind == "cell":
            after = kernel.registry[key].value
        else:
            a, b, c = kernel.sram.scrub_read(key)
            after = (a & b) | (a & c) | (b & c)
        for obs in observers:
            obs.observe_flip(kind, key, before, after)

    kernel._do_flip = observing_do_flip
    if length is not None:
        kernel.run_cycles(length)
    else:
        kernel.run()
    return kernel, monitors


def run_campaign(config):
    """Execute a fault campaign; deterministic given the config (incl. seed)."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    system = dataclasses.replace(config.system, record_events=True)

    registry_kernel = Kernel(system)
    resolved = resolve_faults(config, registry_kernel, rng)
    for fault in resolved:
        if fault.kind == "cell":
            width = registry_kernel.registry[fault.key].width
            if not 0 <= fault.bit < width:
                raise ConfigError(f"bit {fault.bit} out of range for {fault.key!r}")

    golden_sig = None
    length = config.run_cycles
    if config.golden_compare:
        golden_kernel = Kernel(system)
        if length is not None:
            golden_kernel.run_cycles(length)
        else:
            golden_kernel.run()
        golden_sig = golden_kernel.architectural_signature()

    records = []
    if config.mode == "isolated":
        for fault in resolved:
            kernel, monitors = _run_one(system, length, [fault])
            monitor = monitors[0]
            diverged = None
            if golden_sig is not None:
                diverged = kernel.architectural_signature() != golden_sig
            outcome = _RunOutcome(kernel.counters.values(), _totals_dict(kernel))
            detected = _detected(kernel.event_log, fault)
            records.append(_record(fault, monitor, detected, diverged, outcome))
    else:
        kernel, monitors = _run_one(system, length, resolved)
        diverged = None
        if golden_sig is not None:
            diverged = kernel.architectural_signature() != golden_sig
        outcome = _RunOutcome(kernel.counters.values(), _totals_dict(kernel))
        for fault, monitor in zip(resolved, monitors):
            detected = _detected(kernel.event_log, fault)
            records.append(_record(fault, monitor, detected, None, outcome))
        records_diverged = diverged
    summary = _summarize(records, config)
    if config.mode == "accumulate" and config.golden_compare:
        summary["run_diverged"] = records_diverged
    report = CampaignReport(config=config, golden=golden_sig, records=records, summary=summary)
    return report


def _totals_dict(kernel):
    return {DOMAIN_NAMES[d]: n for d, n in kernel.event_totals.items()}


def _summarize(records, config):
    corrected = [r for r in records if r["correction_latency_cycles"] is not None]
    latencies = [r["correction_latency_cycles"] for r in corrected]
    summary = {
        "mode": config.mode,
        "seed": config.seed,
        "faults": len(records),
        "detected": sum(1 for r in records if r["detected"]),
        "corrected": len(corrected),
        "uncorrectable": sum(1 for r in records if r["uncorrectable"]),
        "diverged": sum(1 for r in records if r.get("diverged")),
        "max_latency_cycles": max(latencies) if latencies else None,
        "mean_latency_cycles": (sum(latencies) / len(latencies)) if latencies else None,
    }
    return summary


def counter_crosscheck(report):
    """True iff, for every run in the campaign, each domain's memory-mapped counter
    equals the number of distinct detected discrepancy events for that domain."""
    sat = 0xFFFFFFFF
    checked = set()
    for rec in report.records:
        key = json.dumps(rec["event_totals"], sort_keys=True) + repr(rec["counters"])
        if report.config.mode == "accumulate" and key in checked:
            continue
        checked.add(key)
        counters = rec["counters"]
        totals = rec["event_totals"]
        expected = [min(totals["core"], sat), min(totals["sram"], sat), min(totals["periph"], sat)]
        if list(counters) != expected:
            return False
    return True


# ---------------------------------------------------------------------------
# standalone SRAM scrub-latency experiments (no core activity)
# ---------------------------------------------------------------------------


def scrub_latency_samples(rows=8192, samples=10_000, seed=0, stratified=True):
    """Measure single-upset correction latencies against the real scrubber FSM.

    One continuous simulation; each sample injects one bit flip into a clean row at
    a known phase offset from the scan pointer and steps the FSM until the row is
    written back, counting cycles inclusively. With ``stratified`` sampling the
    first ``min(rows, samples)`` offsets form a seeded random permutation of all
    phase offsets (so the worst case is realized); the rest are uniform.
    """
    rng = np.random.default_rng(seed)
    sram = SramArray(rows)
    scrub = Scrubber(rows)
    if stratified and samples >= rows:
        offsets = list(rng.permutation(rows))
        offsets += list(rng.integers(0, rows, samples - rows))
    else:
        offsets = list(rng.integers(0, rows, samples))
    replicas = rng.integers(0, 3, samples)
    bits = rng.integers(0, 32, samples)

    latencies = []
    step = scrub.step
    for i in range(samples):
        offset = int(offsets[i])
        row = (scrub.row_ptr.value + offset) % rows
        sram.flip(row, int(replicas[i]), int(bits[i]))
        elapsed = 0
        while True:
            elapsed += 1
            if step(sram, None) == row:
                break
            if elapsed > rows + 2:
                raise AssertionError("scrubber failed to correct within its bound")
        latencies.append(elapsed)
    return latencies


def exhaustive_toy_scrub_latency(rows=16):
    """Every (phase offset, row) on a toy memory: measured latency vs. the analytic FSM count.

    Returns a list of (offset, row, measured, expected) with expected = offset + 2,
    all bounded by ``worst_case_correction_cycles(rows)``.
    """
    out = []
    for offset in range(rows):
        for row0 in range(rows):
            sram = SramArray(rows)
            scrub = Scrubber(rows)
            # advance the scan so the pointer sits at row0
            for _ in range(row0):
                scrub.step(sram, None)
            row = (row0 + offset) % rows
            sram.flip(row, 1, 7)
            elapsed = 0
            while True:
                elapsed += 1
                if scrub.step(sram, None) == row:
                    break
                if elapsed > rows + 2:
                    raise AssertionError("toy scrub failed to correct within its bound")
            out.append((offset, row, elapsed, offset + 2))
    assert all(m <= worst_case_correction_cycles(rows) for _, _, m, _ in out)
    return out
