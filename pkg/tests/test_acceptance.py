"""Acceptance suite: one test per gate criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion lines
stream; the whole suite takes a few minutes on one desktop core, dominated by the
exhaustive injection sweeps (criteria 1-2) and the 10^4-sample SRAM experiment
(criterion 3).
"""

import os

import numpy as np
import pytest

from conftest import acceptance_program, gen_random_program, run_functional, run_reference

from tmrv32.kernel import EDGE_ALIGNED, MID_CYCLE, Kernel, SystemConfig
from tmrv32.power import PowerModel
from tmrv32.scrubber import worst_case_correction_cycles
from tmrv32.seu import (
    CampaignConfig,
    FaultSpec,
    counter_crosscheck,
    exhaustive_toy_scrub_latency,
    run_campaign,
    scrub_latency_samples,
)
from tmrv32.tmr import Domain


def _report(criterion, description, ok):
    print(f"ACCEPTANCE {criterion} {'PASS' if ok else 'FAIL'}: {description}")
    assert ok, f"criterion {criterion}: {description}"


def _sweep_targets(kernel):
    targets = []
    for domain in (Domain.CORE, Domain.PERIPHERALS):
        for eid in kernel.cells_in_domain(domain):
            for bit in range(kernel.registry[eid].width):
                targets.append((eid, bit))
    return targets


@pytest.fixture(scope="module")
def sweep_context():
    image = acceptance_program().assemble()
    system = SystemConfig(image=image)
    golden = Kernel(system)
    golden.run()
    window = golden.cycle - 25
    targets = _sweep_targets(Kernel(system))
    return system, targets, window


def _run_sweep(system, targets, window, phase):
    faults = [
        FaultSpec(
            at_cycle=5 + (7 * i) % window,
            kind="cell",
            key=eid,
            replica=i % 3,
            bit=bit,
            phase=phase,
        )
        for i, (eid, bit) in enumerate(targets)
    ]
    return run_campaign(CampaignConfig(system=system, faults=faults, seed=1))


@pytest.fixture(scope="module")
def midcycle_sweep(sweep_context):
    system, targets, window = sweep_context
    return _run_sweep(system, targets, window, MID_CYCLE)


@pytest.fixture(scope="module")
def edge_sweep(sweep_context):
    system, targets, window = sweep_context
    return _run_sweep(system, targets, window, EDGE_ALIGNED)


@pytest.fixture(scope="module")
def double_fault_report():
    system = SystemConfig(image=acceptance_program().assemble())
    faults = [FaultSpec(at_cycle=25, kind="cell", key="core.x6", replica=0, bit=9, count=2)]
    return run_campaign(CampaignConfig(system=system, faults=faults, seed=3))


@pytest.fixture(scope="module")
def sram_kernel_campaign():
    # full-kernel SRAM injections (scrubber running alongside the program)
    system = SystemConfig(image=acceptance_program().assemble())
    rng = np.random.default_rng(17)
    faults = [
        FaultSpec(
            at_cycle=int(rng.integers(0, 4000)),
            kind="sram",
            key=int(rng.integers(0, 8192)),
            replica=int(rng.integers(3)),
            bit=int(rng.integers(32)),
        )
        for _ in range(50)
    ]
    return run_campaign(
        CampaignConfig(system=system, faults=faults, run_cycles=14000, seed=21)
    )


def test_criterion_1_exhaustive_midcycle_core_and_periph(midcycle_sweep, sweep_context):
    _, targets, _ = sweep_context
    records = midcycle_sweep.records
    n = len(records)
    corrected = [r for r in records if r["correction_latency_cycles"] is not None]
    ok = (
        n == len(targets)
        and len(corrected) == n
        and all(r["correction_latency_cycles"] <= 1 for r in records)
        and all(r["detected"] for r in records)
        and not any(r["uncorrectable"] for r in records)
        and not any(r["diverged"] for r in records)
    )
    _report(
        1,
        f"exhaustive mid-cycle sweep over {n} core+peripheral bits: "
        "100% corrected, latency <= 1 cycle, zero architectural divergence",
        ok,
    )


def test_criterion_2_exhaustive_edge_aligned(edge_sweep, sweep_context):
    _, targets, _ = sweep_context
    records = edge_sweep.records
    n = len(records)
    ok = (
        n == len(targets)
        and all(r["correction_latency_cycles"] is not None for r in records)
        and all(r["correction_latency_cycles"] <= 2 for r in records)
        and not any(r["diverged"] for r in records)
    )
    _report(
        2,
        f"exhaustive edge-aligned sweep over {n} bits: 100% corrected, "
        "latency <= 2 cycles, zero divergence",
        ok,
    )


def test_criterion_3_sram_correction_bound():
    rows = 8192
    samples = 10_000
    latencies = scrub_latency_samples(rows=rows, samples=samples, seed=2026)
    bound_cycles = 16_000  # 320 us at 50 MHz
    analytic = worst_case_correction_cycles(rows)  # 8193
    toy = exhaustive_toy_scrub_latency(rows=16)
    toy_ok = all(m == e for _, _, m, e in toy) and max(m for _, _, m, _ in toy) == 17
    ok = (
        len(latencies) == samples
        and max(latencies) <= bound_cycles
        and max(latencies) == analytic
        and toy_ok
    )
    us = max(latencies) / 50.0
    _report(
        3,
        f"{samples} seeded SRAM upsets: worst latency {max(latencies)} cycles "
        f"({us:.2f} us at 50 MHz) <= 16000; analytic bound {analytic} confirmed "
        "by the maximum; 16-row toy exhaustive over all timings",
        ok,
    )


def test_criterion_4_double_fault_demonstration(double_fault_report):
    rec = double_fault_report.records[0]
    ok = rec["uncorrectable"] and rec["detected"] and rec["diverged"]
    _report(
        4,
        "same-bit two-replica injection flagged uncorrectable with golden-run divergence",
        ok,
    )


def test_criterion_5_counter_consistency(
    midcycle_sweep, edge_sweep, double_fault_report, sram_kernel_campaign
):
    checks = {
        "mid-cycle sweep": counter_crosscheck(midcycle_sweep),
        "edge-aligned sweep": counter_crosscheck(edge_sweep),
        "double fault": counter_crosscheck(double_fault_report),
        "sram campaign": counter_crosscheck(sram_kernel_campaign),
    }
    sram_ok = (
        sram_kernel_campaign.summary["uncorrectable"] == 0
        and sram_kernel_campaign.summary["diverged"] == 0
    )
    ok = all(checks.values()) and sram_ok
    _report(
        5,
        "SEU counters equal distinct detected discrepancy events on every campaign "
        f"({', '.join(k for k, v in checks.items() if v)})",
        ok,
    )


def test_criterion_6_power_calibration_closure():
    model = PowerModel()
    closure = model.calibration_closure()
    totals_ok = all(
        abs(got - expected) / expected < 0.01 for got, expected in closure.values()
    )
    leakage_ok = model.estimate_power(0.0, "mixed", False).total_mw == pytest.approx(0.110)
    lo, hi = model.calibration["quoted_system_slope_band_uw_per_mhz"]
    slope = model.system_slope_uw_per_mhz("mixed", scrub_enabled=False)
    slope_ok = lo <= slope <= hi
    delta = (
        model.estimate_power(50.0, "mixed", True).sram_mw
        - model.estimate_power(50.0, "mixed", False).sram_mw
    )
    delta_ok = abs(delta - 5.14) / 5.14 < 0.01
    ok = totals_ok and leakage_ok and slope_ok and delta_ok
    _report(
        6,
        f"all six scenario totals within 1%; 0.110 mW intercept; mixed slope "
        f"{slope:.1f} uW/MHz in [{lo:.0f}, {hi:.0f}]; scrub delta {delta:.2f} mW",
        ok,
    )


def test_criterion_7_isa_differential_10k():
    rng = np.random.default_rng(777)
    n = 10_000
    for i in range(n):
        image = gen_random_program(rng, n=24)
        regs_a, mem_a, reason_a = run_functional(image)
        regs_b, mem_b, reason_b = run_reference(image)
        if not (regs_a == regs_b and mem_a == mem_b and reason_a == reason_b):
            _report(7, f"program {i} diverged from the reference interpreter", False)
    _report(7, f"{n} random bounded programs match the oracle interpreter exactly", True)


def test_criterion_8_campaign_determinism():
    system = SystemConfig(image=acceptance_program().assemble())
    faults = [FaultSpec(at_cycle=10 + i, kind="random", key="core") for i in range(100)]
    config = CampaignConfig(system=system, faults=faults, seed=4242)
    first = run_campaign(config).to_jsonl().encode()
    second = run_campaign(config).to_jsonl().encode()
    lat_a = scrub_latency_samples(rows=256, samples=500, seed=9)
    lat_b = scrub_latency_samples(rows=256, samples=500, seed=9)
    ok = first == second and lat_a == lat_b
    _report(8, "identical config+seed reproduces byte-identical report records", ok)


@pytest.mark.skipif(
    "DHRYSTONE_ELF" not in os.environ,
    reason="stretch criterion: needs a cross-compiled Dhrystone 2.1 ELF "
    "(set DHRYSTONE_ELF and DHRYSTONE_ITERS); no RISC-V libc toolchain ships "
    "with this environment",
)
def test_criterion_9_dhrystone_stretch():
    image = os.environ["DHRYSTONE_ELF"]
    iterations = int(os.environ.get("DHRYSTONE_ITERS", "2000"))
    kernel = Kernel(SystemConfig(image=image, max_cycles=500_000_000))
    kernel.run()
    dmips_per_mhz = iterations * 1e6 / (kernel.cycle * 1757.0)
    ok = abs(dmips_per_mhz - 0.628) / 0.628 <= 0.15
    _report(
        9,
        f"Dhrystone 2.1: {dmips_per_mhz:.3f} DMIPS/MHz vs 0.628 reference (+-15%)",
        ok,
    )
