"""Inject single-event upsets into the running core and watch them heal.

Every sequential element is a voted triple, so a single upset is masked
immediately and repaired by the feedback path: within one cycle when the hit
lands between clock edges, within two when it aligns with an edge. A campaign
automates this: each fault runs in a fresh simulation, is classified against a
fault-free golden run, and lands in a machine-readable record.
"""

from tmrv32.kernel import EDGE_ALIGNED, SystemConfig
from tmrv32 import encode as E
from tmrv32.seu import CampaignConfig, FaultSpec, counter_crosscheck, run_campaign

p = E.Program()
p.emit(E.addi(1, 0, 1))
p.emit(E.addi(2, 0, 50))
p.label("loop")
p.emit(E.add(3, 3, 1))
p.emit(E.mul(4, 3, 3))
p.emit(E.addi(2, 2, -1))
p.branch(E.bne, 2, 0, "loop")
p.emit(E.ebreak())
system = SystemConfig(image=p.assemble())

faults = [
    # targeted: a live register, the pc, a pipeline latch; both timing flavors
    FaultSpec(at_cycle=30, kind="cell", key="core.x3", replica=1, bit=7),
    FaultSpec(at_cycle=31, kind="cell", key="core.pc", replica=2, bit=2),
    FaultSpec(at_cycle=40, kind="cell", key="core.fetch_raw", replica=0, bit=19),
    FaultSpec(at_cycle=55, kind="cell", key="core.x3", replica=0, bit=7, phase=EDGE_ALIGNED),
]
# plus a seed-driven random batch across the whole core domain
faults += [FaultSpec(at_cycle=20 + 2 * i, kind="random", key="core") for i in range(40)]

report = run_campaign(CampaignConfig(system=system, faults=faults, seed=11))

print(f"{report.summary['faults']} injections, "
      f"{report.summary['corrected']} corrected, "
      f"{report.summary['diverged']} architectural divergences")
print(f"latency histogram (cycles -> count): {report.latency_histogram()}")
print(f"counters match the distinct detected events: {counter_crosscheck(report)}")
print()
print("first four records:")
for rec in report.records[:4]:
    print(
        f"  {rec['phase']:>12} {rec['target']:<16} bit {rec['bit']:>2} "
        f"detected={rec['detected']} latency={rec['correction_latency_cycles']}"
    )
print()
print("golden-run signature the campaign compared against:")
print(f"  pc=0x{report.golden['pc']:08x} retired={report.golden['retired']} "
      f"cycles={report.golden['cycles']}")
