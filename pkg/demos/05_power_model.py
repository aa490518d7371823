"""Power and energy from the silicon-calibrated linear model.

Three activity classes were measured at 50 MHz with the refresh engine on and
off; the model reproduces those six totals exactly, keeps the 110 uW leakage as
the 0 MHz intercept, and charges the scrubber 102.8 uW/MHz on the SRAM domain.
Energy for a simulated run blends the register- and SRAM-centered classes by
the measured cycle mix.
"""

from tmrv32 import Kernel, SystemConfig
from tmrv32 import encode as E
from tmrv32.power import PowerModel, power_table

model = PowerModel()

print("== calibration closure (model vs measured totals, mW at 50 MHz) ==")
for (scenario, scrub), (got, expected) in sorted(model.calibration_closure().items()):
    tag = "refresh on " if scrub else "refresh off"
    print(f"  {scenario:<9} {tag}: model {got:6.2f}  measured {expected:6.2f}")

print()
print("== frequency sweep, mixed workload (plot-ready rows) ==")
for row in power_table(model, [1, 10, 25, 50], "mixed", scrub_enabled=True):
    print(f"  {row['freq_mhz']:>4.0f} MHz: core {row['core_mw']:5.2f}  sram {row['sram_mw']:6.2f}"
          f"  periph {row['periph_mw']:5.2f}  leak {row['leakage_mw']:.3f}"
          f"  total {row['total_mw']:6.2f} mW")
intercept = model.estimate_power(0.0, "mixed", scrub_enabled=False).total_mw
print(f"  0 MHz intercept = {intercept:.3f} mW (leakage only)")

print()
print("== what does disabling the scrubber buy? ==")
on = model.estimate_power(50, "mixed", True).total_mw
off = model.estimate_power(50, "mixed", False).total_mw
print(f"  50 MHz mixed: {on:.2f} mW with refresh, {off:.2f} mW without "
      f"(delta {on - off:.2f} mW, all in the SRAM domain)")

print()
print("== energy of an actual simulated run ==")
p = E.Program()
p.emit(E.lui(2, 0x4))
p.emit(E.addi(1, 0, 200))
p.label("loop")
p.emit(E.sw(1, 2, 0))      # memory-heavy loop: half the cycles hit the data bus
p.emit(E.lw(3, 2, 0))
p.emit(E.addi(1, 1, -1))
p.branch(E.bne, 1, 0, "loop")
p.emit(E.ebreak())
kernel = Kernel(SystemConfig(image=p.assemble()))
kernel.run()
mix = kernel.activity_cycles()
energy = model.estimate_energy(mix, freq_mhz=50.0, scrub_enabled=True)
print(f"  cycle mix {mix} -> {energy * 1e6:.2f} nJ at 50 MHz")
pure_r = model.estimate_energy({"register": kernel.cycle}, 50.0)
pure_s = model.estimate_energy({"sram": kernel.cycle}, 50.0)
print(f"  bounded by the pure classes: register-only {pure_r * 1e6:.2f} nJ, "
      f"sram-only {pure_s * 1e6:.2f} nJ")
