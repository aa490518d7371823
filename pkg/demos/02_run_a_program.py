"""Assemble a bare-metal program, run it cycle by cycle, read the timing report.

The toolkit's encoder builds images without a cross-compiler; ELF32 executables
load the same way (pass a path instead of bytes). UART output is captured with
cycle stamps, and the run result carries the pipeline's stall accounting.
"""

from tmrv32 import Kernel, SystemConfig
from tmrv32 import encode as E

# Sum the words 1..20 into x5, store the result, and print "=" then halt.
p = E.Program()
p.emit(E.addi(1, 0, 20))           # n
p.emit(E.addi(5, 0, 0))            # acc
p.label("loop")
p.emit(E.add(5, 5, 1))
p.emit(E.addi(1, 1, -1))
p.branch(E.bne, 1, 0, "loop")
p.emit(E.lui(2, 0x4))              # scratch memory at 0x4000
p.emit(E.sw(5, 2, 0))
p.emit(E.lui(10, 0x10001))         # UART block
p.emit(E.addi(11, 0, ord("=")))
p.emit(E.sw(11, 10, 0))            # transmit
p.emit(E.ebreak())

kernel = Kernel(SystemConfig(image=p.assemble(), freq_mhz=50.0))
result = kernel.run()

print(f"halted by {result.halt} after {result.cycles} cycles, {result.retired} instructions")
print(f"x5 = {kernel.arch.read_reg(5)} (expect {sum(range(1, 21))})")
print(f"word at 0x4000 = {kernel.bus.read(0x4000, 4)}")
print(f"UART transmitted {kernel.uart.tx_bytes()!r} (cycle-stamped: {kernel.uart.tx_log})")
print()
print("cycle accounting: total = retired + fetch stalls + branch bubbles + fill")
print(
    f"  {result.cycles} = {result.retired} + {result.fetch_stalls}"
    f" + {result.branch_bubbles} + {result.fill_cycles}"
)
print(f"cycles with a data-bus access (power activity mix): {result.dmem_cycles}")
us = result.cycles / kernel.config.freq_mhz
print(f"at {kernel.config.freq_mhz:.0f} MHz this run represents {us:.2f} us of silicon time")
