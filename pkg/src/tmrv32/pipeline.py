"""Cycle-accurate timing overlay: 3-stage in-order pipeline with bridge arbitration.

Stages are fetch (F), decode/execute (X), and writeback (W). Two latch groups carry
state between them, all TMR cells: the fetch latch (valid, pc, raw encoding) and the
writeback latch (valid, rd, value). One instruction occupies each stage per cycle.

Timing model and its free parameters:

* The instruction and data buses share one SRAM port through the memory bridge;
  data accesses have strict priority, so a load or store in X stalls F for exactly
  one cycle. SRAM access itself is single-cycle.
* Control transfers (taken branches and all jumps) resolve in X and squash the
  fetch latch: one bubble cycle. Fetch is suppressed on the transfer cycle itself,
  since whatever F fetched would be squashed at the same edge anyway.
* MUL/DIV are single-cycle, and fetch pays no alignment penalty for 32-bit
  instructions straddling row boundaries. Real cores spend extra cycles on both,
  so benchmark figures calibrated against silicon carry a tolerance band.

Register commits flow through the writeback latch: an instruction's destination
write lands one edge after it executes. W runs before X within an edge, which
models a register file that writes in the first half-cycle and reads in the
second, so back-to-back dependent instructions never stall.

Accounting identity, asserted in tests: total cycles = retired instructions +
fetch-stall cycles + branch bubbles + fill cycles.
"""

from .errors import IllegalInstruction
from .isa import M32, decode, execute, extend_load
from .tmr import Domain, TmrCell


class Pipeline:
    def __init__(self):
        self.fl_valid = TmrCell("core.fetch_valid", Domain.CORE, 1, 0)
        self.fl_pc = TmrCell("core.fetch_pc", Domain.CORE, 32, 0)
        self.fl_raw = TmrCell("core.fetch_raw", Domain.CORE, 32, 0)
        self.wl_valid = TmrCell("core.wb_valid", Domain.CORE, 1, 0)
        self.wl_rd = TmrCell("core.wb_rd", Domain.CORE, 5, 0)
        self.wl_value = TmrCell("core.wb_value", Domain.CORE, 32, 0)
        self.retired = 0
        self.fetch_stalls = 0
        self.branch_bubbles = 0
        self.fill_cycles = 0
        self.dmem_cycles = 0  # cycles with an active data access (power activity mix)
        self._idle_cause = "fill"  # what an X-idle cycle is charged to

    def cells(self):
        yield self.fl_valid
        yield self.fl_pc
        yield self.fl_raw
        yield self.wl_valid
        yield self.wl_rd
        yield self.wl_value

    def advance(self, arch, bus, retire_sink=None):
        """Simulate one clock edge plus the cycle it opens.

        Returns a halt reason string when the instruction executed this cycle
        halts the machine, else None. Bus faults and illegal instructions
        propagate as exceptions for the kernel's diagnostics.
        """
        # W: commit the writeback latch to the register file.
        if self.wl_valid.value:
            arch.write_reg(self.wl_rd.value, self.wl_value.value)

        # X: consume the fetch latch.
        halt = None
        dmem_busy = False
        redirect = None
        new_wl = None
        if self.fl_valid.value:
            pc = self.fl_pc.value
            try:
                ins = decode(self.fl_raw.value)
            except IllegalInstruction as e:
                raise IllegalInstruction(e.raw, pc) from None
            res = execute(arch, ins, pc)
            if res.memreq is not None:
                req = res.memreq
                dmem_busy = True
                self.dmem_cycles += 1
                if req.kind == "load":
                    data = bus.read(req.addr, req.width)
                    new_wl = (ins.rd, extend_load(ins, data))
                else:
                    bus.write(req.addr, req.data, req.width)
            if res.rd_write is not None:
                new_wl = res.rd_write
            if res.control_transfer:
                redirect = res.next_pc
            halt = res.halt
            self.retired += 1
            arch.retired += 1
            if retire_sink is not None:
                retire_sink(pc, ins)
        else:
            if self._idle_cause == "stall":
                self.fetch_stalls += 1
            elif self._idle_cause == "branch":
                self.branch_bubbles += 1
            else:
                self.fill_cycles += 1

        if new_wl is not None:
            self.wl_valid.write(1)
            self.wl_rd.write(new_wl[0])
            self.wl_value.write(new_wl[1])
        else:
            self.wl_valid.write(0)
            self.wl_rd.write(0)
            self.wl_value.write(0)

        # F: fetch unless the data bus owns the SRAM port or X transferred control.
        if redirect is not None:
            self.fl_valid.write(0)
            self.fl_pc.write(0)
            self.fl_raw.write(0)
            arch.pc.write(redirect)
            self._idle_cause = "branch"
        elif dmem_busy or halt is not None:
            self.fl_valid.write(0)
            self.fl_pc.write(0)
            self.fl_raw.write(0)
            self._idle_cause = "stall" if dmem_busy else "fill"
        else:
            pc = arch.pc.value
            raw = bus.fetch_window(pc)
            length = 4 if raw & 3 == 3 else 2
            self.fl_valid.write(1)
            self.fl_pc.write(pc)
            self.fl_raw.write(raw if length == 4 else raw & 0xFFFF)
            arch.pc.write((pc + length) & M32)
            self._idle_cause = "fill"
        return halt


def cycles_for_program(image, entry=0, max_cycles=1_000_000, **config_overrides):
    """Run ``image`` to its halt and return (retired_instructions, cycles).

    Convenience wrapper for benchmark-style accounting; accepts any
    :class:`~tmrv32.kernel.SystemConfig` field as a keyword override.
    """
    from .kernel import Kernel, SystemConfig

    cfg = SystemConfig(image=image, entry_pc=entry, max_cycles=max_cycles, **config_overrides)
    kernel = Kernel(cfg)
    kernel.run()
    return kernel.pipeline.retired, kernel.cycle
