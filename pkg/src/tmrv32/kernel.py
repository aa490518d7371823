"""Simulation kernel: cycle loop, phase ordering, reset, image loading, snapshots.

Each simulated cycle runs a fixed phase order, which is what makes the two fault
timing flavors and the scrubber's conflict rule well defined:

1. clock edge: counter increments computed last cycle land; dirty cells latch their
   voted value through the feedback path; the pipeline advances (latch writes); any
   edge-aligned flips queued last cycle corrupt the freshly latched state;
2. fault application: mid-cycle flips due this cycle land; edge-aligned flips due
   this cycle are queued for the next edge;
3. voting: every discrepant cell contributes one event for this cycle;
4. scrubber: one FSM step (subject to the cadence divider), including its
   write-conflict check against the row the core stored to this cycle;
5. counter aggregation: this cycle's events, deduplicated per element, become the
   per-domain increments that land at the next edge.

A mid-cycle flip is therefore discrepant for exactly one voting phase and is clean
again in the following cycle (latency 1); an edge-aligned flip lands one edge later
and is clean two cycles after its scheduled cycle (latency 2).

One kernel instance is one single-threaded simulation; instances share nothing, so
campaigns may run many in parallel.
"""

import hashlib
import json
import struct
from array import array
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, SimTimeout
from .isa import ArchState
from .memory import (
    GPIO_BASE,
    PERIPH_BLOCK_SIZE,
    SEU_COUNTER_BASE,
    SRAM_BASE,
    SRAM_SIZE,
    UART_BASE,
    SramArray,
    SystemBus,
)
from .peripherals import GpioBank, SeuCounterBank, UartModel, aggregate_discrepancies
from .pipeline import Pipeline
from .scrubber import Scrubber
from .tmr import Domain

SNAPSHOT_MAGIC = b"TMRV32SS"
SNAPSHOT_VERSION = 1

MID_CYCLE = "mid-cycle"
EDGE_ALIGNED = "edge-aligned"


@dataclass
class SystemConfig:
    """Everything a run needs; identical configs give identical runs."""

    image: bytes | str | None = None  # raw binary bytes, or a path to .bin / ELF
    image_base: int = 0
    entry_pc: int | None = None  # default: ELF entry point, else image_base
    freq_mhz: float = 50.0
    scrub_enabled: bool = True
    scrub_divider: int = 1
    max_cycles: int = 1_000_000
    stimulus: tuple = ()  # (("uart-rx", cycle, byte) | ("gpio-in", cycle, pin, level), ...)
    record_events: bool = False  # keep the discrepancy event log for reports

    def __post_init__(self):
        if self.freq_mhz <= 0:
            raise ConfigError("clock frequency must be positive")
        if self.scrub_divider < 1:
            raise ConfigError("scrub_divider must be >= 1")
        if self.max_cycles < 1:
            raise ConfigError("max_cycles must be >= 1")

    def to_dict(self, include_image=True):
        d = {
            "image_base": self.image_base,
            "entry_pc": self.entry_pc,
            "freq_mhz": self.freq_mhz,
            "scrub_enabled": self.scrub_enabled,
            "scrub_divider": self.scrub_divider,
            "max_cycles": self.max_cycles,
            "stimulus": [list(e) for e in self.stimulus],
        }
        if include_image:
            if isinstance(self.image, bytes):
                d["image_hex"] = self.image.hex()
            else:
                d["image"] = self.image
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "image_hex" in d:
            d["image"] = bytes.fromhex(d.pop("image_hex"))
        d["stimulus"] = tuple(tuple(e) for e in d.get("stimulus", ()))
        return cls(**d)


@dataclass
class RunResult:
    halt: str | None
    cycles: int
    retired: int
    counters: tuple
    fetch_stalls: int = 0
    branch_bubbles: int = 0
    fill_cycles: int = 0
    dmem_cycles: int = 0


def load_image(data, base=0):
    """Parse a program image into ((address, bytes), ...) segments plus an entry pc.

    ``data`` may be raw little-endian bytes placed at ``base``, a path to such a
    file, or an ELF32 executable whose loadable segments are extracted and placed
    at their physical addresses.
    """
    if isinstance(data, (str, Path)):
        data = Path(data).read_bytes()
    if data[:4] == b"\x7fELF":
        return _load_elf32(data)
    return ((base, bytes(data)),), base


def _load_elf32(blob):
    # EI_CLASS must be ELFCLASS32, EI_DATA little-endian, machine RISC-V (243).
    if len(blob) < 52:
        raise ConfigError("truncated ELF header")
    if blob[4] != 1 or blob[5] != 1:
        raise ConfigError("image must be a 32-bit little-endian ELF")
    (e_type, e_machine, _v, e_entry, e_phoff, _shoff, _flags, _ehsize, e_phentsize, e_phnum) = (
        struct.unpack_from("<HHIIIIIHHH", blob, 16)
    )
    if e_machine != 243:
        raise ConfigError(f"unsupported ELF machine {e_machine} (need RISC-V)")
    if e_phentsize != 32:
        raise ConfigError("unexpected ELF program header size")
    segments = []
    for i in range(e_phnum):
        (p_type, p_offset, _vaddr, p_paddr, p_filesz, p_memsz, _pflags, _align) = (
            struct.unpack_from("<IIIIIIII", blob, e_phoff + 32 * i)
        )
        if p_type != 1 or p_memsz == 0:  # PT_LOAD only
            continue
        payload = blob[p_offset : p_offset + p_filesz]
        if len(payload) != p_filesz:
            raise ConfigError("ELF segment data extends past end of file")
        segments.append((p_paddr, payload + bytes(p_memsz - p_filesz)))
    if not segments:
        raise ConfigError("ELF contains no loadable segments")
    return tuple(segments), e_entry


def parse_stimulus(text):
    """Parse a cycle-stamped stimulus file into config events.

    Lines are ``<cycle> uart-rx <byte>`` or ``<cycle> gpio-in <pin> <0|1>``;
    ``#`` starts a comment. Bytes and pins accept decimal or 0x-prefixed hex.
    """
    events = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            cycle = int(parts[0], 0)
            if parts[1] == "uart-rx" and len(parts) == 3:
                events.append(("uart-rx", cycle, int(parts[2], 0) & 0xFF))
            elif parts[1] == "gpio-in" and len(parts) == 4:
                events.append(("gpio-in", cycle, int(parts[2], 0), int(parts[3], 0) & 1))
            else:
                raise ValueError
        except (ValueError, IndexError):
            raise ConfigError(f"stimulus line {lineno}: cannot parse {line!r}") from None
    events.sort(key=lambda e: e[1])
    return tuple(events)


class Kernel:
    """One simulated system instance."""

    def __init__(self, config):
        self.config = config
        self.cycle = 0
        self.halted = None

        self.arch = ArchState()
        self.pipeline = Pipeline()
        self.sram = SramArray()
        self.scrubber = Scrubber(self.sram.rows)
        self.gpio = GpioBank()
        self.uart = UartModel()
        self.counters = SeuCounterBank()

        self.events = []  # (domain, element_key) for the current cycle
        self.bus = SystemBus(self.sram, events=self.events)
        self.bus.add_device(GPIO_BASE, PERIPH_BLOCK_SIZE, self.gpio)
        self.bus.add_device(UART_BASE, PERIPH_BLOCK_SIZE, self.uart)
        self.bus.add_device(SEU_COUNTER_BASE, PERIPH_BLOCK_SIZE, self.counters)

        self.registry = {}
        for cell in self._all_cells():
            self.registry[cell.element_id] = cell
        self.dirty = set()

        self.event_log = [] if config.record_events else None
        self.event_totals = {Domain.CORE: 0, Domain.SRAM: 0, Domain.PERIPHERALS: 0}
        self.cycle_hooks = []
        self.retire_log = None

        self._pending_increments = {}
        self._edge_queue = []  # (kind, key, replica, bit) landing at the next edge
        self._fault_schedule = {}  # cycle -> [(phase, kind, key, replica, bit)]
        self._gpio_schedule = {}

        if config.image is not None:
            segments, entry = load_image(config.image, config.image_base)
            for addr, payload in segments:
                offset = addr - SRAM_BASE
                if offset < 0 or offset + len(payload) > SRAM_SIZE:
                    raise ConfigError(
                        f"segment at 0x{addr:08x} ({len(payload)} bytes) outside SRAM"
                    )
                self.sram.load_bytes(offset, payload)
            self.arch.pc.write(config.entry_pc if config.entry_pc is not None else entry)
        elif config.entry_pc is not None:
            self.arch.pc.write(config.entry_pc)

        for event in config.stimulus:
            if event[0] == "uart-rx":
                self.uart.queue_rx(event[1], event[2])
            elif event[0] == "gpio-in":
                self._gpio_schedule.setdefault(event[1], []).append((event[2], event[3]))
            else:
                raise ConfigError(f"unknown stimulus event kind {event[0]!r}")

    def _all_cells(self):
        yield from self.arch.cells()
        yield from self.pipeline.cells()
        yield from self.scrubber.cells()
        yield from self.gpio.cells()
        yield from self.uart.cells()
        yield from self.counters.cells()

    def cells_in_domain(self, domain):
        return [c.element_id for c in self.registry.values() if c.domain == domain]

    def _retire_sink(self, pc, ins):
        self.retire_log.append((self.cycle, pc, ins.raw))

    # ------------------------------------------------------------------
    # fault injection surface (used by the campaign engine and tests)
    # ------------------------------------------------------------------

    def schedule_flip(self, cycle, kind, key, replica, bit, phase=MID_CYCLE):
        """Queue one bit flip: ``kind`` is "cell" (key = element id) or "sram" (key = row)."""
        if kind == "cell":
            if key not in self.registry:
                raise ConfigError(f"no such element {key!r}")
            cell = self.registry[key]
            if not 0 <= bit < cell.width:
                raise ConfigError(f"{key} has width {cell.width}, bit {bit} out of range")
        elif kind == "sram":
            if not 0 <= key < self.sram.rows:
                raise ConfigError(f"SRAM row {key} out of range")
            if phase != MID_CYCLE:
                raise ConfigError("SRAM injections are phase-independent; use mid-cycle")
            if not 0 <= bit < 32:
                raise ConfigError(f"SRAM bit {bit} out of range")
        else:
            raise ConfigError(f"unknown fault target kind {kind!r}")
        if replica not in (0, 1, 2):
            raise ConfigError(f"replica must be 0..2, got {replica}")
        if phase not in (MID_CYCLE, EDGE_ALIGNED):
            raise ConfigError(f"unknown fault phase {phase!r}")
        self._fault_schedule.setdefault(cycle, []).append((phase, kind, key, replica, bit))

    def _do_flip(self, kind, key, replica, bit):
        if kind == "cell":
            cell = self.registry[key]
            cell.flip(replica, bit)
            self.dirty.add(cell)
        else:
            self.sram.flip(key, replica, bit)

    # ------------------------------------------------------------------
    # the cycle loop
    # ------------------------------------------------------------------

    def step_cycle(self):
        """Simulate one clock cycle in the fixed phase order."""
        c = self.cycle

        # phase 1: clock edge
        if self._pending_increments:
            self.counters.apply_increments(self._pending_increments)
            self._pending_increments = {}
        if self.dirty:
            for cell in self.dirty:
                cell.refresh()
            self.dirty.clear()
        self.events.clear()
        self.bus.last_store_row = None
        self.arch.cycle = c
        pins = self._gpio_schedule.pop(c, None)
        if pins:
            for pin, level in pins:
                self.gpio.set_input(pin, level)
        self.uart.tick(c)
        halt = None
        if self.halted is None:  # the core stops at a halt; the scrubber never does
            sink = self._retire_sink if self.retire_log is not None else None
            halt = self.pipeline.advance(self.arch, self.bus, sink)
        if self._edge_queue:
            for kind, key, replica, bit in self._edge_queue:
                self._do_flip(kind, key, replica, bit)
            self._edge_queue.clear()

        # phase 2: fault application
        due = self._fault_schedule.pop(c, None)
        if due:
            for phase, kind, key, replica, bit in due:
                if phase == EDGE_ALIGNED:
                    self._edge_queue.append((kind, key, replica, bit))
                else:
                    self._do_flip(kind, key, replica, bit)

        # phase 3: voting
        if self.dirty:
            for cell in self.dirty:
                if cell.discrepancy:
                    self.events.append((cell.domain, cell.element_id))

        # phase 4: scrubber
        if self.config.scrub_enabled and c % self.config.scrub_divider == 0:
            written = self.scrubber.step(self.sram, self.bus.last_store_row)
            if written is not None:
                self.events.append((Domain.SRAM, written))

        # phase 5: counter aggregation (lands at the next edge)
        if self.events:
            increments = aggregate_discrepancies(self.events)
            self._pending_increments = increments
            for domain, n in increments.items():
                self.event_totals[domain] += n
            if self.event_log is not None:
                for domain, key in sorted(set(self.events), key=repr):
                    self.event_log.append((c, int(domain), key))

        if halt is not None:
            self.halted = halt
        self.cycle = c + 1
        if self.cycle_hooks:
            for hook in self.cycle_hooks:
                hook(self)

    def run(self, max_cycles=None):
        """Run until the program halts; raise SimTimeout if it never does."""
        budget = self.config.max_cycles if max_cycles is None else max_cycles
        while self.halted is None:
            if self.cycle >= budget:
                raise SimTimeout(budget)
            self.step_cycle()
        return self.result()

    def run_cycles(self, n):
        """Run exactly ``n`` more cycles, no timeout semantics.

        A program halt stops the core, not the clock: the scrubber, counters,
        and fault schedule keep running for the remaining cycles.
        """
        end = self.cycle + n
        while self.cycle < end:
            self.step_cycle()
        return self.result()

    def result(self):
        p = self.pipeline
        return RunResult(
            halt=self.halted,
            cycles=self.cycle,
            retired=p.retired,
            counters=self.counters.values(),
            fetch_stalls=p.fetch_stalls,
            branch_bubbles=p.branch_bubbles,
            fill_cycles=p.fill_cycles,
            dmem_cycles=p.dmem_cycles,
        )

    def activity_cycles(self):
        """Cycle mix for the power model's activity classes."""
        dmem = self.pipeline.dmem_cycles
        return {"sram": dmem, "register": self.cycle - dmem}

    # ------------------------------------------------------------------
    # golden-run comparison and snapshots
    # ------------------------------------------------------------------

    def architectural_signature(self):
        """State fingerprint for golden-run divergence checks.

        Counters and the discrepancy log are deliberately excluded: they differ
        between a golden and a fault run by design.
        """
        return {
            "pc": self.arch.pc.value,
            "regs": tuple(self.arch.reg_values()),
            "retired": self.pipeline.retired,
            "cycles": self.cycle,
            "halt": self.halted,
            "sram": hashlib.sha256(self.sram.voted_bytes()).hexdigest(),
            "uart_tx": self.uart.tx_bytes().hex(),
            "gpio_out": self.gpio.out.value,
        }

    def snapshot(self):
        """Serialize complete machine state; see docs/formats.md for the layout."""
        parts = [SNAPSHOT_MAGIC, struct.pack("<HQ", SNAPSHOT_VERSION, self.cycle)]
        cfg = json.dumps(self.config.to_dict(include_image=False), sort_keys=True).encode()
        parts.append(struct.pack("<I", len(cfg)))
        parts.append(cfg)
        cells = list(self.registry.values())
        parts.append(struct.pack("<I", len(cells)))
        for cell in cells:
            parts.append(struct.pack("<III", cell.r0, cell.r1, cell.r2))
        parts.append(struct.pack("<I", self.sram.rows))
        for bank in self.sram.banks:
            parts.append(array("I", bank).tobytes())
        p = self.pipeline
        misc = {
            "halted": self.halted,
            "idle_cause": p._idle_cause,
            "retired": p.retired,
            "arch_retired": self.arch.retired,
            "fetch_stalls": p.fetch_stalls,
            "branch_bubbles": p.branch_bubbles,
            "fill_cycles": p.fill_cycles,
            "dmem_cycles": p.dmem_cycles,
            "gpio_inputs": self.gpio.input_levels,
            "uart_tx_log": [list(e) for e in self.uart.tx_log],
            "uart_rx_pending": [list(e) for e in self.uart.rx_pending],
            "uart_rx_cursor": self.uart.rx_cursor,
            "pending_increments": {int(d): n for d, n in self._pending_increments.items()},
            "event_totals": {int(d): n for d, n in self.event_totals.items()},
        }
        misc["edge_queue"] = [list(e) for e in self._edge_queue]
        blob = json.dumps(misc, sort_keys=True).encode()
        parts.append(struct.pack("<I", len(blob)))
        parts.append(blob)
        return b"".join(parts)

    @classmethod
    def from_snapshot(cls, data, image=None):
        """Rebuild a kernel from :meth:`snapshot` output.

        The memory image travels inside the snapshot (SRAM contents), so ``image``
        is only needed if the original config must be reproduced exactly for
        reporting purposes.
        """
        if data[:8] != SNAPSHOT_MAGIC:
            raise ConfigError("not a snapshot (bad magic)")
        version, cycle = struct.unpack_from("<HQ", data, 8)
        if version != SNAPSHOT_VERSION:
            raise ConfigError(f"unsupported snapshot version {version}")
        off = 18
        (cfg_len,) = struct.unpack_from("<I", data, off)
        off += 4
        cfg = json.loads(data[off : off + cfg_len])
        off += cfg_len
        cfg["image"] = image
        kernel = cls(SystemConfig.from_dict(cfg))
        (n_cells,) = struct.unpack_from("<I", data, off)
        off += 4
        cells = list(kernel.registry.values())
        if n_cells != len(cells):
            raise ConfigError("snapshot cell count does not match this configuration")
        for cell in cells:
            r0, r1, r2 = struct.unpack_from("<III", data, off)
            off += 12
            cell.set_replicas(r0, r1, r2)
            if cell.discrepancy:
                kernel.dirty.add(cell)
        (rows,) = struct.unpack_from("<I", data, off)
        off += 4
        if rows != kernel.sram.rows:
            raise ConfigError("snapshot SRAM geometry does not match")
        for bank in kernel.sram.banks:
            words = array("I")
            words.frombytes(data[off : off + 4 * rows])
            bank[:] = list(words)
            off += 4 * rows
        (misc_len,) = struct.unpack_from("<I", data, off)
        off += 4
        misc = json.loads(data[off : off + misc_len])
        kernel.cycle = cycle
        kernel.halted = misc["halted"]
        p = kernel.pipeline
        p._idle_cause = misc["idle_cause"]
        p.retired = misc["retired"]
        kernel.arch.retired = misc["arch_retired"]
        p.fetch_stalls = misc["fetch_stalls"]
        p.branch_bubbles = misc["branch_bubbles"]
        p.fill_cycles = misc["fill_cycles"]
        p.dmem_cycles = misc["dmem_cycles"]
        kernel.gpio.input_levels = misc["gpio_inputs"]
        kernel.uart.tx_log = [tuple(e) for e in misc["uart_tx_log"]]
        kernel.uart.rx_pending = [tuple(e) for e in misc["uart_rx_pending"]]
        kernel.uart.rx_cursor = misc["uart_rx_cursor"]
        kernel._pending_increments = {
            Domain(int(d)): n for d, n in misc["pending_increments"].items()
        }
        kernel.event_totals = {Domain(int(d)): n for d, n in misc["event_totals"].items()}
        kernel._edge_queue = [tuple(e) for e in misc["edge_queue"]]
        return kernel


def run_golden(config):
    """Run ``config`` fault-free and return (kernel, signature)."""
    kernel = Kernel(config)
    kernel.run()
    return kernel, kernel.architectural_signature()
