"""Triplicated dual-port SRAM, the memory bridge's address routing, and the memory map.

The 32 kB SRAM is stored three times; the core-side port returns the bitwise majority
of the three banks per row and reports a discrepancy event whenever the banks disagree
on an accessed row. The scrubber-side port exposes raw (unvoted) replica contents and
a voted write-back. Both "ports" are sequential accesses within one simulated cycle
with a fixed order (core first, then scrubber), which makes write-conflict detection
deterministic.

Memory map (invented for this simulator, conventional bare-metal layout):

  0x0000_0000 .. 0x0000_7FFF   SRAM (code + data, no enforced partition)
  0x1000_0000 .. 0x1000_0FFF   GPIO block   (DIR @ +0x0, OUT @ +0x4, IN @ +0x8)
  0x1000_1000 .. 0x1000_1FFF   UART         (TX @ +0x0, RX @ +0x4, STATUS @ +0x8)
  0x1000_2000 .. 0x1000_2FFF   SEU counters (core @ +0x0, sram @ +0x4, periph @ +0x8),
                               read-only from the core

Peripheral registers are word-granular: only aligned 4-byte accesses are accepted.
"""

from array import array
from dataclasses import dataclass

from .errors import AlignmentFault, BusFault
from .tmr import Domain

SRAM_BASE = 0x0000_0000
SRAM_SIZE = 0x8000
SRAM_ROWS = SRAM_SIZE // 4

GPIO_BASE = 0x1000_0000
UART_BASE = 0x1000_1000
SEU_COUNTER_BASE = 0x1000_2000
PERIPH_BLOCK_SIZE = 0x1000

M32 = 0xFFFFFFFF


@dataclass
class MemRequest:
    """A data-side memory access emitted by the execute stage."""

    kind: str  # "fetch" | "load" | "store"
    addr: int
    width: int  # 1, 2 or 4 bytes
    data: int = 0


class SramArray:
    """Three replica banks of 32-bit rows with a core port and a scrubber port."""

    def __init__(self, rows=SRAM_ROWS):
        if rows < 1:
            raise ValueError("SRAM needs at least one row")
        self.rows = rows
        self.banks = [[0] * rows, [0] * rows, [0] * rows]

    def read_voted(self, row):
        """Core port read: (bitwise-majority word, replicas-disagree flag)."""
        a = self.banks[0][row]
        b = self.banks[1][row]
        c = self.banks[2][row]
        return (a & b) | (a & c) | (b & c), not (a == b == c)

    def write_masked(self, row, value, mask):
        """Core port write: update the enabled bits of all three banks identically."""
        if mask == M32:
            self.banks[0][row] = value
            self.banks[1][row] = value
            self.banks[2][row] = value
        else:
            value &= mask
            inv = ~mask & M32
            for bank in self.banks:
                bank[row] = (bank[row] & inv) | value

    def scrub_read(self, row):
        """Scrubber port read: the three raw replica words, unvoted."""
        if not 0 <= row < self.rows:
            raise ValueError(f"row {row} out of range 0..{self.rows - 1}")
        return self.banks[0][row], self.banks[1][row], self.banks[2][row]

    def scrub_write(self, row, word):
        """Scrubber port write-back: set all replicas of a row to the voted word."""
        if not 0 <= row < self.rows:
            raise ValueError(f"row {row} out of range 0..{self.rows - 1}")
        self.banks[0][row] = word
        self.banks[1][row] = word
        self.banks[2][row] = word

    def flip(self, row, replica, bit):
        """Invert one bit of one replica bank (an injected upset)."""
        if not 0 <= row < self.rows:
            raise ValueError(f"row {row} out of range 0..{self.rows - 1}")
        if replica not in (0, 1, 2):
            raise ValueError(f"replica must be 0..2, got {replica}")
        if not 0 <= bit < 32:
            raise ValueError(f"bit must be 0..31, got {bit}")
        self.banks[replica][row] ^= 1 << bit

    def load_bytes(self, offset, data):
        """Initialize all three banks identically from a byte image."""
        if offset < 0 or offset + len(data) > self.rows * 4:
            raise ValueError(
                f"image of {len(data)} bytes at offset 0x{offset:x} exceeds "
                f"{self.rows * 4} bytes of SRAM"
            )
        padded = bytearray(self.voted_bytes())
        padded[offset : offset + len(data)] = data
        words = array("I")
        words.frombytes(bytes(padded))
        for bank in self.banks:
            bank[:] = list(words)

    def voted_bytes(self):
        """The full memory image as the core would observe it (little-endian)."""
        b0, b1, b2 = self.banks
        words = array(
            "I", [(a & b) | (a & c) | (b & c) for a, b, c in zip(b0, b1, b2)]
        )
        return words.tobytes()

    def mismatched_rows(self):
        """Rows whose replicas currently disagree (test/diagnostic helper)."""
        b0, b1, b2 = self.banks
        return [r for r in range(self.rows) if not (b0[r] == b1[r] == b2[r])]


class SystemBus:
    """Routes core-side accesses to SRAM and the peripheral blocks.

    Discrepancy events observed on reads are appended to ``events`` as
    ``(domain, element_key)`` tuples; the kernel drains them once per cycle.
    ``last_store_row`` records the SRAM row written by the core in the current
    cycle (the scrubber's write-conflict input); the kernel clears it each cycle.
    """

    def __init__(self, sram, devices=(), events=None):
        self.sram = sram
        self.devices = list(devices)  # (base, size, device) triples
        self.events = events if events is not None else []
        self.last_store_row = None

    def add_device(self, base, size, device):
        self.devices.append((base, size, device))

    def _device_at(self, addr):
        for base, size, device in self.devices:
            if base <= addr < base + size:
                return device, addr - base
        return None, 0

    def fetch_window(self, addr):
        """Instruction fetch: a 32-bit window at ``addr`` (reads 1-2 SRAM rows).

        The second row is only read when the low 16 bits select a 32-bit encoding,
        so a compressed instruction at the end of SRAM does not fault.
        """
        if addr & 1:
            raise AlignmentFault(addr, 2)
        if not SRAM_BASE <= addr < SRAM_BASE + self.sram.rows * 4:
            raise BusFault(addr, "instruction fetch outside SRAM")
        row = (addr - SRAM_BASE) >> 2
        word, mismatch = self.sram.read_voted(row)
        if mismatch:
            self.events.append((Domain.SRAM, row))
        if addr & 2:
            low = word >> 16
            if low & 3 != 3:
                return low
            if row + 1 >= self.sram.rows:
                raise BusFault(addr, "32-bit instruction fetch past end of SRAM")
            word2, mismatch2 = self.sram.read_voted(row + 1)
            if mismatch2:
                self.events.append((Domain.SRAM, row + 1))
            return low | ((word2 & 0xFFFF) << 16)
        return word

    def read(self, addr, width):
        """Data read; returns the raw unsigned value of ``width`` bytes."""
        if addr % width:
            raise AlignmentFault(addr, width)
        if SRAM_BASE <= addr < SRAM_BASE + self.sram.rows * 4:
            row = (addr - SRAM_BASE) >> 2
            word, mismatch = self.sram.read_voted(row)
            if mismatch:
                self.events.append((Domain.SRAM, row))
            if width == 4:
                return word
            shift = 8 * (addr & 3)
            return (word >> shift) & ((1 << (8 * width)) - 1)
        device, offset = self._device_at(addr)
        if device is None:
            raise BusFault(addr, "read from unmapped address")
        if width != 4:
            raise BusFault(addr, "peripheral registers require word access")
        return device.read(offset)

    def write(self, addr, value, width):
        """Data write; sub-word SRAM stores update only the enabled bytes."""
        if addr % width:
            raise AlignmentFault(addr, width)
        if SRAM_BASE <= addr < SRAM_BASE + self.sram.rows * 4:
            row = (addr - SRAM_BASE) >> 2
            if width == 4:
                self.sram.write_masked(row, value & M32, M32)
            else:
                shift = 8 * (addr & 3)
                mask = ((1 << (8 * width)) - 1) << shift
                self.sram.write_masked(row, (value << shift) & M32, mask)
            self.last_store_row = row
            return
        device, offset = self._device_at(addr)
        if device is None:
            raise BusFault(addr, "write to unmapped address")
        if width != 4:
            raise BusFault(addr, "peripheral registers require word access")
        device.write(offset, value & M32)
