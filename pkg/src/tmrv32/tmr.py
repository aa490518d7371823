"""Triple-redundant storage primitives: cells, bitwise majority voters, feedback refresh.

Every sequential element in the simulated system is a :class:`TmrCell` holding three
replica words. Reads always go through the bitwise 2-of-3 majority vote, so downstream
logic never observes a single corrupted replica. On clock edges where a cell is not
written with new data, the feedback path writes the voted value back into all three
replicas, purging latent upsets. Voters are modeled as fault-free combinational logic;
upsets target stored replicas only.

Voting is bitwise (per bit position), not word-granular: two upsets in different bit
positions of different replicas remain correctable.

No module-level mutable state; cells are safe to use from any thread as long as a
given cell is not shared between threads. The simulation kernel drives each cell
single-threaded.
"""

from dataclasses import dataclass
from enum import IntEnum


class Domain(IntEnum):
    """Protection/accounting domain an element belongs to."""

    CORE = 0
    SRAM = 1
    PERIPHERALS = 2


DOMAIN_NAMES = {Domain.CORE: "core", Domain.SRAM: "sram", Domain.PERIPHERALS: "periph"}


@dataclass
class VoteResult:
    value: int
    discrepancy: bool


def majority_vote(a, b, c):
    """Bitwise 2-of-3 majority of three words, with a discrepancy flag.

    Total function: value = (a & b) | (a & c) | (b & c); discrepancy is true iff
    the three inputs are not all equal.
    """
    return VoteResult((a & b) | (a & c) | (b & c), not (a == b == c))


class TmrCell:
    """One sequential element: three replicas of one value plus voter semantics.

    The three replicas form one instance group; a single corrupted replica is
    masked by the voter and repaired by feedback refresh, while two upsets at the
    same bit position in two replicas defeat the vote.
    """

    __slots__ = ("r0", "r1", "r2", "width", "mask", "element_id", "domain")

    def __init__(self, element_id, domain, width=32, value=0):
        if not 1 <= width <= 32:
            raise ValueError(f"cell width must be 1..32, got {width}")
        self.element_id = element_id
        self.domain = domain
        self.width = width
        self.mask = (1 << width) - 1
        if value & ~self.mask:
            raise ValueError(f"reset value 0x{value:x} exceeds width {width}")
        self.r0 = self.r1 = self.r2 = value

    def write(self, value):
        """Store new data into all three replicas (a voted write)."""
        if value & ~self.mask:
            raise ValueError(
                f"write of 0x{value:x} exceeds width {self.width} of {self.element_id}"
            )
        self.r0 = self.r1 = self.r2 = value

    @property
    def value(self):
        """The voter output: bitwise majority of the replicas."""
        a, b, c = self.r0, self.r1, self.r2
        return (a & b) | (a & c) | (b & c)

    @property
    def discrepancy(self):
        """Voter discrepancy output: replicas are not all equal."""
        return not (self.r0 == self.r1 == self.r2)

    def vote(self):
        a, b, c = self.r0, self.r1, self.r2
        return VoteResult((a & b) | (a & c) | (b & c), not (a == b == c))

    def refresh(self):
        """Feedback path: latch the voted value into all replicas.

        Models the default mux input on cycles where no new data is stored.
        Returns True if any replica differed before the refresh.
        """
        a, b, c = self.r0, self.r1, self.r2
        if a == b == c:
            return False
        self.r0 = self.r1 = self.r2 = (a & b) | (a & c) | (b & c)
        return True

    def flip(self, replica, bit):
        """Invert one bit of one replica (an injected upset)."""
        if replica not in (0, 1, 2):
            raise ValueError(f"replica must be 0..2, got {replica}")
        if not 0 <= bit < self.width:
            raise ValueError(f"bit must be 0..{self.width - 1}, got {bit}")
        if replica == 0:
            self.r0 ^= 1 << bit
        elif replica == 1:
            self.r1 ^= 1 << bit
        else:
            self.r2 ^= 1 << bit

    @property
    def replicas(self):
        return (self.r0, self.r1, self.r2)

    def set_replicas(self, r0, r1, r2):
        """Restore raw replica contents (snapshot support); values must fit the width."""
        m = self.mask
        if (r0 | r1 | r2) & ~m:
            raise ValueError(f"replica value exceeds width {self.width}")
        self.r0, self.r1, self.r2 = r0, r1, r2

    def __repr__(self):
        return (
            f"TmrCell({self.element_id!r}, {self.domain.name}, width={self.width}, "
            f"replicas=({self.r0:#x}, {self.r1:#x}, {self.r2:#x}))"
        )


def tmr_write(cell, value):
    """Write new data into all replicas of ``cell``; returns the cell."""
    cell.write(value)
    return cell


def feedback_refresh(cell):
    """Refresh ``cell`` from its voter; returns (cell, discrepancy_before_refresh)."""
    return cell, cell.refresh()


def inject_bit_flip(cell, replica, bit):
    """Flip one bit of one replica of ``cell``; returns the cell."""
    cell.flip(replica, bit)
    return cell
