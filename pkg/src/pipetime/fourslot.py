"""Wait-free single-writer/single-reader register (Simpson's four slots).

The writer and reader never block each other: four data slots (two pairs of
two) plus three control bits steer the writer away from whatever slot the
reader may currently be copying.  A read always returns a coherent item, and
never one older than the last write that completed before the read began.

`FourSlotRegister` offers plain `write`/`read` for sequential use (the
simulator publishes and snapshots atomically at scheduled instants).  The
same algorithm is also exposed as explicit atomic steps (`writer_steps` /
`reader_steps`) so tests can enumerate every interleaving of one writer and
one reader and check coherence and freshness exhaustively; there the item is
written in two halves to make torn reads observable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterator, Optional


def _empty_cells():
    return [[None, None], [None, None]], [[None, None], [None, None]]


@dataclass
class FourSlotRegister:
    """data[pair][slot] is a two-word cell [lo, hi]; both words of a coherent
    item match."""

    data: list = field(default_factory=lambda: [[[None, None], [None, None]], [[None, None], [None, None]]])
    slot: list[int] = field(default_factory=lambda: [0, 0])  # freshest slot per pair
    latest: int = 0  # pair of the most recent completed write
    reading: int = 0  # pair the reader announced

    def write(self, item: Any, lineage: Any = None) -> None:
        pair = 1 - self.reading
        index = 1 - self.slot[pair]
        cell = self.data[pair][index]
        cell[0] = (item, lineage)
        cell[1] = (item, lineage)
        self.slot[pair] = index
        self.latest = pair

    def read(self) -> Optional[tuple[Any, Any]]:
        """Return (item, lineage) of the freshest completed write, or None if
        nothing was ever written."""
        pair = self.latest
        self.reading = pair
        index = self.slot[pair]
        return self.data[pair][index][0]


# -- step machines for interleaving enumeration ------------------------------


def writer_steps(reg: FourSlotRegister, sequence: list[int]) -> Iterator[str]:
    """One atomic shared-memory action per yield, for each write in turn."""
    for seq in sequence:
        pair = 1 - reg.reading
        yield f"w{seq}:pick-pair"
        index = 1 - reg.slot[pair]
        yield f"w{seq}:pick-slot"
        reg.data[pair][index][0] = seq
        yield f"w{seq}:data-lo"
        reg.data[pair][index][1] = seq
        yield f"w{seq}:data-hi"
        reg.slot[pair] = index
        yield f"w{seq}:publish-slot"
        reg.latest = pair
        yield f"w{seq}:publish-latest"


@dataclass
class ReadProbe:
    value: Optional[list] = None
    start_marker: Optional[int] = None


def reader_steps(reg: FourSlotRegister, probe: ReadProbe, completed_before) -> Iterator[str]:
    """Atomic reader actions; `completed_before()` is sampled at the read's
    first step and records the last write completed by then."""
    probe.start_marker = completed_before()
    pair = reg.latest
    yield "r:read-latest"
    reg.reading = pair
    yield "r:announce"
    index = reg.slot[pair]
    yield "r:read-slot"
    lo = reg.data[pair][index][0]
    yield "r:data-lo"
    hi = reg.data[pair][index][1]
    probe.value = [lo, hi]
    yield "r:data-hi"
