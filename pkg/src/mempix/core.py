"""Memory pixels, memory screens and the color table.

Intensities are integers in milli-units (1.000 == 1000) so every run is
bit-reproducible; see :func:`to_milli` / :func:`format_milli`.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import Iterable, Optional

from .errors import ContractViolation, DatumError, DuplicateDatum

MILLI = 1000
MAX_DATUM_LEN = 4096

ColorId = int
SeqNo = int
DeviceId = int


def to_milli(value) -> int:
    """Convert a decimal-ish value (``"0.5"``, ``3``, ``Decimal``) to milli-units.

    Floats go through ``str`` so ``0.5`` becomes exactly 500. Values with more
    than three decimal places are rejected rather than rounded.
    """
    if isinstance(value, bool):
        raise ValueError(f"not a number: {value!r}")
    if isinstance(value, int):
        return value * MILLI
    try:
        scaled = Decimal(str(value)) * MILLI
    except InvalidOperation:
        raise ValueError(f"not a number: {value!r}") from None
    if scaled != scaled.to_integral_value():
        raise ValueError(f"{value!r} has more than 3 decimal places")
    return int(scaled)


def format_milli(milli: int) -> str:
    sign = "-" if milli < 0 else ""
    whole, frac = divmod(abs(milli), MILLI)
    return f"{sign}{whole}.{frac:03d}"


def check_datum(datum: bytes) -> bytes:
    if not isinstance(datum, (bytes, bytearray)):
        raise DatumError(f"datum must be bytes, got {type(datum).__name__}")
    if not 1 <= len(datum) <= MAX_DATUM_LEN:
        raise DatumError(f"datum length {len(datum)} outside [1, {MAX_DATUM_LEN}]")
    return bytes(datum)


@dataclass(slots=True)
class MemoryPixel:
    """One unit of memory. A blank pixel (all fields ``None``) sits in the pixel pool."""

    color: Optional[ColorId] = None
    intensity: Optional[int] = None
    device_id: Optional[DeviceId] = None
    datum: Optional[bytes] = None

    @property
    def blank(self) -> bool:
        return self.color is None and self.intensity is None and self.device_id is None and self.datum is None

    def clear(self) -> None:
        self.color = self.intensity = self.device_id = self.datum = None

    def as_tuple(self) -> tuple:
        return (self.color, self.intensity, self.device_id, self.datum)


@dataclass(slots=True)
class MemoryScreen:
    seq: SeqNo
    tick: int
    color: ColorId
    datum: bytes
    is_root: bool = False
    pixels: list[MemoryPixel] = field(default_factory=list)


@dataclass(frozen=True, slots=True)
class ColorTableEntry:
    color: ColorId
    screen_no: SeqNo
    datum: bytes


def majority_color(pixels: Iterable[MemoryPixel]) -> ColorId:
    counts = Counter(p.color for p in pixels)
    if not counts:
        raise ContractViolation("majority_color of an empty pixel list")
    if None in counts:
        raise ContractViolation("majority_color over uncolorized pixels")
    return min(counts, key=lambda c: (-counts[c], c))


def mode_datum(pixels: Iterable[MemoryPixel], restrict_color: Optional[ColorId] = None) -> bytes:
    """Most frequent datum, ties broken by the lexicographically smallest bytes."""
    if restrict_color is None:
        counts = Counter(p.datum for p in pixels)
    else:
        counts = Counter(p.datum for p in pixels if p.color == restrict_color)
    if not counts:
        raise ContractViolation(
            "mode_datum of an empty pixel list"
            if restrict_color is None
            else f"no pixel has color {restrict_color}"
        )
    return min(counts, key=lambda d: (-counts[d], d))


class ColorTable:
    """Insertion-ordered (color, screen number, datum) entries, unique by datum."""

    def __init__(self, entries: Iterable[ColorTableEntry] = ()):
        self._entries: list[ColorTableEntry] = []
        self._by_datum: dict[bytes, ColorTableEntry] = {}
        for entry in entries:
            self.insert(entry)

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ColorTable):
            return NotImplemented
        return self._entries == other._entries

    def __repr__(self) -> str:
        return f"ColorTable({self._entries!r})"

    @property
    def entries(self) -> tuple[ColorTableEntry, ...]:
        return tuple(self._entries)

    def lookup_by_datum(self, datum: bytes) -> Optional[ColorTableEntry]:
        return self._by_datum.get(datum)

    def lookup_by_color(self, color: ColorId) -> list[ColorTableEntry]:
        return [e for e in self._entries if e.color == color]

    def insert(self, entry: ColorTableEntry) -> None:
        if entry.datum in self._by_datum:
            raise DuplicateDatum(f"datum {entry.datum!r} already in color table")
        self._entries.append(entry)
        self._by_datum[entry.datum] = entry

    def remove_screen(self, seq: SeqNo) -> list[ColorTableEntry]:
        """Drop every entry pointing at ``seq``; returns the removed entries."""
        removed = [e for e in self._entries if e.screen_no == seq]
        if removed:
            self._entries = [e for e in self._entries if e.screen_no != seq]
            for e in removed:
                del self._by_datum[e.datum]
        return removed

    def referenced_screens(self) -> set[SeqNo]:
        return {e.screen_no for e in self._entries}


# Function-style aliases mirroring the table operations.
def table_lookup_by_datum(table: ColorTable, datum: bytes) -> Optional[ColorTableEntry]:
    return table.lookup_by_datum(datum)


def table_lookup_by_color(table: ColorTable, color: ColorId) -> list[ColorTableEntry]:
    return table.lookup_by_color(color)


def table_insert(table: ColorTable, entry: ColorTableEntry) -> ColorTable:
    table.insert(entry)
    return table


def table_remove_screen(table: ColorTable, seq: SeqNo) -> tuple[ColorTable, int]:
    return table, len(table.remove_screen(seq))
