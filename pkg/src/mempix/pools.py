"""Pixel pool (fixed free store) and screen pool (live memory screens)."""

from __future__ import annotations

from dataclasses import replace
from typing import Callable, Iterator, Optional

from .core import ColorTable, MemoryPixel, MemoryScreen, SeqNo
from .errors import InternalCorruption, RootImmutable

Emit = Callable[..., None]


def _no_emit(kind: str, **fields) -> None:
    pass


class PixelPool:
    """Fixed-capacity free list of blank pixels.

    Root-screen pixels are allocated outside this budget.
    """

    def __init__(self, capacity: int, free_count: Optional[int] = None):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        n = capacity if free_count is None else free_count
        if not 0 <= n <= capacity:
            raise InternalCorruption(f"free_count {n} outside [0, {capacity}]")
        self._free = [MemoryPixel() for _ in range(n)]

    @property
    def free_count(self) -> int:
        return len(self._free)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PixelPool):
            return NotImplemented
        return (self.capacity, self.free_count) == (other.capacity, other.free_count)

    def __repr__(self) -> str:
        return f"PixelPool(capacity={self.capacity}, free={self.free_count})"

    def acquire(self, k: int) -> tuple[list[MemoryPixel], int]:
        """Hand out ``k`` blank pixels.

        Returns ``(pixels, 0)`` on success, or ``([], shortfall)`` leaving the
        pool untouched when fewer than ``k`` are free.
        """
        if k < 1:
            raise ValueError("acquire needs k >= 1")
        free = len(self._free)
        if free < k:
            return [], k - free
        out = self._free[free - k:]
        del self._free[free - k:]
        return out, 0

    def release(self, pixels: list[MemoryPixel]) -> None:
        if len(self._free) + len(pixels) > self.capacity:
            raise InternalCorruption(
                f"release of {len(pixels)} pixels overflows pool "
                f"(free={len(self._free)}, capacity={self.capacity})"
            )
        for p in pixels:
            p.clear()
        self._free.extend(pixels)


class ScreenPool:
    def __init__(self, screens: Iterator[MemoryScreen] = ()):
        self.screens: dict[SeqNo, MemoryScreen] = {}
        for s in screens:
            self.commit(s)

    def __len__(self) -> int:
        return len(self.screens)

    def __contains__(self, seq) -> bool:
        return seq in self.screens

    def __iter__(self) -> Iterator[MemoryScreen]:
        return iter(self.screens.values())

    def __getitem__(self, seq: SeqNo) -> MemoryScreen:
        return self.screens[seq]

    def __eq__(self, other) -> bool:
        if not isinstance(other, ScreenPool):
            return NotImplemented
        return self.screens == other.screens

    def get(self, seq: SeqNo) -> Optional[MemoryScreen]:
        return self.screens.get(seq)

    def commit(self, screen: MemoryScreen) -> None:
        if screen.seq in self.screens:
            raise InternalCorruption(f"screen {screen.seq} committed twice")
        if not screen.pixels:
            raise InternalCorruption(f"screen {screen.seq} committed without pixels")
        self.screens[screen.seq] = screen

    def runtime_screens(self) -> list[MemoryScreen]:
        return [s for s in self.screens.values() if not s.is_root]

    def nonroot_pixel_count(self) -> int:
        return sum(len(s.pixels) for s in self.screens.values() if not s.is_root)


def commit_screen(screen_pool: ScreenPool, screen: MemoryScreen) -> ScreenPool:
    screen_pool.commit(screen)
    return screen_pool


def remove_screen(
    screen_pool: ScreenPool,
    pixel_pool: PixelPool,
    table: ColorTable,
    seq: SeqNo,
    emit: Emit = _no_emit,
    reason: str = "empty",
) -> bool:
    """Remove a runtime screen, freeing its pixels and purging its table entries.

    Returns False (after emitting a ``Warning``) when ``seq`` is absent.
    """
    screen = screen_pool.get(seq)
    if screen is None:
        emit("Warning", message="remove_screen: absent seq", seq=seq)
        return False
    if screen.is_root:
        raise RootImmutable(f"screen {seq} is a root screen")
    del screen_pool.screens[seq]
    pixels = screen.pixels
    screen.pixels = []
    pixel_pool.release(pixels)
    emit("ScreenRemoved", seq=seq, reason=reason, freed=len(pixels))
    for entry in table.remove_screen(seq):
        emit("EntryRemoved", color=entry.color, screen=entry.screen_no, datum=entry.datum)
    return True


def evict_for(
    screen_pool: ScreenPool,
    pixel_pool: PixelPool,
    table: ColorTable,
    k: int,
    emit: Emit = _no_emit,
) -> list[tuple[SeqNo, MemoryPixel]]:
    """Free pixels until ``k`` are available, weakest first.

    Victims are ordered by (intensity, screen seq, position in screen); root
    screens are never touched. Returned pixels are copies taken before release.
    """
    need = k - pixel_pool.free_count
    if need <= 0:
        return []
    candidates = sorted(
        (p.intensity, s.seq, i, p)
        for s in screen_pool.runtime_screens()
        for i, p in enumerate(s.pixels)
    )
    evicted: list[tuple[SeqNo, MemoryPixel]] = []
    for intensity, seq, _, pixel in candidates[:need]:
        screen = screen_pool[seq]
        idx = next(i for i, p in enumerate(screen.pixels) if p is pixel)
        del screen.pixels[idx]
        evicted.append((seq, replace(pixel)))
        emit("Evicted", seq=seq, device=pixel.device_id, intensity=intensity, datum=pixel.datum)
        pixel_pool.release([pixel])
        if not screen.pixels:
            remove_screen(screen_pool, pixel_pool, table, seq, emit, reason="eviction")
    return evicted
