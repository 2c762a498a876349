"""Tick-driven memory management: ingest, colorization, decay and snapshots."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from . import decision
from .core import (
    MILLI,
    ColorId,
    ColorTable,
    ColorTableEntry,
    DeviceId,
    MemoryPixel,
    MemoryScreen,
    SeqNo,
    check_datum,
    majority_color,
    mode_datum,
    to_milli,
)
from .errors import ConfigError, ContractViolation, DatumError, SnapshotFormatError
from .pools import PixelPool, ScreenPool, evict_for, remove_screen

log = logging.getLogger(__name__)

SNAPSHOT_HEADER = b"MEMPIX-SNAPSHOT v1\n"


@dataclass(frozen=True)
class RootScreen:
    """A permanent screen installed at start-up.

    ``datum`` is the trigger the screen answers to; when omitted it is the mode
    of the pixel data. ``pixels`` are ``(device_id, datum)`` pairs.
    """

    pixels: tuple[tuple[DeviceId, bytes], ...]
    datum: Optional[bytes] = None

    def __post_init__(self):
        object.__setattr__(self, "pixels", tuple((int(d), bytes(x)) for d, x in self.pixels))
        if not self.pixels:
            raise ConfigError("roots", "a root screen needs at least one pixel")
        for dev, datum in self.pixels:
            if dev < 0:
                raise ConfigError("roots", f"device id {dev} must be non-negative")
            try:
                check_datum(datum)
            except DatumError as exc:
                raise ConfigError("roots", str(exc)) from None
        if self.datum is not None:
            try:
                check_datum(self.datum)
            except DatumError as exc:
                raise ConfigError("roots", str(exc)) from None

    @property
    def trigger(self) -> bytes:
        if self.datum is not None:
            return self.datum
        counts: dict[bytes, int] = {}
        for _, d in self.pixels:
            counts[d] = counts.get(d, 0) + 1
        return min(counts, key=lambda d: (-counts[d], d))


@dataclass(frozen=True)
class EngineConfig:
    """Engine parameters. Intensity-like fields are integer milli-units.

    ``decay_period`` and ``ingest_period`` are in ticks.
    """

    capacity: int = 64
    max_intensity: int = 5 * MILLI
    known_intensity: int = 3 * MILLI
    reinforcement: int = MILLI // 2
    decay_period: int = 4
    ingest_period: int = 1
    roots: tuple[RootScreen, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "roots", tuple(self.roots))
        for name in ("capacity", "max_intensity", "known_intensity", "reinforcement",
                     "decay_period", "ingest_period"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(name, f"must be an integer, got {value!r}")
        if self.capacity < 1:
            raise ConfigError("capacity", "pixel pool capacity must be > 0")
        if self.max_intensity <= 0:
            raise ConfigError("max_intensity", "maximum intensity must be > 0")
        if not 0 < self.known_intensity < self.max_intensity:
            raise ConfigError("known_intensity", "must satisfy 0 < I < Maximum Intensity")
        if not 0 < self.reinforcement < MILLI:
            raise ConfigError("reinforcement", "r must satisfy 0 < r < 1")
        if self.decay_period < 1:
            raise ConfigError("decay_period", "w must be > 0")
        if self.ingest_period < 1:
            raise ConfigError("ingest_period", "p must be > 0")

    @classmethod
    def build(cls, *, max_intensity="5", known_intensity="3", reinforcement="0.5", **kw) -> "EngineConfig":
        """Construct from decimal values (``"0.5"``, ``3``) rather than milli-units."""
        converted = {}
        for name, value in (("max_intensity", max_intensity), ("known_intensity", known_intensity),
                            ("reinforcement", reinforcement)):
            try:
                converted[name] = to_milli(value)
            except ValueError as exc:
                raise ConfigError(name, str(exc)) from None
        return cls(**converted, **kw)


@dataclass(frozen=True)
class DeviceInput:
    device_id: DeviceId
    datum: bytes


@dataclass
class EngineState:
    tick: int
    next_seq: SeqNo
    next_color: ColorId
    pixel_pool: PixelPool
    screen_pool: ScreenPool
    color_table: ColorTable


@dataclass
class TickReport:
    tick: int
    events: list[dict] = field(default_factory=list)
    screen: Optional[MemoryScreen] = None
    outcome: Optional["decision.DecisionOutcome"] = None


Colorizer = Callable[["Engine", bytes, SeqNo], tuple[ColorId, int]]


def exact_colorizer(engine: "Engine", datum: bytes, seq: SeqNo) -> tuple[ColorId, int]:
    """Known datum -> its color at the known intensity; novel datum -> fresh color at max."""
    table = engine.state.color_table
    entry = table.lookup_by_datum(datum)
    if entry is not None:
        return entry.color, engine.config.known_intensity
    color = engine.allocate_color()
    table.insert(ColorTableEntry(color, seq, datum))
    engine.emit("EntryAdded", color=color, screen=seq, datum=datum)
    return color, engine.config.max_intensity


class Engine:
    """One memory-management / decision system instance.

    Single-threaded: every mutation happens inside the public operations.
    """

    def __init__(self, config: EngineConfig, colorizer: Optional[Colorizer] = None,
                 *, _state: Optional[EngineState] = None):
        self.config = config
        self.colorizer = colorizer or exact_colorizer
        self.events: list[dict] = []
        self._recording = True
        if _state is not None:
            self.state = _state
            return
        n_roots = len(config.roots)
        self.state = EngineState(
            tick=0,
            next_seq=n_roots,
            next_color=0,
            pixel_pool=PixelPool(config.capacity),
            screen_pool=ScreenPool(),
            color_table=ColorTable(),
        )
        # root installation is part of construction, not of the run log
        self._recording = False
        try:
            for seq, root in enumerate(config.roots):
                trigger = root.trigger
                color, _ = self.colorize(trigger, seq)
                pixels = [
                    MemoryPixel(color, config.max_intensity, dev, datum)
                    for dev, datum in sorted(root.pixels, key=lambda p: p[0])
                ]
                self.state.screen_pool.commit(
                    MemoryScreen(seq=seq, tick=0, color=color, datum=trigger, is_root=True, pixels=pixels)
                )
        finally:
            self._recording = True

    def __eq__(self, other) -> bool:
        if not isinstance(other, Engine):
            return NotImplemented
        return self.config == other.config and self.state == other.state

    # -- plumbing -----------------------------------------------------------

    def emit(self, kind: str, **fields) -> None:
        if self._recording:
            self.events.append({"tick": self.state.tick, "event": kind, **fields})

    def allocate_color(self) -> ColorId:
        color = self.state.next_color
        self.state.next_color += 1
        return color

    # -- memory management --------------------------------------------------

    def colorize(self, datum: bytes, seq: SeqNo) -> tuple[ColorId, int]:
        return self.colorizer(self, datum, seq)

    def ingest_tick(self, inputs: Sequence[DeviceInput]) -> Optional[MemoryScreen]:
        """Turn one poll's inputs into a committed screen (None if nothing was ingested)."""
        inputs = list(inputs)
        ids = [i.device_id for i in inputs]
        if ids != sorted(ids) or len(set(ids)) != len(ids):
            raise ContractViolation("inputs must have distinct, ascending device ids")
        if not inputs:
            return None
        st = self.state
        pixels, short = st.pixel_pool.acquire(len(inputs))
        if short:
            evict_for(st.screen_pool, st.pixel_pool, st.color_table, len(inputs), self.emit)
            available = st.pixel_pool.free_count
            if available < len(inputs):
                for dropped in inputs[available:]:
                    log.debug("tick %d: pixel pool exhausted, dropping input from device %d",
                                st.tick, dropped.device_id)
                    self.emit("DroppedInput", device=dropped.device_id, datum=dropped.datum)
                inputs = inputs[:available]
            if not inputs:
                return None
            pixels, _ = st.pixel_pool.acquire(len(inputs))

        seq = st.next_seq
        for px, inp in zip(pixels, inputs):
            px.device_id = inp.device_id
            px.datum = inp.datum
        for px in pixels:
            px.color, px.intensity = self.colorize(px.datum, seq)
            self.emit("PixelColorized", seq=seq, device=px.device_id, color=px.color,
                      intensity=px.intensity, datum=px.datum)

        screen = MemoryScreen(seq=seq, tick=st.tick, color=majority_color(pixels),
                              datum=mode_datum(pixels), pixels=pixels)
        st.next_seq += 1
        st.screen_pool.commit(screen)
        self.emit("ScreenCommitted", seq=seq, color=screen.color, datum=screen.datum,
                  pixels=len(pixels))
        return screen

    def decay_sweep(self) -> None:
        """Age every runtime pixel by one step, reinforcing table-referenced screens."""
        st = self.state
        referenced = st.color_table.referenced_screens()
        self.emit("DecaySweep", referenced=len(referenced))
        for screen in st.screen_pool.runtime_screens():
            delta = -MILLI + (self.config.reinforcement if screen.seq in referenced else 0)
            keep, dead = [], []
            for px in screen.pixels:
                px.intensity += delta
                (dead if px.intensity <= -MILLI else keep).append(px)
            if dead:
                for px in dead:
                    self.emit("PixelRemoved", seq=screen.seq, device=px.device_id, datum=px.datum)
                screen.pixels = keep
                st.pixel_pool.release(dead)
            if not keep:
                remove_screen(st.screen_pool, st.pixel_pool, st.color_table, screen.seq,
                              self.emit, reason="decay")

    def tick(self, devices: Iterable = ()) -> TickReport:
        """Advance the clock by one tick: decay, then ingest + decide."""
        st = self.state
        now = st.tick
        start = len(self.events)
        if now > 0 and now % self.config.decay_period == 0:
            self.decay_sweep()
        screen = outcome = None
        if now % self.config.ingest_period == 0:
            inputs = []
            for dev in sorted(devices, key=lambda d: d.device_id):
                datum = dev.poll(now)
                if datum is not None:
                    inputs.append(DeviceInput(dev.device_id, check_datum(datum)))
            screen = self.ingest_tick(inputs)
            if screen is not None:
                outcome = decision.decide(self, screen)
        st.tick += 1
        return TickReport(tick=now, events=self.events[start:], screen=screen, outcome=outcome)

    # -- snapshots ----------------------------------------------------------

    def snapshot(self) -> bytes:
        st = self.state
        cfg = self.config
        body = {
            "config": {
                "capacity": cfg.capacity,
                "max_intensity": cfg.max_intensity,
                "known_intensity": cfg.known_intensity,
                "reinforcement": cfg.reinforcement,
                "decay_period": cfg.decay_period,
                "ingest_period": cfg.ingest_period,
                "roots": [
                    {
                        "datum": None if r.datum is None else r.datum.hex(),
                        "pixels": [[dev, d.hex()] for dev, d in r.pixels],
                    }
                    for r in cfg.roots
                ],
            },
            "tick": st.tick,
            "next_seq": st.next_seq,
            "next_color": st.next_color,
            "pixel_pool": {"capacity": st.pixel_pool.capacity, "free": st.pixel_pool.free_count},
            "screens": [
                {
                    "seq": s.seq,
                    "tick": s.tick,
                    "color": s.color,
                    "datum": s.datum.hex(),
                    "root": s.is_root,
                    "pixels": [[p.color, p.intensity, p.device_id, p.datum.hex()] for p in s.pixels],
                }
                for s in sorted(st.screen_pool, key=lambda s: s.seq)
            ],
            "color_table": [[e.color, e.screen_no, e.datum.hex()] for e in st.color_table],
        }
        text = json.dumps(body, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
        return SNAPSHOT_HEADER + text.encode("ascii") + b"\n"

    @classmethod
    def restore(cls, blob: bytes, colorizer: Optional[Colorizer] = None) -> "Engine":
        if not blob.startswith(SNAPSHOT_HEADER):
            raise SnapshotFormatError("missing 'MEMPIX-SNAPSHOT v1' header", 0)
        base = len(SNAPSHOT_HEADER)
        raw = blob[base:]
        try:
            text = raw.decode("ascii")
        except UnicodeDecodeError as exc:
            raise SnapshotFormatError("non-ASCII byte in body", base + exc.start) from None
        try:
            body = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SnapshotFormatError(f"malformed body ({exc.msg})", base + exc.pos) from None
        try:
            return cls._from_body(body, colorizer)
        except SnapshotFormatError:
            raise
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise SnapshotFormatError(f"invalid snapshot content ({exc!r})", base) from None

    @classmethod
    def _from_body(cls, body: dict, colorizer: Optional[Colorizer]) -> "Engine":
        c = body["config"]
        config = EngineConfig(
            capacity=c["capacity"],
            max_intensity=c["max_intensity"],
            known_intensity=c["known_intensity"],
            reinforcement=c["reinforcement"],
            decay_period=c["decay_period"],
            ingest_period=c["ingest_period"],
            roots=tuple(
                RootScreen(
                    pixels=tuple((dev, bytes.fromhex(d)) for dev, d in r["pixels"]),
                    datum=None if r["datum"] is None else bytes.fromhex(r["datum"]),
                )
                for r in c["roots"]
            ),
        )
        pp = body["pixel_pool"]
        pixel_pool = PixelPool(pp["capacity"], pp["free"])
        screens = []
        for s in body["screens"]:
            pixels = [MemoryPixel(col, inten, dev, bytes.fromhex(d)) for col, inten, dev, d in s["pixels"]]
            screens.append(MemoryScreen(seq=s["seq"], tick=s["tick"], color=s["color"],
                                        datum=bytes.fromhex(s["datum"]), is_root=bool(s["root"]),
                                        pixels=pixels))
        screen_pool = ScreenPool(sorted(screens, key=lambda s: s.seq))
        table = ColorTable(ColorTableEntry(col, seq, bytes.fromhex(d)) for col, seq, d in body["color_table"])
        if pixel_pool.free_count + screen_pool.nonroot_pixel_count() != pixel_pool.capacity:
            raise ValueError("pixel conservation violated")
        state = EngineState(tick=body["tick"], next_seq=body["next_seq"], next_color=body["next_color"],
                            pixel_pool=pixel_pool, screen_pool=screen_pool, color_table=table)
        return cls(config, colorizer, _state=state)


def init(config: EngineConfig, colorizer: Optional[Colorizer] = None) -> Engine:
    return Engine(config, colorizer)
