"""Peripheral devices, scenario files, the run loop and the event log format."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Protocol

import yaml

from .core import DeviceId, check_datum
from .decision import ActionCommand
from .engine import Engine, EngineConfig, RootScreen
from .errors import ConfigError, DatumError, ScenarioError


class PeripheralDevice(Protocol):
    device_id: DeviceId

    def poll(self, tick: int) -> Optional[bytes]: ...

    def actuate(self, tick: int, command: ActionCommand) -> bool: ...


@dataclass
class ScriptedDevice:
    """Sensor that emits a fixed schedule of data and ignores commands."""

    device_id: DeviceId
    schedule: dict[int, bytes] = field(default_factory=dict)

    def poll(self, tick: int) -> Optional[bytes]:
        return self.schedule.get(tick)

    def actuate(self, tick: int, command: ActionCommand) -> bool:
        return False


@dataclass
class RecordingActuator:
    device_id: DeviceId
    received: list[tuple[int, bytes]] = field(default_factory=list)

    def poll(self, tick: int) -> Optional[bytes]:
        return None

    def actuate(self, tick: int, command: ActionCommand) -> bool:
        self.received.append((tick, command.payload))
        return True


@dataclass
class ScenarioSpec:
    config: EngineConfig
    devices: list[ScriptedDevice]
    run_ticks: int

    def __post_init__(self):
        if self.run_ticks < 1:
            raise ScenarioError("run_ticks: must be a positive integer")
        ids = [d.device_id for d in self.devices]
        dupes = sorted(i for i, n in Counter(ids).items() if n > 1)
        if dupes:
            raise ScenarioError(f"devices: duplicate device id {dupes[0]}")
        for dev in self.devices:
            for t in dev.schedule:
                if not 0 <= t < self.run_ticks:
                    raise ScenarioError(f"devices[{dev.device_id}].schedule: tick {t} outside [0, run_ticks)")
                if t % self.config.ingest_period:
                    raise ScenarioError(
                        f"devices[{dev.device_id}].schedule: tick {t} is not an ingest tick "
                        f"(multiple of ingest_period={self.config.ingest_period})"
                    )


@dataclass
class RunResult:
    snapshot: bytes
    log: list[dict]
    transcripts: dict[DeviceId, list[tuple[int, bytes]]]
    engine: Engine


# -- scenario files ------------------------------------------------------------

_CONFIG_KEYS = {"capacity", "max_intensity", "known_intensity", "reinforcement",
                "decay_period", "ingest_period"}


def _datum(value, where: str) -> bytes:
    if isinstance(value, dict) and set(value) == {"hex"}:
        try:
            raw = bytes.fromhex(str(value["hex"]))
        except ValueError:
            raise ScenarioError(f"{where}: invalid hex datum") from None
    elif isinstance(value, (str, int, float)) and not isinstance(value, bool):
        raw = str(value).encode("utf-8")
    else:
        raise ScenarioError(f"{where}: datum must be a string or {{hex: ...}}")
    try:
        return check_datum(raw)
    except DatumError as exc:
        raise ScenarioError(f"{where}: {exc}") from None


def _int(value, where: str, minimum: int = 0) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ScenarioError(f"{where}: expected an integer >= {minimum}, got {value!r}")
    return value


def scenario_from_dict(doc) -> ScenarioSpec:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario must be a mapping with keys config, roots, devices, run_ticks")
    unknown = set(doc) - {"config", "roots", "devices", "run_ticks"}
    if unknown:
        raise ScenarioError(f"unknown top-level key {sorted(unknown)[0]!r}")

    cfg = doc.get("config") or {}
    if not isinstance(cfg, dict):
        raise ScenarioError("config: must be a mapping")
    bad = set(cfg) - _CONFIG_KEYS
    if bad:
        raise ScenarioError(f"config.{sorted(bad)[0]}: unknown key")

    roots = []
    for i, r in enumerate(doc.get("roots") or []):
        where = f"roots[{i}]"
        if not isinstance(r, dict) or not isinstance(r.get("pixels"), list):
            raise ScenarioError(f"{where}: expected a mapping with a 'pixels' list")
        pixels = []
        for j, p in enumerate(r["pixels"]):
            if not isinstance(p, dict) or set(p) != {"device", "datum"}:
                raise ScenarioError(f"{where}.pixels[{j}]: expected {{device, datum}}")
            pixels.append((_int(p["device"], f"{where}.pixels[{j}].device"),
                           _datum(p["datum"], f"{where}.pixels[{j}].datum")))
        datum = _datum(r["datum"], f"{where}.datum") if r.get("datum") is not None else None
        try:
            roots.append(RootScreen(tuple(pixels), datum))
        except ConfigError as exc:
            raise ScenarioError(f"{where}: {exc}") from None

    try:
        config = EngineConfig.build(
            max_intensity=cfg.get("max_intensity", "5"),
            known_intensity=cfg.get("known_intensity", "3"),
            reinforcement=cfg.get("reinforcement", "0.5"),
            capacity=cfg.get("capacity", 64),
            decay_period=cfg.get("decay_period", 4),
            ingest_period=cfg.get("ingest_period", 1),
            roots=tuple(roots),
        )
    except ConfigError as exc:
        raise ScenarioError(f"config.{exc}") from None

    devices = []
    for i, d in enumerate(doc.get("devices") or []):
        where = f"devices[{i}]"
        if not isinstance(d, dict) or "id" not in d:
            raise ScenarioError(f"{where}: expected a mapping with an 'id'")
        sched = d.get("schedule") or {}
        if not isinstance(sched, dict):
            raise ScenarioError(f"{where}.schedule: expected a mapping tick -> datum")
        devices.append(ScriptedDevice(
            _int(d["id"], f"{where}.id"),
            {_int(t, f"{where}.schedule key"): _datum(v, f"{where}.schedule[{t}]") for t, v in sched.items()},
        ))
    if "run_ticks" not in doc:
        raise ScenarioError("run_ticks: missing")
    return ScenarioSpec(config, devices, _int(doc["run_ticks"], "run_ticks", 1))


def parse_scenario(text: str) -> ScenarioSpec:
    try:
        doc = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        raise ScenarioError(f"parse error: {exc.problem or exc.context}",
                            mark.line + 1 if mark else None, mark.column + 1 if mark else None) from None
    return scenario_from_dict(doc)


def load_scenario(path) -> ScenarioSpec:
    return parse_scenario(Path(path).read_text(encoding="utf-8"))


# -- running -------------------------------------------------------------------

def run(spec: ScenarioSpec, ticks: Optional[int] = None) -> RunResult:
    engine = Engine(spec.config)
    actuators: dict[DeviceId, RecordingActuator] = {}
    for tick in range(spec.run_ticks if ticks is None else ticks):
        report = engine.tick(spec.devices)
        if report.outcome is not None:
            for cmd in report.outcome.commands:
                if cmd.device_id not in actuators:
                    actuators[cmd.device_id] = RecordingActuator(cmd.device_id)
                actuators[cmd.device_id].actuate(tick, cmd)
    return RunResult(
        snapshot=engine.snapshot(),
        log=engine.events,
        transcripts={k: actuators[k].received for k in sorted(actuators)},
        engine=engine,
    )


# -- event log -----------------------------------------------------------------

def _jsonable(value):
    if isinstance(value, bytes):
        return value.hex()
    return value


def format_record(record: dict) -> str:
    return json.dumps({k: _jsonable(v) for k, v in record.items()},
                      separators=(",", ":"), ensure_ascii=True)


def format_log(records) -> str:
    return "".join(format_record(r) + "\n" for r in records)


def parse_log(text: str) -> list[dict]:
    out = []
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"log line {n}: {exc.msg}", n, exc.colno) from None
        if not isinstance(rec, dict) or "tick" not in rec or "event" not in rec:
            raise ScenarioError(f"log line {n}: record needs 'tick' and 'event'", n, 1)
        out.append(rec)
    return out


def log_stats(records: list[dict]) -> dict:
    """Event counts, screen lifetimes (in ticks) and a lifetime histogram."""
    counts = Counter(r["event"] for r in records)
    born: dict[int, int] = {}
    lifetimes: dict[int, int] = {}
    for r in records:
        if r["event"] == "ScreenCommitted":
            born[r["seq"]] = r["tick"]
        elif r["event"] == "ScreenRemoved" and r["seq"] in born:
            lifetimes[r["seq"]] = r["tick"] - born[r["seq"]]
    return {
        "counts": dict(sorted(counts.items())),
        "lifetimes": lifetimes,
        "alive": sorted(set(born) - set(lifetimes)),
        "histogram": dict(sorted(Counter(lifetimes.values()).items())),
    }
