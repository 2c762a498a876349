"""Exit criteria. Each test records a PASS/FAIL line shown in the terminal summary."""

import functools
import hashlib
import os
import random
import subprocess
import sys
import time

import pytest

from helpers import engine_trace, random_scenario, reference_for, reference_inputs
from mempix import Engine, EngineConfig, RootScreen
from mempix.errors import ScenarioError
from mempix.harness import ScriptedDevice, format_log, parse_scenario, run

RESULTS: list[str] = []
TIME_LIMIT = 10.0


def criterion(number, title):
    def wrap(fn):
        @functools.wraps(fn)
        def inner(*args, **kwargs):
            start = time.perf_counter()
            try:
                detail = fn(*args, **kwargs)
                elapsed = time.perf_counter() - start
                assert elapsed < TIME_LIMIT, f"took {elapsed:.2f}s (limit {TIME_LIMIT}s)"
            except BaseException as exc:
                RESULTS.append(f"FAIL  {number}. {title}: {exc}")
                raise
            RESULTS.append(f"PASS  {number}. {title} ({elapsed:.2f}s){': ' + detail if detail else ''}")
        return inner
    return wrap


def sweep_ticks_until_removed(engine, devices, seq, max_ticks=200):
    """Tick until screen ``seq`` disappears; returns (sweeps survived, tick of removal)."""
    sweeps = 0
    for _ in range(max_ticks):
        report = engine.tick(devices)
        if any(e["event"] == "DecaySweep" for e in report.events) and report.tick > 0:
            sweeps += 1
        if report.screen is None and seq not in engine.state.screen_pool:
            return sweeps, report.tick
    raise AssertionError(f"screen {seq} still alive after {max_ticks} ticks")


@criterion(1, "forgetting exactness")
def test_forgetting_exactness():
    cfg = EngineConfig(max_intensity=5000, known_intensity=3000, reinforcement=500, decay_period=1,
                       roots=(RootScreen(((9, b"BUZZ"),), datum=b"HOT"),))
    engine = Engine(cfg)
    sensor = ScriptedDevice(1, {2: b"HOT"})
    for _ in range(3):
        report = engine.tick([sensor])
    screen = report.screen
    assert screen is not None and screen.tick == 2
    assert screen.pixels[0].intensity == 3000
    assert screen.seq not in engine.state.color_table.referenced_screens()

    trajectory = []
    sweeps = 0
    while screen.seq in engine.state.screen_pool:
        trajectory.append(screen.pixels[0].intensity)
        report = engine.tick([sensor])
        sweeps += 1
    assert trajectory == [3000, 2000, 1000, 0]
    assert sweeps == 4
    assert report.tick == 6
    kinds = [(e["event"], e.get("seq")) for e in report.events]
    assert ("PixelRemoved", screen.seq) in kinds and ("ScreenRemoved", screen.seq) in kinds
    assert all(e.screen_no != screen.seq for e in engine.state.color_table)
    return f"removed at sweep {sweeps} (tick {report.tick})"


def unindexed_colorizer(engine, datum, seq):
    """Default colorizer minus the table write: nothing is ever referenced."""
    entry = engine.state.color_table.lookup_by_datum(datum)
    if entry is not None:
        return entry.color, engine.config.known_intensity
    return engine.allocate_color(), engine.config.max_intensity


@criterion(2, "reinforced longevity")
def test_reinforced_longevity():
    cfg = EngineConfig(max_intensity=5000, known_intensity=3000, reinforcement=500, decay_period=1)
    sensor = ScriptedDevice(1, {0: b"NEW"})

    def lifetime(colorizer):
        engine = Engine(cfg, colorizer)
        first = engine.tick([sensor]).screen
        assert first.pixels[0].intensity == 5000
        referenced = first.seq in engine.state.color_table.referenced_screens()
        sweeps, _ = sweep_ticks_until_removed(engine, [sensor], first.seq)
        return referenced, sweeps

    expected = next(n for n in range(100) if 5000 - 500 * n <= -1000)
    assert expected == 12
    referenced, reinforced = lifetime(None)
    assert referenced and reinforced == 12
    referenced, plain = lifetime(unindexed_colorizer)
    assert not referenced and plain == 6
    return f"{reinforced} sweeps referenced vs {plain} unreferenced"


@pytest.fixture(scope="module")
def fuzz_runs():
    """Run the 200 random scenarios once, checking both invariants after every tick."""
    conservation, integrity = [], []
    start = time.perf_counter()
    ticks = 0
    for seed in range(200):
        spec = random_scenario(random.Random(seed), max_devices=8, max_capacity=64, max_ticks=300)
        engine = Engine(spec.config)
        st = engine.state
        for _ in range(spec.run_ticks):
            engine.tick(spec.devices)
            ticks += 1
            if st.pixel_pool.free_count + st.screen_pool.nonroot_pixel_count() != spec.config.capacity:
                conservation.append((seed, st.tick))
            if any(e.screen_no not in st.screen_pool for e in st.color_table):
                integrity.append((seed, st.tick))
            if any(not s.pixels for s in st.screen_pool):
                conservation.append((seed, st.tick, "empty screen"))
    return conservation, integrity, ticks, time.perf_counter() - start


@criterion(3, "conservation fuzz")
def test_conservation_fuzz(fuzz_runs):
    conservation, _, ticks, elapsed = fuzz_runs
    assert elapsed < TIME_LIMIT
    assert conservation == []
    return f"0 violations over 200 scenarios / {ticks} ticks in {elapsed:.2f}s"


@criterion(4, "referential integrity fuzz")
def test_referential_integrity_fuzz(fuzz_runs):
    _, integrity, ticks, elapsed = fuzz_runs
    assert elapsed < TIME_LIMIT
    assert integrity == []
    return f"0 violations over 200 scenarios / {ticks} ticks in {elapsed:.2f}s"


@criterion(5, "oracle equivalence")
def test_oracle_equivalence():
    divergences = []
    for seed in range(50):
        spec = random_scenario(random.Random(10_000 + seed), max_devices=4, max_capacity=32, max_ticks=100)
        engine = Engine(spec.config)
        ref = reference_for(spec)
        if engine_trace(engine) != ref.trace():
            divergences.append((seed, "init"))
            continue
        actions = []
        for t in range(spec.run_ticks):
            report = engine.tick(spec.devices)
            ref.step(reference_inputs(spec, t))
            if report.outcome is not None:
                actions += [(t, c.device_id, c.payload) for c in report.outcome.commands]
            if engine_trace(engine) != ref.trace():
                divergences.append((seed, t))
                break
        else:
            if actions != ref.actions:
                divergences.append((seed, "actions"))
    assert divergences == []
    return "0 divergences over 50 scenarios"


@criterion(6, "reflex end-to-end")
def test_reflex_end_to_end():
    spec = parse_scenario(
        "roots:\n  - datum: HOT\n    pixels: [{device: 9, datum: BUZZ}]\n"
        "devices:\n  - id: 1\n    schedule: {2: HOT}\n"
        "run_ticks: 5\n"
    )
    result = run(spec)
    assert result.transcripts == {9: [(2, b"BUZZ")]}
    decision = next(r for r in result.log if r["event"] == "Decision")
    assert (decision["tick"], decision["outcome"], decision["target"]) == (2, "Action", 0)
    return "device 9 received BUZZ at tick 2"


# Digest of this scenario's log + snapshot, frozen after a hand check of ticks 0-4;
# pins byte-level output across machines and interpreter runs.
GOLDEN_SCENARIO = (
    "config: {capacity: 8, decay_period: 2, reinforcement: 0.25}\n"
    "roots:\n  - datum: HOT\n    pixels: [{device: 9, datum: BUZZ}, {device: 8, datum: LED}]\n"
    "devices:\n"
    "  - id: 1\n    schedule: {0: HOT, 1: A, 2: B, 3: A, 5: HOT, 8: C, 9: D}\n"
    "  - id: 2\n    schedule: {1: A, 2: C, 4: E, 6: A, 7: B}\n"
    "  - id: 3\n    schedule: {1: B, 2: B, 3: D, 7: E, 9: F}\n"
    "run_ticks: 30\n"
)
GOLDEN_SHA256 = "92fa1be0c703a68e6f5d05add36d9cfc372c0937bc1a230a6cc28fc4407238ef"


@criterion(7, "determinism")
def test_determinism():
    for seed in range(20):
        spec = random_scenario(random.Random(20_000 + seed), max_ticks=150)
        a, b = run(spec), run(spec)
        assert format_log(a.log).encode() == format_log(b.log).encode()
        assert a.snapshot == b.snapshot
    result = run(parse_scenario(GOLDEN_SCENARIO))
    digest = hashlib.sha256(format_log(result.log).encode() + result.snapshot).hexdigest()
    assert digest == GOLDEN_SHA256
    # a fresh interpreter with a different hash seed must produce the same bytes
    code = (
        "import hashlib, sys; from mempix.harness import run, parse_scenario, format_log; "
        "r = run(parse_scenario(sys.stdin.read())); "
        "print(hashlib.sha256(format_log(r.log).encode() + r.snapshot).hexdigest())"
    )
    for hash_seed in ("0", "12345"):
        out = subprocess.run([sys.executable, "-c", code], input=GOLDEN_SCENARIO, capture_output=True,
                             text=True, check=True, env={**os.environ, "PYTHONHASHSEED": hash_seed})
        assert out.stdout.strip() == GOLDEN_SHA256
    return "20 random scenarios replayed byte-identically; golden digest stable across processes"


@criterion(8, "bound rejection")
def test_bound_rejection():
    cases = [
        ("reinforcement: 0", "0 < r < 1"),
        ("reinforcement: 1", "0 < r < 1"),
        ("known_intensity: 5", "I < Maximum Intensity"),
        ("known_intensity: 6", "I < Maximum Intensity"),
        ("decay_period: 0", "w must be > 0"),
        ("ingest_period: 0", "p must be > 0"),
    ]
    for line, bound in cases:
        with pytest.raises(ScenarioError) as err:
            parse_scenario(f"config:\n  max_intensity: 5\n  {line}\nrun_ticks: 1\n")
        assert bound in str(err.value), (line, str(err.value))
    return f"{len(cases)} out-of-bound configs rejected"
