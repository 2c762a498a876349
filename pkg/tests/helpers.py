import random
from collections import Counter

from mempix import EngineConfig, RootScreen, ScenarioSpec, ScriptedDevice
from reference_sim import ReferenceSim

ALPHABET = [b"A", b"B", b"C", b"D", b"E", b"HOT", b"COLD"]


def random_scenario(rng: random.Random, max_devices=8, max_capacity=64, max_ticks=300) -> ScenarioSpec:
    i_max = rng.randrange(1, 13) * 500
    config = EngineConfig(
        capacity=rng.randint(1, max_capacity),
        max_intensity=i_max,
        known_intensity=rng.randrange(1, i_max),
        reinforcement=rng.randint(1, 999),
        decay_period=rng.randint(1, 6),
        ingest_period=rng.randint(1, 3),
        roots=tuple(
            RootScreen(
                pixels=tuple((rng.randint(0, 12), rng.choice(ALPHABET)) for _ in range(rng.randint(1, 3))),
                datum=rng.choice([None] + ALPHABET),
            )
            for _ in range(rng.randint(0, 2))
        ),
    )
    run_ticks = rng.randint(1, max_ticks)
    density = rng.random()
    alphabet = ALPHABET[: rng.randint(1, len(ALPHABET))]
    devices = []
    for dev in rng.sample(range(12), rng.randint(1, max_devices)):
        schedule = {
            t: rng.choice(alphabet)
            for t in range(0, run_ticks, config.ingest_period)
            if rng.random() < density
        }
        devices.append(ScriptedDevice(dev, schedule))
    return ScenarioSpec(config, devices, run_ticks)


def engine_trace(engine):
    st = engine.state
    screens = tuple(
        (s.seq, s.color, s.datum, s.is_root, tuple(p.as_tuple() for p in s.pixels))
        for s in sorted(st.screen_pool, key=lambda s: s.seq)
    )
    table = tuple((e.color, e.screen_no, e.datum) for e in st.color_table)
    return (st.tick, st.pixel_pool.free_count, screens, table)


def _trigger(root):
    if root.datum is not None:
        return root.datum
    counts = Counter(d for _, d in root.pixels)
    return min(counts, key=lambda d: (-counts[d], d))


def reference_for(spec: ScenarioSpec) -> ReferenceSim:
    c = spec.config
    return ReferenceSim(
        c.capacity, c.max_intensity, c.known_intensity, c.reinforcement,
        c.decay_period, c.ingest_period,
        [(_trigger(r), list(r.pixels)) for r in c.roots],
    )


def reference_inputs(spec: ScenarioSpec, tick: int):
    return [(d.device_id, d.schedule[tick]) for d in spec.devices if tick in d.schedule]
