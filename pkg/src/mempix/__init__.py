"""Memory-pixel associative memory engine with decay, pooling and a decision cascade."""

from .core import (
    ColorTable,
    ColorTableEntry,
    MemoryPixel,
    MemoryScreen,
    format_milli,
    majority_color,
    mode_datum,
    to_milli,
)
from .decision import ActionCommand, DecisionOutcome, OutcomeKind, candidate_colors, decide
from .engine import DeviceInput, Engine, EngineConfig, RootScreen, exact_colorizer
from .errors import (
    ConfigError,
    ContractViolation,
    DuplicateDatum,
    InternalCorruption,
    RootImmutable,
    ScenarioError,
    SnapshotFormatError,
)
from .harness import RecordingActuator, ScenarioSpec, ScriptedDevice, load_scenario, parse_scenario, run
from .pools import PixelPool, ScreenPool

__version__ = "0.1.0"
