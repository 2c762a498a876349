"""Decision cascade: match a new screen against the color table and act on it."""

from __future__ import annotations

from bisect import insort
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Optional

from .core import ColorId, DeviceId, MemoryScreen, SeqNo, mode_datum
from .errors import InternalCorruption

if TYPE_CHECKING:
    from .engine import Engine


@dataclass(frozen=True)
class ActionCommand:
    device_id: DeviceId
    payload: bytes
    source_seq: SeqNo


class OutcomeKind(str, Enum):
    ACTION = "Action"
    ASSOCIATED = "Associated"
    NO_ACTION = "NoAction"


@dataclass(frozen=True)
class DecisionOutcome:
    kind: OutcomeKind
    matched_color: Optional[ColorId] = None
    target_seq: Optional[SeqNo] = None
    commands: tuple[ActionCommand, ...] = ()
    copied_count: int = 0
    colors_tried: tuple[ColorId, ...] = ()


def candidate_colors(screen: MemoryScreen) -> list[tuple[ColorId, bytes]]:
    """The screen's header first, then its remaining colors by descending count.

    Non-header colors are paired with the mode datum of their own pixels.
    """
    counts = Counter(p.color for p in screen.pixels)
    out = [(screen.color, screen.datum)]
    for color in sorted(counts, key=lambda c: (-counts[c], c)):
        if color != screen.color:
            out.append((color, mode_datum(screen.pixels, color)))
    return out


def perform_action(engine: "Engine", target_seq: SeqNo) -> list[ActionCommand]:
    target = engine.state.screen_pool.get(target_seq)
    if target is None:
        raise InternalCorruption(f"action target screen {target_seq} is not in the screen pool")
    commands = [ActionCommand(p.device_id, p.datum, target_seq) for p in target.pixels]
    for cmd in commands:
        engine.emit("ActionIssued", device=cmd.device_id, payload=cmd.payload,
                    source=target_seq, label=target.datum)
    return commands


def copy_pixels(engine: "Engine", from_seq: SeqNo, color: ColorId, into: MemoryScreen) -> int:
    """Append copies of ``from_seq``'s pixels of ``color`` to ``into``.

    Copies keep their source intensity and never trigger eviction; whatever
    does not fit is skipped with a ``CopySkipped`` event.
    """
    st = engine.state
    source = st.screen_pool.get(from_seq)
    if source is None:
        raise InternalCorruption(f"copy source screen {from_seq} is not in the screen pool")
    wanted = [p for p in source.pixels if p.color == color]
    copied = 0
    for px in wanted:
        got, short = st.pixel_pool.acquire(1)
        if short:
            engine.emit("CopySkipped", source=from_seq, color=color, skipped=len(wanted) - copied)
            break
        new = got[0]
        new.color, new.intensity, new.device_id, new.datum = px.color, px.intensity, px.device_id, px.datum
        insort(into.pixels, new, key=lambda p: p.device_id)
        copied += 1
    return copied


def decide(engine: "Engine", screen: MemoryScreen) -> DecisionOutcome:
    table = engine.state.color_table
    tried: list[ColorId] = []
    outcome = None
    for color, datum in candidate_colors(screen):
        tried.append(color)
        entry = table.lookup_by_datum(datum)
        if entry is not None and entry.color == color:
            commands = perform_action(engine, entry.screen_no)
            outcome = DecisionOutcome(OutcomeKind.ACTION, color, entry.screen_no,
                                      tuple(commands), 0, tuple(tried))
            break
        same_color = table.lookup_by_color(color)
        if same_color:
            target = same_color[0].screen_no
            copied = copy_pixels(engine, target, color, screen)
            outcome = DecisionOutcome(OutcomeKind.ASSOCIATED, color, target, (), copied, tuple(tried))
            break
    if outcome is None:
        outcome = DecisionOutcome(OutcomeKind.NO_ACTION, colors_tried=tuple(tried))
    engine.emit("Decision", seq=screen.seq, outcome=outcome.kind.value, color=outcome.matched_color,
                target=outcome.target_seq, commands=len(outcome.commands),
                copied=outcome.copied_count, tried=list(tried))
    return outcome
