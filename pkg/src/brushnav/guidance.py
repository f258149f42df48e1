"""Cue generation: guide vertically, then horizontally, then declare arrival.

One directional cue at a time, at most one per prompt period.  Vertical
alignment is judged against the arrival criterion's vertical band
(2|y - y0| <= b); losing it from horizontal seek re-fires vertical cues, so
guidance alternates between the two axes until the tip enters the reference
area.  Screen convention: +y is downward, so cue "up" means decrease y.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace

from .geometry import Point2
from .grid import Cell, CellCode, GridSpec, ReferenceArea, arrival_check, code_from_text

CUE_KINDS = ("up", "down", "left", "right", "arrived")

PHASE_VERTICAL = "vertical_seek"
PHASE_HORIZONTAL = "horizontal_seek"
PHASE_ARRIVED = "arrived"


class GuidanceError(Exception):
    pass


class UnparseableCommand(GuidanceError):
    pass


@dataclass(frozen=True)
class Cue:
    kind: str
    t: float

    def __post_init__(self):
        if self.kind not in CUE_KINDS:
            raise ValueError(f"unknown cue kind {self.kind!r}")


@dataclass(frozen=True)
class PromptPolicy:
    """Minimum spacing between directional cues, in seconds."""

    period: float = 1.0

    def __post_init__(self):
        if self.period <= 0:
            raise ValueError("prompt period must be positive")


@dataclass(frozen=True)
class GuidanceState:
    target: Cell
    phase: str = PHASE_VERTICAL
    last_cue_t: float | None = None


_COMMAND_RE = re.compile(r"^(?:go\s+to\s+)?([a-z]{2})$")


def parse_command(text: str, spec: GridSpec) -> CellCode:
    """Parse ``go to <code>`` or a bare ``<code>``, case/whitespace tolerant.

    Raises
    ------
    UnparseableCommand
        If the text does not have the command shape.
    CodeOutOfRange
        If the code letters fall outside the grid.
    """
    m = _COMMAND_RE.match(" ".join(text.strip().lower().split()))
    if m is None:
        raise UnparseableCommand(f"cannot parse command {text!r}")
    return code_from_text(m.group(1), spec)


def next_cue(
    state: GuidanceState,
    tip: Point2 | None,
    now: float,
    policy: PromptPolicy,
    ref: ReferenceArea,
) -> tuple[GuidanceState, Cue | None]:
    """Advance the guidance machine by one observation.

    Rules, in order: an arrived state stays silent; a dropout frame (tip
    None) changes nothing; reaching the reference area emits ``arrived``
    immediately (not gated by the period); otherwise at most one directional
    cue per period is emitted, vertical correction first, horizontal only
    while vertically aligned.
    """
    if state.phase == PHASE_ARRIVED:
        return state, None
    if tip is None:
        return state, None
    cell = state.target
    if arrival_check(tip, cell, ref):
        return replace(state, phase=PHASE_ARRIVED, last_cue_t=now), Cue("arrived", now)
    if state.last_cue_t is not None and now - state.last_cue_t < policy.period:
        return state, None
    cx, cy = cell.center
    b = ref.b_frac * cell.height
    if 2.0 * abs(tip.y - cy) > b:
        kind = "up" if tip.y > cy else "down"
        return replace(state, phase=PHASE_VERTICAL, last_cue_t=now), Cue(kind, now)
    kind = "right" if tip.x < cx else "left"
    return replace(state, phase=PHASE_HORIZONTAL, last_cue_t=now), Cue(kind, now)
