"""brushnav: closed-loop painting-navigation engine, simulator and metrics."""

from .geometry import (
    BoardRegistration,
    Homography,
    MarkerDetection,
    Point2,
    apply_homography,
    compose_homography,
    homography_unit_square,
    register_board,
    select_board_corners,
)
from .grid import Cell, CellCode, GridSpec, ReferenceArea, arrival_check, cell_to_code, code_to_cell
from .guidance import Cue, GuidanceState, PromptPolicy, next_cue, parse_command
from .metrics import (
    FillMetrics,
    Heatmap,
    TimingStats,
    TrajectoryMetrics,
    fill_metrics,
    heatmap,
    relative_movement_distance,
    timing_stats,
)
from .session_io import load_record, replay, save_record
from .sim import (
    AgentModel,
    Sample,
    Session,
    SessionConfig,
    SessionRecord,
    run_batch,
    run_session,
    sweep,
)
from .server import serve
from .tipdetect import (
    DetectorChannel,
    DetectorNoiseModel,
    EdgeChain,
    TipDetection,
    curvature_profile,
    simulate_detection,
    tip_center,
    trace_edge_chain,
)

__version__ = "0.1.0"
