"""Guided physics-based planning for reaching through clutter.

A deterministic SE(2) pushing simulator, kinodynamic RRT/KPIECE planners,
the guided planning loop with human/heuristic/NAMO/scripted action sources,
and a session service for live and parallel operator guidance.
"""

__version__ = "0.1.0"

from .geometry import (  # noqa: F401
    Box, Contact, Corridor, Disk, Pose2,
    min_enclosing_circle, normalize_angle, overlap, se2_distance, swept_corridor,
)
from .dynamics import (  # noqa: F401
    Control, SystemConfiguration, ValidityReport, Violation,
    check_validity, propagate, rollout_controls,
)
from .scene import (  # noqa: F401
    BodySpec, GoalSpec, ObjectInRegion, Physics, ReachGoalObject, Rect,
    RobotPoseSet, Scene, generate_random_scene, goal_satisfied,
    load_scene, parse_scene, save_scene, serialize_scene,
)
from .planners import (  # noqa: F401
    KPIECE, RRT, PlannerParams, PlannerRequest, plan,
)
from .grtc import (  # noqa: F401
    Budgets, GrtcOutcome, HighLevelAction, PlannerConfig,
    compute_approaching_states, execute_high_level_action, run_grtc,
)
from .strategies import (  # noqa: F401
    HeuristicStrategy, HumanBridgeStrategy, ImmediateGoal, NamoStrategy,
    OperatorScript, ScriptedStrategy, load_script, save_script,
    script_from_yaml, script_to_yaml,
)
from .service import Service, serve  # noqa: F401
