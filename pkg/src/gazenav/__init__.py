"""Deterministic engine, simulator, and demo for gaze-driven graph navigation."""

from .engine import (
    EngineEvent,
    EngineState,
    GazeSample,
    NavEngine,
    OverlayFrame,
    Technique,
    TechniqueConfig,
)
from .generate import generate_small_world, layout_force_directed, load_metro, make_metro_graph
from .graph import Graph, GraphError, Link, Node, Subpath, extract_subpath, load_graph
from .paths import TaskPath, sample_task_path
from .simulate import ExperimentPlan, TrialResult, run_experiment, run_trial
from .tasks import (
    SelectionState,
    TaskRules,
    TracingState,
    advance_selection,
    advance_tracing,
    trial_complete,
)
from .trajectory import TrajectoryProfile, gen_trajectory

__version__ = "0.1.0"
