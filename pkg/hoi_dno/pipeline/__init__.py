"""
Optimization runs: two-phase pipeline, ablation modes, evaluation and batch driver
"""

from .artifacts import (
    METRICS_FILE,
    PHASE1_TRACE,
    PHASE2_TRACE,
    PLOT_COLUMNS,
    SEQUENCE_FILE,
    SPEC_FILE,
    contact_trace_rows,
    read_run,
    run_hash,
    write_metrics,
    write_plot_data,
    write_run,
)
from .context import RunContext, default_goals, root_after, root_at
from .evaluation import (
    GROUND_TRUTH,
    evaluate_corpus,
    evaluate_realism,
    evaluate_run,
    evaluate_run_dir,
    load_run_sequences,
    run_generated,
    train_classifier,
)
from .models import MODES, FrozenChannels, Mode, RunResult, RunSpec
from .phases import (
    apply_frozen,
    freeze_channels,
    frozen_fix,
    frozen_targets,
    goals_window,
    nearest_surface_targets,
    run_classifier_guidance,
    run_inference_only,
    run_nn_contacts,
    run_phase1,
    run_phase1_inference_phase2_dno,
    run_phase2,
    run_single_phase,
    run_two_phase,
)
from .runner import execute, run, run_batch, run_dir_name, seed_specs

__all__ = [
    "FrozenChannels",
    "GROUND_TRUTH",
    "METRICS_FILE",
    "MODES",
    "Mode",
    "PHASE1_TRACE",
    "PHASE2_TRACE",
    "PLOT_COLUMNS",
    "RunContext",
    "RunResult",
    "RunSpec",
    "SEQUENCE_FILE",
    "SPEC_FILE",
    "apply_frozen",
    "contact_trace_rows",
    "default_goals",
    "evaluate_corpus",
    "evaluate_realism",
    "evaluate_run",
    "evaluate_run_dir",
    "execute",
    "freeze_channels",
    "frozen_fix",
    "frozen_targets",
    "goals_window",
    "load_run_sequences",
    "nearest_surface_targets",
    "read_run",
    "root_after",
    "root_at",
    "run",
    "run_batch",
    "run_classifier_guidance",
    "run_dir_name",
    "run_generated",
    "run_hash",
    "run_inference_only",
    "run_nn_contacts",
    "run_phase1",
    "run_phase1_inference_phase2_dno",
    "run_phase2",
    "run_single_phase",
    "run_two_phase",
    "seed_specs",
    "train_classifier",
    "write_metrics",
    "write_plot_data",
    "write_run",
]
