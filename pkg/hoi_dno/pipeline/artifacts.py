"""
Run directory layout

    spec.json          the RunSpec plus the config hash
    phase1_trace.csv   phase 1 iterations (header only when the mode has none)
    phase2_trace.csv   phase 2 or single-phase iterations
    out.seq            the stitched sequence, prefix included
    metrics.json       evaluation of the generated frames
"""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple, Union

from ..dno import objective_trace, read_trace, trace_config_hash
from ..exceptions import ArtifactError
from ..representation import SequenceFile, load_sequence, save_sequence
from ..rig import RigDef
from ..run_config import canonical_hash
from .models import RunResult, RunSpec

logger = logging.getLogger(__name__)

SPEC_FILE = "spec.json"
PHASE1_TRACE = "phase1_trace.csv"
PHASE2_TRACE = "phase2_trace.csv"
SEQUENCE_FILE = "out.seq"
METRICS_FILE = "metrics.json"


def run_hash(spec: RunSpec, checkpoint_hash: str) -> str:
    """Hash of everything that determines a run's artifacts"""
    return canonical_hash({"spec": spec.to_dict(), "checkpoint": checkpoint_hash})


def _write_json(path: Path, payload: Dict[str, Any]) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=float) + "\n", encoding="utf-8")


def write_run(result: RunResult, rig: RigDef, out_dir: Union[str, Path]) -> Path:
    """Write every artifact of a finished run"""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / SPEC_FILE, {**result.spec.to_dict(), "config_hash": result.config_hash})
    objective_trace(result.phase1, out / PHASE1_TRACE, config_hash=result.config_hash)
    objective_trace(result.phase2, out / PHASE2_TRACE, config_hash=result.config_hash)
    meta = {
        "config_hash": result.config_hash,
        "mode": result.spec.mode.value,
        "prompt": result.spec.prompt,
        "seed": result.spec.seed,
        "prefix_frames": result.prefix_frames,
    }
    save_sequence(
        out / SEQUENCE_FILE,
        result.features,
        result.root,
        rig,
        object_mesh=result.spec.object_mesh or result.spec.shape,
        meta=meta,
    )
    write_metrics(result.metrics, out, result.config_hash)
    logger.info("✓ Saved run to %s", out)
    return out


def write_metrics(metrics: Dict[str, Any], out_dir: Union[str, Path], config_hash: str) -> Path:
    path = Path(out_dir) / METRICS_FILE
    _write_json(path, {**metrics, "config_hash": config_hash})
    return path


def read_run(run_dir: Union[str, Path], rig: RigDef) -> Tuple[RunSpec, SequenceFile, str]:
    """
    Load a run directory and check that its artifacts agree

    Returns:
        (spec, sequence, config hash)

    Raises:
        FileNotFoundError: Missing spec or sequence
        ArtifactError: Artifacts stamped with different config hashes, or a
            sequence posed on another rig
    """
    run_dir = Path(run_dir)
    spec_path = run_dir / SPEC_FILE
    if not spec_path.exists():
        raise FileNotFoundError(f"Run spec not found: {spec_path}")
    payload = json.loads(spec_path.read_text(encoding="utf-8"))
    config_hash = payload.pop("config_hash", "")
    spec = RunSpec.from_dict(payload)
    sequence = load_sequence(run_dir / SEQUENCE_FILE, rig=rig)
    recorded = sequence.header.get("meta", {}).get("config_hash", "")
    if recorded != config_hash:
        raise ArtifactError(f"{run_dir}: sequence hash {recorded[:12]} != spec hash {config_hash[:12]}")
    for name in (PHASE1_TRACE, PHASE2_TRACE):
        trace = run_dir / name
        if trace.exists() and trace_config_hash(trace) != config_hash:
            raise ArtifactError(f"{trace}: trace was written by another config")
    return spec, sequence, config_hash


PLOT_COLUMNS = ["run", "mode", "seed", "iteration", "contact", "flips", "objective"]


def contact_trace_rows(run_dir: Union[str, Path]) -> List[Dict[str, Any]]:
    """
    Per-iteration contact loss and bit flips of a run's human-centric trace

    Runs without phase 2 iterations yield no rows.
    """
    run_dir = Path(run_dir)
    spec_path = run_dir / SPEC_FILE
    if not spec_path.exists():
        raise FileNotFoundError(f"Run spec not found: {spec_path}")
    spec = json.loads(spec_path.read_text(encoding="utf-8"))
    return [
        {
            "run": run_dir.name,
            "mode": spec.get("mode", ""),
            "seed": spec.get("seed", 0),
            "iteration": r.iteration,
            "contact": r.terms.get("contact", 0.0),
            "flips": r.flips,
            "objective": r.objective,
        }
        for r in read_trace(run_dir / PHASE2_TRACE)
    ]


def write_plot_data(run_dirs: Sequence[Union[str, Path]], path: Union[str, Path]) -> Path:
    """One CSV of contact loss and flips per iteration for every run, sharing the iteration axis"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=PLOT_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for run_dir in run_dirs:
            writer.writerows(contact_trace_rows(run_dir))
    logger.info("✓ Saved plot data for %d runs to %s", len(run_dirs), path)
    return path
