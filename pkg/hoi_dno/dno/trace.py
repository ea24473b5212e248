"""
Optimization trace CSV

Columns: iteration, total, objective, one column per objective term
(sorted by name), decorrelation, difference, flips, wall_time.
"""

import csv
import logging
from pathlib import Path
from typing import List, Sequence, Union

from ..exceptions import ArtifactError
from .models import IterateRecord

logger = logging.getLogger(__name__)

FIXED_HEAD = ["iteration", "total", "objective"]
FIXED_TAIL = ["decorrelation", "difference", "flips", "wall_time"]


def trace_columns(records: Sequence[IterateRecord]) -> List[str]:
    terms = sorted({name for r in records for name in r.terms})
    return FIXED_HEAD + terms + FIXED_TAIL


def objective_trace(records: Sequence[IterateRecord], path: Union[str, Path], config_hash: str = "") -> Path:
    """
    Write the per-iteration log

    The config hash, when given, goes into a leading "# config_hash=..." line.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = trace_columns(records)
    with open(path, "w", encoding="utf-8", newline="") as f:
        if config_hash:
            f.write(f"# config_hash={config_hash}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for r in records:
            row = [r.iteration, repr(r.total), repr(r.objective)]
            row += [repr(r.terms.get(name, 0.0)) for name in columns[len(FIXED_HEAD):-len(FIXED_TAIL)]]
            row += [repr(r.decorrelation), repr(r.difference), r.flips, repr(r.wall_time)]
            writer.writerow(row)
    logger.info("✓ Saved trace of %d iterations to %s", len(records), path)
    return path


def read_trace(path: Union[str, Path]) -> List[IterateRecord]:
    """
    Parse a trace CSV

    Raises:
        FileNotFoundError: Missing file
        ArtifactError: Missing columns or malformed values
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Trace not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        lines = [line for line in f if not line.startswith("#")]
    reader = csv.DictReader(lines)
    fieldnames = reader.fieldnames or []
    missing = set(FIXED_HEAD + FIXED_TAIL) - set(fieldnames)
    if missing:
        raise ArtifactError(f"{path}: missing columns {sorted(missing)}")
    terms = [c for c in fieldnames if c not in FIXED_HEAD and c not in FIXED_TAIL]
    records = []
    for row_num, row in enumerate(reader, start=2):
        try:
            records.append(
                IterateRecord(
                    iteration=int(row["iteration"]),
                    total=float(row["total"]),
                    objective=float(row["objective"]),
                    terms={name: float(row[name]) for name in terms},
                    decorrelation=float(row["decorrelation"]),
                    difference=float(row["difference"]),
                    flips=int(row["flips"]),
                    wall_time=float(row["wall_time"]),
                )
            )
        except (TypeError, ValueError) as e:
            raise ArtifactError(f"{path}:{row_num}: {e}")
    return records


def trace_config_hash(path: Union[str, Path]) -> str:
    """The config hash recorded in a trace's comment line, or ''"""
    with open(path, "r", encoding="utf-8") as f:
        first = f.readline().strip()
    return first.split("=", 1)[1] if first.startswith("# config_hash=") else ""
