"""
Corpus-level aggregation of per-run metrics

Every run directory holds a metrics.json; the numeric leaves are loaded into
an in-memory duckdb table (mode, seed, metric, value) and summarized as
mean ± std rows per mode.
"""

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import duckdb

from ..exceptions import ArtifactError

logger = logging.getLogger(__name__)

METRICS_FILE = "metrics.json"


@dataclass
class MetricSummary:
    mode: str
    metric: str
    mean: float
    std: float
    count: int

    def formatted(self, digits: int = 2) -> str:
        return f"{self.mean:.{digits}f} ± {self.std:.{digits}f}"


def flatten_metrics(payload: Dict[str, Any]) -> Dict[str, float]:
    """Numeric leaves of a metrics.json payload; nested groups are flattened one level"""
    values: Dict[str, float] = {}
    for key, value in payload.items():
        if isinstance(value, dict):
            for inner, leaf in value.items():
                if isinstance(leaf, (int, float)) and not isinstance(leaf, bool):
                    values[inner] = float(leaf)
        elif isinstance(value, (int, float)) and not isinstance(value, bool) and key != "seed":
            values[key] = float(value)
    return values


def load_run_metrics(run_dirs: Iterable[Union[str, Path]]) -> List[Tuple[str, int, str, float]]:
    """
    (mode, seed, metric, value) rows from the metrics.json of each run

    Raises:
        FileNotFoundError: A run directory without metrics.json
        ArtifactError: A metrics.json without mode
    """
    rows = []
    for run_dir in run_dirs:
        path = Path(run_dir) / METRICS_FILE
        if not path.exists():
            raise FileNotFoundError(f"Metrics not found: {path}")
        with open(path, "r", encoding="utf-8") as f:
            payload = json.load(f)
        if "mode" not in payload:
            raise ArtifactError(f"{path}: missing 'mode'")
        seed = int(payload.get("seed", 0))
        for metric, value in flatten_metrics(payload).items():
            rows.append((str(payload["mode"]), seed, metric, value))
    return rows


def aggregate_runs(
    run_dirs: Iterable[Union[str, Path]],
    conn: Optional[duckdb.DuckDBPyConnection] = None,
) -> List[MetricSummary]:
    """
    Mean, sample std and count of every metric per mode

    Args:
        run_dirs: Run directories holding metrics.json
        conn: Connection to use; an in-memory database when omitted

    Returns:
        Summaries sorted by mode then metric
    """
    rows = load_run_metrics(run_dirs)
    conn = conn or duckdb.connect(":memory:")
    conn.execute("DROP TABLE IF EXISTS run_metrics")
    conn.execute("CREATE TABLE run_metrics (mode VARCHAR, seed INTEGER, metric VARCHAR, value DOUBLE)")
    if rows:
        conn.executemany("INSERT INTO run_metrics VALUES (?, ?, ?, ?)", rows)
    query = """
        SELECT mode, metric, AVG(value), COALESCE(STDDEV_SAMP(value), 0.0), COUNT(*)
        FROM run_metrics
        GROUP BY mode, metric
        ORDER BY mode, metric
    """
    results = conn.execute(query).fetchall()
    logger.info("aggregated %d metric rows into %d summaries", len(rows), len(results))
    return [MetricSummary(mode, metric, float(mean), float(std), int(count)) for mode, metric, mean, std, count in results]


def summary_table(summaries: Sequence[MetricSummary], metrics: Optional[Sequence[str]] = None) -> List[Dict[str, str]]:
    """One row per mode with a 'mean ± std' cell per metric"""
    columns = list(metrics) if metrics else sorted({s.metric for s in summaries})
    table: Dict[str, Dict[str, str]] = {}
    for s in summaries:
        if s.metric in columns:
            table.setdefault(s.mode, {"mode": s.mode})[s.metric] = s.formatted()
    return [{c: row.get(c, "") for c in ["mode"] + columns} for row in table.values()]


def export_table(summaries: Sequence[MetricSummary], path: Union[str, Path], metrics: Optional[Sequence[str]] = None) -> Path:
    """Write the per-mode summary as a CSV"""
    rows = summary_table(summaries, metrics)
    columns = ["mode"] + (list(metrics) if metrics else sorted({s.metric for s in summaries}))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    logger.info("✓ Saved summary of %d modes to %s", len(rows), path)
    return path
