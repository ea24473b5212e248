"""
Diffusion noise optimization: optimizer, regularizers and traces
"""

from .models import DnoConfig, DnoResult, IterateRecord, NoiseState
from .optimizer import dno_optimize
from .regularizers import decorrelation_reg, decorrelation_terms, difference_penalty
from .trace import objective_trace, read_trace, trace_columns, trace_config_hash

__all__ = [
    "DnoConfig",
    "DnoResult",
    "IterateRecord",
    "NoiseState",
    "decorrelation_reg",
    "decorrelation_terms",
    "difference_penalty",
    "dno_optimize",
    "objective_trace",
    "read_trace",
    "trace_columns",
    "trace_config_hash",
]
