"""Figures and tables over dagcast sweep CSVs.

Consumes only the simulator's published CSV schema; all values shown
are the CSV's own measurements (or exact means across seeds).
"""

from .figures import plot_delay_vs_lambda
from .sweep import EmptySweep, PlotsError, SchemaError, SweepRow, SweepTable, SWEEP_HEADER
from .tables import render_table

__all__ = [
    "EmptySweep",
    "PlotsError",
    "SchemaError",
    "SweepRow",
    "SweepTable",
    "SWEEP_HEADER",
    "plot_delay_vs_lambda",
    "render_table",
]
