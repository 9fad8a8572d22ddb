"""Figure regeneration from monitored-circuit simulation CSV output.

This package is a read-only consumer of the result tables written by the
simulation harness (``miptsim simulate``).  It talks to the simulation
side only through the CSV schema; it performs no numerical analysis
beyond the coordinate transforms needed for display.
"""

from .schema import CSV_COLUMNS, SchemaError, read_table
from .figures import FIGURE_KINDS, PlotJob, render

__all__ = [
    "CSV_COLUMNS",
    "SchemaError",
    "read_table",
    "FIGURE_KINDS",
    "PlotJob",
    "render",
]

__version__ = "0.1.0"
