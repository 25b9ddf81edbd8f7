"""Figure rendering for the limited-feedback alignment simulator CSVs."""

from .reader import EXPECTED_COLUMNS, SchemaError, read_rows
from .render import KINDS, PlotSpec, build_figure, render

__version__ = "0.1.0"
