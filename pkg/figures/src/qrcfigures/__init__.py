"""Figure rendering for qrcbench benchmark CSV outputs."""

from .loading import ManifestError, RunData, SchemaError, load_run
from .render import FIGURES, PlotSpec, render

__version__ = "0.1.0"
