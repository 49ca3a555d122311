"""Figure rendering for cmx study and score-distribution CSV files."""
from .render import KINDS, PlotSpec, load_dist, load_study, render

__all__ = ["KINDS", "PlotSpec", "load_dist", "load_study", "render"]

__version__ = "0.1.0"
