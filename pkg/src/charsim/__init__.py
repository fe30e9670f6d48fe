"""Physics-simulated characters that track reference motions, with live steering."""

__version__ = "0.1.0"
