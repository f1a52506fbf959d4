"""STL task specifications compiled to MILPs over timed piecewise-linear paths."""

__version__ = "0.1.0"
