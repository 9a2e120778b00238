"""Single-qudit reservoir computing: dynamics, readout and benchmarks."""

__version__ = "0.1.0"
