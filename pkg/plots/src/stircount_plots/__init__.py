"""Figure scripts for the simulator CLI's CSV artifacts."""

__version__ = "0.1.0"
