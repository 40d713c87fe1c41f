"""Simulated mirror-game groups: virtual players, a deep Q-learning cyber
player that learns to replace one of them, and coordination metrics."""

__version__ = "0.1.0"
