"""Automated logging-statement pipeline: corpus, gate, agents, metrics."""

__version__ = "0.1.0"
