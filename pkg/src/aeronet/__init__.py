"""Topology control for traffic-aware multi-tier aerial networks."""

__version__ = "0.1.0"
