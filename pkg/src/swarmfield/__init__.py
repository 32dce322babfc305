"""Attacker-defender swarm engagements as population dynamics."""

__version__ = "0.1.0"
