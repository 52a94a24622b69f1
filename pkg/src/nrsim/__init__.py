"""Seed-reproducible link- and system-level simulator for LTE to NR migration studies."""

__version__ = "0.1.0"
