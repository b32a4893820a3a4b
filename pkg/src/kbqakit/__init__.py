"""Toolkit for building and evaluating KBQA, MRC, and IR datasets over a knowledge graph."""

__version__ = "0.1.0"
