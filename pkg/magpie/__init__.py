"""MAGPIE: compiler flags, algorithm parameters and source statements as one edit space."""

__version__ = "0.1.0"
