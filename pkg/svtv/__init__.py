"""svtv: Space-variant weighted Total Variation reconstruction for sparse-view
CT."""

__version__ = "0.0.1"
