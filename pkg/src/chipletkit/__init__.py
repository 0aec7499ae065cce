"""Cost-driven partitioning of block-level netlists into 2.5D chiplet systems."""

__version__ = "0.1.0"
