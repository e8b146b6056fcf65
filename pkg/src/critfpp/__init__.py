"""Critical first-passage percolation on the triangular lattice."""
__version__ = "0.1.0"
