"""Deformations of locally free complexes on finite ringed posets.

Exact arithmetic over finite rings, Cech computations on Alexandrov sites,
obstruction classes of deformations along square-zero extensions, traces and
determinant lines, and a batch harness that checks their compatibilities.
"""

__version__ = "0.1.0"
