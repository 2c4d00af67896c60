"""Simultaneous decoherence of conjugate observables: numerical kernels,
Gaussian closed forms, and equilibration metrics."""

__version__ = "0.1.0"
