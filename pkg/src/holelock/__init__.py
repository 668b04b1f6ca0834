"""Design and simulation tools for locking a laser to a transient spectral hole.

Modules
-------
atomic     level schemes, saturation, steady-state and time-dependent populations
lineshape  inhomogeneous profiles, hole susceptibilities, multi-species sums
pdh        Pound-Drever-Hall signals, transfer function, choice of modulation index
drift      linear drift theory, drift thresholds and an ODE reference solver
loop       frequency-domain loop gain and the time-domain closed-loop simulator
analysis   Kramers-Kronig transform, heterodyne phase extraction, FID statistics, fidelity
"""
from .errors import NumericalError, ParameterError

__version__ = "0.1.0"

__all__ = ["NumericalError", "ParameterError", "__version__"]
