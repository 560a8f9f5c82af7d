"""Simulation of a driven spin-1 color center with large transverse zero-field splitting.

Submodules
----------
spinops       spin-1 operators, states and basis helpers
noise         exact-update Ornstein-Uhlenbeck noise channels
hamiltonians  lab / rotating-frame Hamiltonians and analytic eigen-systems
effective     closed-form two-level models
propagator    piecewise-constant matrix-exponential time stepping
ensemble      Monte Carlo averaging and coherence-time extraction
experiments   canned dephasing and AC-sensing protocols
cli           command-line front end
"""

__version__ = "0.1.0"
