"""Numerical laboratory for translating solitons of the mean curvature flow in R^3.

Modules
-------
chartlab   finite-difference geometry of parametrized surface patches
zoo        exemplar translators (grim reaper, rotational, graphical)
verify     identity residuals and convergence orders
curves     planar curves and curve shortening flow
topo       level curves, spherical caps, Gauss map degree
planes     moving-plane symmetry sweeps
mesh       triangle meshes and discrete curvature
meshio     OBJ / PLY input and output
cli        command line front end
"""
from ._accel import USE_NUMBA, backend_name
from .errors import *  # noqa: F401,F403

__version__ = "0.1.0"
