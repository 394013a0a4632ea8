"""Numerical laboratory for the total-variation instability of the Godunov scheme.

The u-equation uses the flux f(u) = ln(nu + mu e^u), for which the upwind scheme
is linearised by a discrete Cole-Hopf transform.  The v-equation is linear
advection at speed 1/2 driven by g(u)_x.
"""

from godunov_tv.flux import FluxParams, ConfigError
from godunov_tv.profile import Profile, total_variation

__all__ = ["FluxParams", "ConfigError", "Profile", "total_variation"]
__version__ = "0.1.0"
