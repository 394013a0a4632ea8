"""One step of the upwind scheme for u and v with Delta t = Delta x = 1."""

from __future__ import annotations

import numpy as np

from godunov_tv.flux import FluxParams, f_eval


def godunov_update_u(u_row, p: FluxParams) -> np.ndarray:
    """u_j - [f(u_j) - f(u_{j-1})]; the output starts one cell right of the input."""
    u = np.asarray(u_row, dtype=float)
    if u.size < 2:
        raise ValueError("u row needs at least 2 entries")
    fu = f_eval(u, p)
    return u[1:] - (fu[1:] - fu[:-1])


def godunov_update_v(v_row, u_row, g, p: FluxParams) -> np.ndarray:
    """lam v_{j-1} + (1-lam) v_j - [g(u_j) - g(u_{j-1})] on the aligned rows.

    ``g`` is any callable acting elementwise.  The output starts one cell right
    of the input.
    """
    v = np.asarray(v_row, dtype=float)
    u = np.asarray(u_row, dtype=float)
    if v.shape != u.shape:
        raise ValueError(f"misaligned rows: v{v.shape} vs u{u.shape}")
    if v.size < 2:
        raise ValueError("rows need at least 2 entries")
    gu = np.asarray(g(u), dtype=float)
    return p.lam * v[:-1] + (1.0 - p.lam) * v[1:] - (gu[1:] - gu[:-1])
