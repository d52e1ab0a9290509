"""Deterministic quadrature helpers for imaginary-frequency integrals.

The dispersion integrands peak near the material/atomic resonances and
decay algebraically or exponentially beyond them, so the semi-infinite
xi axis is mapped onto t in (0, 1) via xi = scale * t / (1 - t) and
integrated with Gauss-Legendre nodes.  The node count doubles until the
value is stable to ``rel_tol``; summation order is fixed (ascending
node) for bit-reproducibility.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import ConvergenceError


@lru_cache(maxsize=32)
def _gl_nodes(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    # map [-1, 1] -> (0, 1)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=8)
def gauss_laguerre(n: int):
    return np.polynomial.laguerre.laggauss(n)


def imag_axis_quadrature(
    f,
    scale: float,
    rel_tol: float = 1.0e-4,
    n0: int = 60,
    max_doublings: int = 6,
):
    """Integrate f(xi) over xi in (0, inf) with the rational map above.

    ``f`` must accept a 1-d array of xi values and return like-shaped
    values.  Returns (value, estimated relative error).  Raises
    ConvergenceError carrying the last value if doubling the nodes never
    brings the change below ``rel_tol``.
    """
    prev = None
    n = n0
    for _ in range(max_doublings + 1):
        t, w = _gl_nodes(n)
        xi = scale * t / (1.0 - t)
        jac = scale / (1.0 - t) ** 2
        val = float(np.sum(f(xi) * w * jac))
        if prev is not None:
            denom = max(abs(val), 1e-300)
            change = abs(val - prev) / denom
            if change <= rel_tol:
                return val, change
        prev = val
        n *= 2
    raise ConvergenceError(
        f"integral did not stabilise to {rel_tol} within {n0 * 2**max_doublings} nodes",
        partial=prev,
    )
