"""O(N) convolution with ``exp(-|y_i - y_j|)`` on a monotone point set.

For nondecreasing ``y`` the sums::

    sym_i  = sum_j          exp(-|y_i - y_j|) w_j dxi
    asym_i = sum_j sign(i-j) exp(-|y_i - y_j|) w_j dxi      (sign(0) = 0)

split into a forward part ``F_i = sum_{j<=i}`` and a backward part
``B_i = sum_{j>=i}``, each obeying a first-order recursion whose factors
``exp(-(y_i - y_{i-1}))`` never exceed one. Then ``sym = F + B - w dxi`` and
``asym = F - B``.

With the ``sign(0) = 0`` diagonal, ``sym`` and ``asym`` coincide with the
trapezoidal rule applied on each side of ``xi_i`` (up to the half weights
at the two ends of the grid, where the integrands have decayed).
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = ["kernel_convolve", "kernel_direct", "MONOTONE_TOL"]

# absolute decrease of y tolerated as rounding noise (plateaus at collisions)
MONOTONE_TOL = 1e-9


@njit(cache=True)
def _scan(decay, w, dxi, sym, asym):
    k, n = w.shape
    fwd = np.empty(n)
    for c in range(k):
        acc = 0.0
        for i in range(n):
            if i > 0:
                acc *= decay[i - 1]
            acc += w[c, i] * dxi
            fwd[i] = acc
        acc = 0.0
        for i in range(n - 1, -1, -1):
            if i < n - 1:
                acc *= decay[i]
            acc += w[c, i] * dxi
            sym[c, i] = fwd[i] + acc - w[c, i] * dxi
            asym[c, i] = fwd[i] - acc


def kernel_convolve(y, w, dxi: float = 1.0, monotone_tol: float = MONOTONE_TOL):
    """Symmetric and antisymmetric exponential-kernel sums in O(N).

    ``w`` may be one weight array of length N or a stack of shape (k, N);
    the outputs have the same shape. Raises ``ValueError`` if ``y``
    decreases by more than ``monotone_tol`` anywhere. Smaller decreases are
    treated as ties.
    """
    y = np.ascontiguousarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    single = w.ndim == 1
    w2 = np.ascontiguousarray(np.atleast_2d(w))
    if y.ndim != 1 or w2.shape[1] != y.size:
        raise ValueError(f"shape mismatch: y {y.shape}, w {w.shape}")
    dy = np.diff(y)
    if dy.size and dy.min() < -monotone_tol:
        raise ValueError(
            f"y must be nondecreasing (largest decrease {-dy.min():.3g})")
    decay = np.exp(-np.maximum(dy, 0.0))
    sym = np.empty_like(w2)
    asym = np.empty_like(w2)
    if y.size:
        _scan(decay, w2, float(dxi), sym, asym)
    if single:
        return sym[0], asym[0]
    return sym, asym


def kernel_direct(y, w, dxi: float = 1.0):
    """O(N^2) reference summation of the same sums."""
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    idx = np.arange(y.size)
    k = np.exp(-np.abs(y[:, None] - y[None, :]))
    sgn = np.sign(idx[:, None] - idx[None, :])
    return (k @ w) * dxi, ((sgn * k) @ w) * dxi
