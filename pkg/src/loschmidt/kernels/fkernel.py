"""Time-integration kernel and its frequency derivatives.

    F_m(w, t) = int_0^t (t - s) (-i s)^m exp(-i w s) ds

F_0 is the closed form ``(1 - exp(-i w t))/w**2 - i t/w``; F_m is its m-th
derivative with respect to ``w``.
"""
from __future__ import annotations

import math

import numpy as np

SERIES_TERMS = 48


def _series(w, t, m):
    u = w * t
    acc = np.zeros(np.broadcast(u, t).shape, dtype=complex)
    term = np.ones_like(acc)
    for k in range(SERIES_TERMS):
        acc = acc + term / ((m + k + 1) * (m + k + 2))
        term = term * (-1j * u) / (k + 1)
    return acc * (-1j) ** m * t ** (m + 2)


def _closed(w, t, m):
    u = w * t
    if m == 0:
        # 1 - exp(-iu) - iu; half-angle form for the real part and extended
        # precision for sin(u) - u, which cancels at small u
        ul = u.astype(np.longdouble)
        num = 2.0 * np.sin(0.5 * u) ** 2 + 1j * (np.sin(ul) - ul).astype(float)
        return num / w ** 2
    e = np.exp(-1j * u)
    out = -1j * t * (-1) ** m * math.factorial(m) / w ** (m + 1)
    for k in range(m + 1):
        d = (1.0 - e) if k == 0 else -((-1j * t) ** k) * e
        out = out + math.comb(m, k) * d * (-1) ** (m - k) * math.factorial(m - k + 1) / w ** (m - k + 2)
    return out


def kernel(omega, t, m: int = 0, series_below: float = 2.0) -> np.ndarray:
    """F_m(omega, t), broadcasting ``omega`` against ``t``.

    Parameters
    ----------
    omega, t : array_like
        Real frequencies and nonnegative times (broadcast together).
    m : int
        Derivative order.
    series_below : float
        The power series in ``omega*t`` is used where ``|omega*t|`` is
        below this value, the closed form elsewhere.
    """
    w = np.asarray(omega, dtype=float)
    t = np.asarray(t, dtype=float)
    w, t = np.broadcast_arrays(w, t)
    small = np.abs(w * t) < series_below
    out = np.empty(w.shape, dtype=complex)
    if np.any(small):
        out[small] = _series(w[small], t[small], m)
    big = ~small
    if np.any(big):
        out[big] = _closed(w[big], t[big], m)
    return out


def f_kernel(x, y, t, m: int = 0):
    """F(x, y, t) = (1 - exp(-i(x+y)t))/(x+y)**2 - i t/(x+y).

    A Taylor series replaces the closed form for ``|x+y|*t < 1e-4``.
    """
    val = kernel(np.add(x, y), t, m, series_below=1e-4)
    return val[()] if val.ndim == 0 else val


def linear_coefficient(omega, m: int):
    """Coefficient of ``-i t`` in the large-t form of F_m: (-1)**m m!/omega**(m+1)."""
    return (-1) ** m * math.factorial(m) / np.asarray(omega, dtype=float) ** (m + 1)
