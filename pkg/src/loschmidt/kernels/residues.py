"""Partial fractions of products of simple propagator factors.

For poles ``w_1..w_L`` (repeats allowed) the function

    h(s) = sum over poles a of Res_{p=a} exp(-i p s) / prod_i (p - w_i)

is written as ``sum_{a,r} beta[a, r] * (-i s)**r * exp(-i a s)``.  The
coefficients follow from the Taylor series of the remaining factors at each
pole, so repeated energies are handled exactly.
"""
from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np


def residue_coefficients(poles, values=None):
    """Coefficients ``beta`` for the multiset ``poles``.

    Parameters
    ----------
    poles : sequence
        Pole labels.  If ``values`` is given, labels index into it;
        otherwise the labels are the pole energies themselves.
    values : sequence of float, optional

    Returns
    -------
    list of (label, r, beta)
    """
    labels = sorted(set(poles))
    mult = {a: list(poles).count(a) for a in labels}
    val = (lambda a: a) if values is None else (lambda a: values[a])
    out = []
    for a in labels:
        m = mult[a]
        ser = np.zeros(m)
        ser[0] = 1.0
        for b in labels:
            if b == a:
                continue
            d = val(a) - val(b)
            mb = mult[b]
            fac = np.array([math.comb(mb + k - 1, k) * (-1) ** k * d ** (-mb - k) for k in range(m)])
            ser = np.convolve(ser, fac)[:m]
        for r in range(m):
            out.append((a, r, ser[m - 1 - r] / math.factorial(r)))
    return out


def accumulate_python(theta, cls, cls_energy, n, start, stop):
    """Residue-weighted amplitude sums for order-n tuples with q2 in [start, stop).

    Returns ``acc`` of shape (K, K, n-1) with ``acc[a, b, m]`` the summed
    weight of ``F_m(w_a + w_b, t)``, where K is the number of energy classes.
    """
    theta = np.asarray(theta, dtype=float)
    cls = np.asarray(cls)
    nmodes = len(theta)
    k = len(cls_energy)
    tsum = theta[:, None] + theta[None, :]
    sn = np.sin(tsum)
    cs = np.cos(tsum)
    values = tuple(float(x) for x in cls_energy)

    @lru_cache(maxsize=None)
    def pf(key):
        return residue_coefficients(key, values)

    acc = np.zeros((k, k, max(n - 1, 1)))
    for q2 in range(start, stop):
        for rest in itertools.product(range(nmodes), repeat=n - 1):
            qq = (q2,) + rest
            cl = [int(cls[x]) for x in qq]
            head = sn[qq[-1], qq[0]]
            if head == 0.0:
                continue
            for j in range(2, n + 1):
                amp = head * sn[qq[j - 2], qq[j - 1]]
                for i in range(0, j - 2):
                    amp *= cs[qq[i], qq[i + 1]]
                for i in range(j - 1, n - 1):
                    amp *= cs[qq[i], qq[i + 1]]
                if amp == 0.0:
                    continue
                b1 = pf(tuple(sorted(cl[: j - 1])))
                b2 = pf(tuple(sorted(cl[j - 1:])))
                for a, r, x in b1:
                    for b, r2, y in b2:
                        acc[a, b, r + r2] += amp * x * y
    return acc
