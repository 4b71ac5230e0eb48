"""Direct order-by-order cumulant expansion of log G.

The order-n term is a sum over momentum tuples (q_2, ..., q_{n+1}) and split
indices j of two chains of propagators joined at their end vertices.  Each
chain's frequency integral is done by residues; the time integrals then
reduce to the kernel F_m of :mod:`loschmidt.kernels.fkernel`.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import kernels
from .errors import InvalidOrderError, ResourceLimitError, SingularPairError
from .spectral import EQUAL_RTOL, ModeTable, QuenchSpec
from .traces import AmplitudeTrace, CumulantTerm

DEFAULT_ORDER_CAP = 5


def delta_e1(modes: ModeTable, quench: QuenchSpec) -> float:
    """First-order energy shift, the ground-state expectation of the quench."""
    dh = modes.effective_dh(quench.delta_h)
    return float(-dh / modes.n * np.sum(np.cos(2.0 * modes.theta)))


def first_order(modes: ModeTable, quench: QuenchSpec, times=None) -> CumulantTerm:
    t = quench.t if times is None else np.asarray(times, dtype=float)
    de = delta_e1(modes, quench)
    return CumulantTerm(1, t, -1j * de * t, de, quench.delta_h)


def _check_pairs(omega_values):
    w = np.asarray(omega_values, dtype=float)
    s = w[:, None] + w[None, :]
    scale = np.maximum(1.0, np.abs(w[:, None]) + np.abs(w[None, :]))
    if np.any(np.abs(s) <= EQUAL_RTOL * scale):
        raise SingularPairError("two mode energies sum to zero; pair denominator vanishes")


def second_order(modes: ModeTable, quench: QuenchSpec, times=None) -> CumulantTerm:
    """Second-order energy shift and f_2(t) as explicit double sums."""
    t = quench.t if times is None else np.asarray(times, dtype=float)
    _check_pairs(modes.cls_energy)
    n = modes.n
    dh = modes.effective_dh(quench.delta_h)
    s2 = np.sin(modes.theta[:, None] + modes.theta[None, :]) ** 2
    lsum = (modes.lam[:, None] + modes.lam[None, :]).ravel()
    w = s2.ravel()
    de = float(-(dh ** 2) / n ** 2 * np.sum(w / lsum))
    u = 2.0 * np.outer(lsum, t)
    one_minus = 2.0 * np.sin(0.5 * u) ** 2 + 1j * np.sin(u)
    f = dh ** 2 / n ** 2 * ((w / (2.0 * lsum ** 2)) @ one_minus)
    return CumulantTerm(2, t, -1j * de * t - f, de, quench.delta_h)


def count_diagrams(n: int) -> int:
    """Number of time-ordered bubble diagrams at order n."""
    if n < 2:
        raise InvalidOrderError("diagram counting needs n >= 2")
    return 2 ** (n - 1) * math.factorial(n) * sum(math.comb(n - 2, k) for k in range(n - 1))


def _prefactor(modes, quench, n):
    dh = modes.effective_dh(quench.delta_h)
    return -(2.0 ** (n - 1)) * dh ** n / modes.n ** n


def _chain_amplitude(theta, qq, j):
    n = len(qq)
    sn = lambda a, b: math.sin(theta[a] + theta[b])
    cs = lambda a, b: math.cos(theta[a] + theta[b])
    amp = sn(qq[-1], qq[0]) * sn(qq[j - 2], qq[j - 1])
    for i in range(0, j - 2):
        amp *= cs(qq[i], qq[i + 1])
    for i in range(j - 1, n - 1):
        amp *= cs(qq[i], qq[i + 1])
    return amp


def tuple_contribution(qq, j: int, modes: ModeTable, quench: QuenchSpec, t) -> complex:
    """Contribution of one momentum tuple and split to the order-n term of log G.

    Parameters
    ----------
    qq : sequence of int
        Grid indices of (q_2, ..., q_{n+1}); n = len(qq) >= 2.
    j : int
        Split index in 2..n: the first chain carries q_2..q_j, the second
        q_{j+1}..q_{n+1}.
    t : float or array
    """
    qq = tuple(int(x) for x in qq)
    n = len(qq)
    if n < 2 or not 2 <= j <= n:
        raise InvalidOrderError("need len(qq) >= 2 and 2 <= j <= len(qq)")
    amp = _chain_amplitude(modes.theta, qq, j)
    w = modes.cls_energy
    b1 = kernels.residue_coefficients([modes.cls[x] for x in qq[: j - 1]], w)
    b2 = kernels.residue_coefficients([modes.cls[x] for x in qq[j - 1:]], w)
    tt = np.asarray(t, dtype=float)
    val = np.zeros(tt.shape, dtype=complex)
    for a, r, x in b1:
        for b, r2, y in b2:
            val = val + x * y * kernels.kernel(w[a] + w[b], tt, r + r2)
    out = _prefactor(modes, quench, n) * amp * val
    return complex(out) if out.ndim == 0 else out


def _tree_sum(parts):
    parts = list(parts)
    while len(parts) > 1:
        nxt = [parts[i] + parts[i + 1] for i in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            nxt.append(parts[-1])
        parts = nxt
    return parts[0]


def tuple_weights(modes: ModeTable, n: int, workers: int = 1, backend=None) -> np.ndarray:
    """Summed residue weights ``acc[a, b, m]`` over all order-n tuples.

    Work is split into one chunk per leading momentum and merged by a fixed
    pairwise reduction, so the result does not depend on ``workers``.
    """
    acc_fn = kernels.accumulate if backend is None else backend
    chunks = [(i, i + 1) for i in range(modes.n)]
    call = lambda c: acc_fn(modes.theta, modes.cls, modes.cls_energy, n, c[0], c[1])
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(call, chunks))
    else:
        parts = [call(c) for c in chunks]
    return _tree_sum(parts)


def nth_order(modes: ModeTable, quench: QuenchSpec, n: int, times=None, workers: int = 1,
              cap: int = DEFAULT_ORDER_CAP) -> CumulantTerm:
    """Order-n cumulant term from the full tuple sum.

    Parameters
    ----------
    n : int
        Order, 1 <= n <= cap.
    workers : int
        Threads used for the tuple enumeration.
    cap : int
        Maximum admissible order (N**n tuples are enumerated).
    """
    t = quench.t if times is None else np.asarray(times, dtype=float)
    if n < 1:
        raise InvalidOrderError("order must be >= 1")
    if n > cap:
        raise ResourceLimitError(f"order {n} exceeds the configured cap {cap}")
    if n == 1:
        return first_order(modes, quench, t)
    if n >= 4:
        warnings.warn("the two-chain tuple sum omits rings with several time maxima from order 4 on",
                      RuntimeWarning, stacklevel=2)
    _check_pairs(modes.cls_energy)
    acc = tuple_weights(modes, n, workers)
    w = modes.cls_energy
    om = w[:, None] + w[None, :]
    pref = _prefactor(modes, quench, n)
    total = np.zeros(t.shape, dtype=complex)
    de = 0.0
    for m in range(acc.shape[2]):
        c = acc[:, :, m]
        nz = c != 0.0
        if not np.any(nz):
            continue
        fk = kernels.kernel(om[nz][:, None], t[None, :], m)
        total = total + c[nz] @ fk
        de += float(np.sum(c[nz] * kernels.linear_coefficient(om[nz], m)))
    return CumulantTerm(n, t, pref * total, pref * de, quench.delta_h)


def log_g_series(modes: ModeTable, quench: QuenchSpec, max_order: int, times=None,
                 workers: int = 1, cap: int = DEFAULT_ORDER_CAP) -> AmplitudeTrace:
    """exp of the cumulant series truncated at ``max_order``."""
    t = quench.t if times is None else np.asarray(times, dtype=float)
    if max_order < 0:
        raise InvalidOrderError("max_order must be >= 0")
    if max_order > cap:
        raise ResourceLimitError(f"order {max_order} exceeds the configured cap {cap}")
    log_g = np.zeros(t.shape, dtype=complex)
    for n in range(1, max_order + 1):
        log_g = log_g + nth_order(modes, quench, n, t, workers, cap).log_g
    return AmplitudeTrace.from_log(f"cumulant-{max_order}", t, log_g)
