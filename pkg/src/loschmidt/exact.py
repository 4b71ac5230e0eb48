"""Exact dense diagonalization of the spin chain.

Basis convention: computational sz product states, site j stored in bit
j-1 (site 1 least significant); bit value 0 means spin up (sz = +1).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegeneracyError, FitError, InvalidOrderError, ResourceLimitError
from .spectral import ChainSpec, QuenchSpec
from .traces import AmplitudeTrace, CumulantTerm

DEFAULT_CAP = 14
GAP_THRESHOLD = 1e-10


def _sz_diagonal(n: int, site: int) -> np.ndarray:
    idx = np.arange(2 ** n)
    return 1.0 - 2.0 * ((idx >> (site - 1)) & 1)


def parity_diagonal(n: int) -> np.ndarray:
    """Diagonal of the product of all sz."""
    idx = np.arange(2 ** n)
    pop = np.zeros_like(idx)
    for j in range(n):
        pop += (idx >> j) & 1
    return 1.0 - 2.0 * (pop & 1)


def build_h0(spec: ChainSpec, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Dense (real) chain Hamiltonian on 2**N states."""
    n = spec.n_sites
    if n > cap:
        raise ResourceLimitError(f"N = {n} exceeds the dense-diagonalization cap {cap}")
    dim = 2 ** n
    idx = np.arange(dim)
    h = np.zeros((dim, dim))
    g = spec.gamma
    for j in range(1, n + 1):
        k = j % n + 1
        bj = (idx >> (j - 1)) & 1
        bk = (idx >> (k - 1)) & 1
        # XX contributes 1, YY contributes -(+-1): same bits -> gamma, different -> 1
        amp = np.where(bj == bk, g, 1.0)
        flipped = idx ^ ((1 << (j - 1)) | (1 << (k - 1)))
        h[flipped, idx] += amp
        h[idx, idx] += spec.h * _sz_diagonal(n, j)
    return spec.coupling_sign * h


def build_v(spec: ChainSpec, quench: QuenchSpec) -> np.ndarray:
    """Quench operator ``delta_h * sz_N``."""
    return np.diag(quench.delta_h * _sz_diagonal(spec.n_sites, spec.n_sites))


@dataclass
class GroundState:
    energy: float
    vector: np.ndarray
    gap: float
    parity_eigenvalue: int


def ground_state(h0: np.ndarray, threshold: float = GAP_THRESHOLD) -> GroundState:
    """Lowest eigenpair of a Hermitian matrix; rejects degenerate ground states."""
    w, v = np.linalg.eigh(h0)
    gap = float(w[1] - w[0])
    if gap < threshold:
        raise DegeneracyError(f"ground state is degenerate (gap = {gap:.3e})")
    vec = v[:, 0]
    n = int(round(np.log2(h0.shape[0])))
    par = float(np.real(np.vdot(vec, parity_diagonal(n) * vec)))
    return GroundState(float(w[0]), vec, gap, int(np.sign(round(par))))


def ed_gap(spec: ChainSpec, cap: int = DEFAULT_CAP) -> float:
    w = np.linalg.eigvalsh(build_h0(spec, cap))
    return float(w[1] - w[0])


def expectation_v(gs: GroundState, v: np.ndarray) -> float:
    return float(np.real(np.vdot(gs.vector, v @ gs.vector)))


class EchoPropagator:
    """Spectral data of H1 = H0 + dh*sz_N sufficient to evaluate G(t).

    Parameters
    ----------
    spec : ChainSpec
    delta_h : complex
        Quench strength; complex values are accepted for coefficient
        extraction on a circle (then H1 is non-Hermitian).
    """

    def __init__(self, spec: ChainSpec, delta_h, cap: int = DEFAULT_CAP, h0=None, gs=None):
        h0 = build_h0(spec, cap) if h0 is None else h0
        self.gs = ground_state(h0) if gs is None else gs
        diag = _sz_diagonal(spec.n_sites, spec.n_sites)
        h1 = h0 + delta_h * np.diag(diag)
        g = self.gs.vector
        if np.isrealobj(h1):
            e, u = np.linalg.eigh(h1)
            ov = u.T @ g
            self.weights = np.abs(ov) ** 2
        else:
            e, u = np.linalg.eig(h1)
            right = np.linalg.solve(u, g)
            self.weights = (g @ u) * right
        self.shift = e - self.gs.energy

    def amplitude(self, times, chunk: int = 512) -> np.ndarray:
        t = np.asarray(times, dtype=float)
        out = np.empty(t.shape, dtype=complex)
        for s in range(0, t.size, chunk):
            ph = np.exp(-1j * np.outer(self.shift, t[s:s + chunk]))
            out[s:s + chunk] = self.weights @ ph
        out[t == 0] = 1.0
        return out


def le_exact(spec: ChainSpec, quench: QuenchSpec, cap: int = DEFAULT_CAP) -> AmplitudeTrace:
    """G(t) = exp(i E0 t) <g| exp(-i H1 t) |g> by diagonalizing H1 once."""
    t = quench.t
    if quench.delta_h == 0:
        build_h0(spec, cap)
        return AmplitudeTrace("exact", t, np.ones_like(t, dtype=complex))
    prop = EchoPropagator(spec, quench.delta_h, cap)
    return AmplitudeTrace("exact", t, prop.amplitude(t), {"gap": prop.gs.gap})


def chebyshev_lambda_grid(delta_h: float, npts: int = 13, umax: float = 0.05) -> np.ndarray:
    """Chebyshev nodes in [-1, 1] scaled so that |lambda*delta_h| <= umax."""
    x = np.cos(np.pi * (np.arange(npts) + 0.5) / npts)
    return np.sort(x) * umax / abs(delta_h)


def _unwrapped_logs(spec, quench, lambdas, cap):
    t = quench.t
    h0 = build_h0(spec, cap)
    gs = ground_state(h0)
    order = np.argsort(np.abs(lambdas), kind="stable")
    logs = np.empty((len(lambdas), t.size), dtype=complex)
    ref_pos = ref_neg = np.zeros(t.size)
    for i in order:
        lam = lambdas[i]
        g = EchoPropagator(spec, lam * quench.delta_h, cap, h0=h0, gs=gs).amplitude(t)
        if np.any(np.abs(g) < 1e-8):
            raise FitError("|G| is too close to zero for a continuous logarithm")
        lg = np.log(g)
        ref = ref_pos if lam >= 0 else ref_neg
        lg = lg.real + 1j * (lg.imag + 2 * np.pi * np.round((ref - lg.imag) / (2 * np.pi)))
        if lam >= 0:
            ref_pos = lg.imag
        if lam <= 0:
            ref_neg = lg.imag
        logs[i] = lg
    return logs


def cumulant_fit(spec: ChainSpec, quench: QuenchSpec, max_order: int, lambda_grid=None,
                 degree: int | None = None, cap: int = DEFAULT_CAP) -> list[CumulantTerm]:
    """Per-order cumulants of log G from a polynomial fit in the coupling.

    log G(t; lambda*delta_h) is evaluated exactly on ``lambda_grid`` and fitted
    by a polynomial in lambda at every t; the lambda**n coefficient is the
    order-n contribution at coupling ``delta_h``.

    Parameters
    ----------
    max_order : int
        Highest order returned (at most 6).
    lambda_grid : array_like, optional
        Defaults to 13 Chebyshev points with |lambda*delta_h| <= 0.05.
    degree : int, optional
        Fit degree, default ``max(8, max_order)``.  Must be below the number
        of grid points.
    """
    if not 1 <= max_order <= 6:
        raise InvalidOrderError("max_order must lie in 1..6")
    if quench.delta_h == 0:
        raise FitError("cannot fit cumulants at zero coupling")
    lam = chebyshev_lambda_grid(quench.delta_h) if lambda_grid is None else np.asarray(lambda_grid, float)
    deg = max(8, max_order) if degree is None else int(degree)
    if deg >= len(lam) or deg < max_order:
        raise FitError("fit degree must satisfy max_order <= degree < len(lambda_grid)")
    logs = _unwrapped_logs(spec, quench, lam, cap)
    scale = np.max(np.abs(lam))
    x = lam / scale
    coef = np.polynomial.polynomial.polyfit(x, logs, deg)
    coef = coef / scale ** np.arange(deg + 1)[:, None]
    return [CumulantTerm(n, quench.t, coef[n], None, quench.delta_h) for n in range(1, max_order + 1)]
