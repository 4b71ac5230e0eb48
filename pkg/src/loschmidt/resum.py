"""Resummation of the cumulant series through matrix resolvents.

Notation used throughout (all arrays indexed by grid momenta):

* ``w = 2*Lambda`` are the propagator pole energies,
* ``C[a, b] = (2*dh/N) * cos(theta_a + theta_b)`` is the vertex coupling,
* ``A(p)[a, b] = C[a, b] / (p - w[b])`` is the off-shell vertex matrix,
* ``Ahat[a, b] = C[a, b] / (w[a] - w[b])`` (zero for equal energies) is its
  on-shell part, and ``Rhat = (I - Ahat)^-1``,
* ``B_b[x, y] = C[x, y] / (w[b] - w[y])`` (zero for y in b's energy class)
  is the on-shell matrix seen from the pole at ``w[b]``; ``R_b`` its resolvent.

The resummed log G is a double sum over the two propagator chains of every
bubble.  For a chain ending at pole ``w[b]`` with an n-th order singular
part, the amputated weight is

    W_n[x, b, y] = R_b[b, x] * [(Rhat C P_b)^(n-1) Rhat][b, y]

with ``P_b`` the projector on b's energy class, and the time integrals give
the derivative kernels ``F_{n+m-2}(w_a + w_b, t)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import kernels
from .errors import GeometryError, NumericError, PoleError, ResolventSingularError
from .spectral import ModeTable, QuenchSpec
from .traces import AmplitudeTrace

# ---------------------------------------------------------------------------
# propagators


def g_retarded_wt(q: int, p0: complex, modes: ModeTable) -> complex:
    """Frequency-space retarded propagator i/(p0 - 2*Lambda_q + i0)."""
    x = complex(p0) - modes.omega[q]
    if x.imag == 0.0 and abs(x.real) <= 1e-14 * max(1.0, abs(modes.omega[q])):
        raise PoleError("retarded propagator evaluated on its real pole")
    return 1j / x


def projected_wt(q: int, p0: float, t: float, modes: ModeTable, eps: float = 0.0) -> complex:
    """Transform of the propagator projected on the window [0, t].

    i*(1 - exp(2it(p0 - 2*Lambda_q + i*eps)))/(p0 - 2*Lambda_q + i*eps);
    the removable point p0 = 2*Lambda_q (eps = 0) takes the value 2t.
    """
    x = complex(p0) - modes.omega[q] + 1j * eps
    z = 2j * t * x
    if abs(z) < 1e-4:
        # -i * (exp(z) - 1)/x = 2t * (1 + z/2 + z^2/6 + ...)
        s = 1.0 + z / 2 + z * z / 6 + z ** 3 / 24 + z ** 4 / 120
        return 2.0 * t * s
    return 1j * (1.0 - np.exp(z)) / x


@dataclass
class WTCheck:
    """Result of a transform-rule check: the two sides and an error estimate."""

    lhs: complex
    rhs: complex
    error_estimate: float
    window: float

    @property
    def difference(self) -> float:
        return abs(self.lhs - self.rhs)


def _quad_complex(f, a, b, **kw):
    re, e1 = integrate.quad(lambda x: f(x).real, a, b, **kw)
    im, e2 = integrate.quad(lambda x: f(x).imag, a, b, **kw)
    return re + 1j * im, e1 + e2


def _time_side(w, t, p0):
    """Window transform of a chain of retarded propagators, by nested time quadrature.

    The chain value at relative time s is an (n-1)-fold integral over ordered
    intermediate times; it is then transformed over s in [0, 2t].
    """
    w = list(w)
    n = len(w)

    def chain(s):
        if n == 1:
            return np.exp(-1j * w[0] * s)
        if n == 2:
            f = lambda u: np.exp(-1j * w[0] * (s - u) - 1j * w[1] * u)
            return _quad_complex(f, 0.0, s, epsabs=1e-11, epsrel=1e-11)[0]
        if n == 3:
            def inner(u1):
                f = lambda u2: np.exp(-1j * w[0] * (s - u1) - 1j * w[1] * (u1 - u2) - 1j * w[2] * u2)
                return _quad_complex(f, 0.0, u1, epsabs=1e-11, epsrel=1e-11)[0]
            return _quad_complex(inner, 0.0, s, epsabs=1e-10, epsrel=1e-10)[0]
        raise ValueError("time-side quadrature supports up to three propagators")

    return _quad_complex(lambda s: np.exp(1j * p0 * s) * chain(s), 0.0, 2.0 * t,
                         epsabs=1e-9, epsrel=1e-9, limit=200)


def _frequency_side(w, t, p0, window):
    """Sinc-smeared product of unprojected propagators.

    The real-axis integral is moved to Im p = eta > 0; no pole lies between
    the two lines (all poles sit at w - i0), so the value is unchanged while
    the integrand becomes smooth.  The sinc factor is split into cos/sin
    weights for oscillatory quadrature on [-window, window].
    """
    eta = 0.5 / t
    b = 2.0 * t * eta

    def smooth(x, which):
        p = x + 1j * eta
        prod = np.prod([1j / (p - wk) for wk in w], axis=0)
        den = np.pi * (p0 - p)
        # sin(a - ib) with a = 2t(p0 - x): sin a cosh b - i cos a sinh b
        g_sin = np.cosh(b) * prod / den
        g_cos = -1j * np.sinh(b) * prod / den
        s0, c0 = np.sin(2 * t * p0), np.cos(2 * t * p0)
        # sin a = s0 cos(2tx) - c0 sin(2tx); cos a = c0 cos(2tx) + s0 sin(2tx)
        if which == "cos":
            return g_sin * s0 + g_cos * c0
        return -g_sin * c0 + g_cos * s0

    # the adaptive rule can step over the narrow peaks on a wide window, so
    # the core around the poles and p0 is integrated separately from the tails
    feats = list(w) + [p0]
    lo = max(-window, min(feats) - 10.0 * (1.0 + eta))
    hi = min(window, max(feats) + 10.0 * (1.0 + eta))
    edges = [-window, lo, hi, window]
    total = 0.0 + 0.0j
    err = 0.0
    for a, c in zip(edges[:-1], edges[1:]):
        if c <= a:
            continue
        for which in ("cos", "sin"):
            for part in (np.real, np.imag):
                val, e = integrate.quad(lambda x: part(smooth(x, which)), a, c,
                                        weight=which, wvar=2.0 * t, limit=2000)
                total += val if part is np.real else 1j * val
                err += e
    n = len(w)
    tail = np.cosh(b) / (np.pi * n * (window - max(abs(wk) for wk in w)) ** n) * 2.0
    return total, err + tail


def wt_convolution_check(qs, t: float, p0: float, modes: ModeTable, window: float | None = None) -> WTCheck:
    """Compare both sides of the projected-convolution transform rule.

    Parameters
    ----------
    qs : sequence of int
        Grid indices of 1 to 3 propagators in the chain.
    t : float
        Projection horizon.
    p0 : float
        Real frequency.
    window : float, optional
        Half-width of the frequency window, default ``50 * max|2 Lambda|``.

    Returns
    -------
    WTCheck
        ``lhs`` from nested time quadrature of the projected chain, ``rhs``
        from the sinc-smeared product of unprojected propagators, and the
        combined quadrature plus window-truncation error estimate.
    """
    qs = list(qs)
    if not 1 <= len(qs) <= 3:
        raise ValueError("wt_convolution_check supports 1 to 3 propagators")
    w = [float(modes.omega[q]) for q in qs]
    if window is None:
        window = 50.0 * float(np.max(np.abs(modes.omega)))
    lhs, e1 = _time_side(w, t, p0)
    rhs, e2 = _frequency_side(w, t, p0, window)
    return WTCheck(lhs, rhs, e1 + e2, window)


# ---------------------------------------------------------------------------
# vertex matrices and resolvents


def coupling_matrix(modes: ModeTable, quench: QuenchSpec) -> np.ndarray:
    dh = modes.effective_dh(quench.delta_h)
    return 2.0 * dh / modes.n * np.cos(modes.theta[:, None] + modes.theta[None, :])


def build_a(p0: complex, modes: ModeTable, quench: QuenchSpec) -> np.ndarray:
    """Off-shell vertex matrix A(p0)."""
    p0 = complex(p0)
    w = modes.omega
    if p0.imag == 0.0 and np.any(np.abs(p0.real - w) <= 1e-14 * np.maximum(1.0, np.abs(w))):
        raise PoleError("A(p0) evaluated on a real pole")
    return coupling_matrix(modes, quench) / (p0 - w[None, :])


def build_a_hat(modes: ModeTable, quench: QuenchSpec) -> np.ndarray:
    """On-shell matrix: real antisymmetric, zero between equal energies."""
    c = coupling_matrix(modes, quench)
    w = modes.omega
    same = modes.same_energy()
    den = np.where(same, 1.0, w[:, None] - w[None, :])
    return np.where(same, 0.0, c / den)


def build_a_hat_q1(q1: int, modes: ModeTable, quench: QuenchSpec) -> np.ndarray:
    """On-shell matrix seen from the pole at 2*Lambda_{q1}.

    Entry [x, y] is C[x, y]/(2*Lambda_{q1} - 2*Lambda_y), zero whenever
    Lambda_y = Lambda_{q1}.  Not antisymmetric in general.
    """
    c = coupling_matrix(modes, quench)
    return _family_member(c, modes, q1)


def _family_member(c, modes, b):
    w = modes.omega
    col_same = modes.cls == modes.cls[b]
    den = np.where(col_same, 1.0, w[b] - w)
    return np.where(col_same[None, :], 0.0, c / den[None, :])


def build_a_hat_family(modes: ModeTable, quench: QuenchSpec) -> np.ndarray:
    """Stack of :func:`build_a_hat_q1` over all q1, shape (N, N, N)."""
    c = coupling_matrix(modes, quench)
    return np.stack([_family_member(c, modes, b) for b in range(modes.n)])


def resolvent(m: np.ndarray) -> np.ndarray:
    """(I - M)^-1 by a direct linear solve (valid beyond the series radius)."""
    m = np.asarray(m)
    eye = np.eye(m.shape[0], dtype=m.dtype)
    a = eye - m
    try:
        r = np.linalg.solve(a, eye)
    except np.linalg.LinAlgError as exc:
        raise ResolventSingularError("I - M is singular") from exc
    if not np.all(np.isfinite(r)) or np.linalg.cond(a) > 1e14:
        raise ResolventSingularError("I - M is numerically singular")
    return r


@dataclass
class ConvergenceReport:
    """Spectral radii of the on-shell matrices.

    Attributes
    ----------
    a_hat_radius : float
        max |eigenvalue| of Ahat.
    family_radii : ndarray
        max |eigenvalue| of each member of the pole family.
    within_unit_disk : bool
        Ahat radius below one.
    family_within_unit_disk : ndarray of bool
    ratio_estimate : float
        2|dh| * max|Rhat|, the size estimate for the ratio of second- to
        first-order amputated parts (max absolute entry norm).
    """

    a_hat_radius: float
    family_radii: np.ndarray
    within_unit_disk: bool
    family_within_unit_disk: np.ndarray
    ratio_estimate: float

    @property
    def all_within(self) -> bool:
        return bool(self.within_unit_disk and np.all(self.family_within_unit_disk))

    def to_dict(self) -> dict:
        return {
            "a_hat_radius": float(self.a_hat_radius),
            "family_radii": [float(x) for x in self.family_radii],
            "within_unit_disk": bool(self.within_unit_disk),
            "family_within_unit_disk": [bool(x) for x in self.family_within_unit_disk],
            "all_within": self.all_within,
            "ratio_estimate": float(self.ratio_estimate),
        }


@dataclass
class ResolventSet:
    modes: ModeTable
    delta_h: float
    coupling: np.ndarray = field(repr=False)
    a_hat: np.ndarray = field(repr=False)
    a_hat_family: np.ndarray = field(repr=False)
    r_hat: np.ndarray = field(repr=False)
    r_hat_family: np.ndarray = field(repr=False)
    convergence: ConvergenceReport | None = None


def convergence_report(rs: ResolventSet) -> ConvergenceReport:
    try:
        # i*Ahat is Hermitian, so its spectrum is real
        ev = np.linalg.eigvalsh(1j * rs.a_hat)
        rad = float(np.max(np.abs(ev))) if ev.size else 0.0
        fam = np.array([np.max(np.abs(np.linalg.eigvals(m))) for m in rs.a_hat_family])
    except np.linalg.LinAlgError as exc:
        raise NumericError("eigensolve failed in convergence report") from exc
    ratio = 2.0 * abs(rs.delta_h) * float(np.max(np.abs(rs.r_hat)))
    return ConvergenceReport(rad, fam, rad < 1.0, fam < 1.0, ratio)


def build_resolvent_set(modes: ModeTable, quench: QuenchSpec) -> ResolventSet:
    c = coupling_matrix(modes, quench)
    a_hat = build_a_hat(modes, quench)
    fam = build_a_hat_family(modes, quench)
    rs = ResolventSet(
        modes=modes,
        delta_h=float(quench.delta_h),
        coupling=c,
        a_hat=a_hat,
        a_hat_family=fam,
        r_hat=resolvent(a_hat),
        r_hat_family=np.stack([resolvent(m) for m in fam]),
    )
    rs.convergence = convergence_report(rs)
    return rs


# ---------------------------------------------------------------------------
# resummed log G


def f_kernel(x, y, t):
    return kernels.f_kernel(x, y, t)


def leg_weights(rs: ResolventSet, order: int) -> np.ndarray:
    """Amputated weights W_order[x, b, y] of a propagator chain x -> y at pole b."""
    modes = rs.modes
    n = modes.n
    out = np.empty((n, n, n))
    for b in range(n):
        mat = rs.r_hat
        if order > 1:
            proj = (modes.cls == modes.cls[b]).astype(float)
            step = rs.r_hat @ (rs.coupling * proj[None, :])
            for _ in range(order - 1):
                mat = step @ mat
        out[:, b, :] = np.outer(rs.r_hat_family[b][b, :], mat[b, :])
    return out


def _block(rs, wn, wm, n, m, t):
    """Contribution of singular orders (n, m) of the two chains to log G."""
    modes = rs.modes
    s = np.sin(modes.theta[:, None] + modes.theta[None, :])
    # T[i, j] = sum S[a,b] S[c,d] Wn[b, j, c] Wm[a, i, d]
    x = np.einsum("bjc,cd->bjd", wn, s, optimize=True)
    y = np.einsum("ab,bjd->ajd", s, x, optimize=True)
    tm = np.einsum("ajd,aid->ij", y, wm, optimize=True)
    w = modes.omega
    om = (w[:, None] + w[None, :]).ravel()
    fk = kernels.kernel(om[:, None], t[None, :], n + m - 2)
    dh = modes.effective_dh(rs.delta_h)
    pref = -2.0 * dh ** 2 / modes.n ** 2 / (math.factorial(n - 1) * math.factorial(m - 1))
    return pref * (tm.ravel() @ fk)


def _first_order_log(modes, dh, t):
    return 1j * modes.effective_dh(dh) / modes.n * np.sum(np.cos(2.0 * modes.theta)) * t


def _sp_log(rs, t):
    w1 = leg_weights(rs, 1)
    return _first_order_log(rs.modes, rs.delta_h, t) + _block(rs, w1, w1, 1, 1, t)


def log_g_resummed_sp(modes: ModeTable, quench: QuenchSpec, times=None, rs: ResolventSet | None = None,
                      label: str = "resummed-sp") -> AmplitudeTrace:
    """Resummed LE keeping only simple-pole (first-order amputated) parts."""
    t = quench.t if times is None else np.asarray(times, dtype=float)
    rs = build_resolvent_set(modes, quench) if rs is None else rs
    meta = {"convergence": rs.convergence.to_dict() if rs.convergence else None}
    return AmplitudeTrace.from_log(label, t, _sp_log(rs, t), meta)


def log_g_resummed_full(modes: ModeTable, quench: QuenchSpec, times=None, rs: ResolventSet | None = None,
                        trunc: int = 1) -> AmplitudeTrace:
    """Resummed LE with amputated singular parts up to order ``trunc`` on each chain.

    ``trunc = 1`` returns exactly the simple-pole result.  Higher orders add
    the blocks (n, m) with max(n, m) > 1, weighted by derivatives of F.
    """
    if trunc < 1:
        raise ValueError("trunc must be >= 1")
    t = quench.t if times is None else np.asarray(times, dtype=float)
    rs = build_resolvent_set(modes, quench) if rs is None else rs
    log_g = _sp_log(rs, t)
    if trunc > 1:
        ws = [leg_weights(rs, k) for k in range(1, trunc + 1)]
        for n in range(1, trunc + 1):
            for m in range(1, trunc + 1):
                if n == 1 and m == 1:
                    continue
                log_g = log_g + _block(rs, ws[n - 1], ws[m - 1], n, m, t)
    meta = {"convergence": rs.convergence.to_dict() if rs.convergence else None, "trunc": trunc}
    return AmplitudeTrace.from_log(f"resummed-full-{trunc}", t, log_g, meta)


# ---------------------------------------------------------------------------
# residue identities


@dataclass
class ResidueReport:
    """Contour-integral checks of the pole structure of R(A(p)).

    Matrices are indexed [q1, q4].  Errors are relative to max|C|.
    """

    small_circles: np.ndarray
    all_poles: np.ndarray
    closed_form: np.ndarray
    scale: float
    derivative_error: float
    q1: int | None = None
    q4: int | None = None

    @property
    def closed_form_error(self) -> float:
        return float(np.max(np.abs(self.small_circles - self.closed_form)) / self.scale) if self.scale else 0.0

    @property
    def contour_error(self) -> float:
        """One circle around all poles against the sum of small circles."""
        return float(np.max(np.abs(self.all_poles - self.small_circles)) / self.scale) if self.scale else 0.0

    @property
    def total_error(self) -> float:
        return float(np.max(np.abs(self.all_poles - self.closed_form)) / self.scale) if self.scale else 0.0


def _circle_integral(fun, center, radius, nodes):
    ph = 2.0 * np.pi * np.arange(nodes) / nodes
    z = center + radius * np.exp(1j * ph)
    return np.mean([fun(zz) * (zz - center) for zz in z], axis=0)


def residue_identity_check(modes: ModeTable, quench: QuenchSpec, q1: int | None = None, q4: int | None = None,
                           nodes: int = 256, radius_fraction: float = 0.3, seed: int = 0) -> ResidueReport:
    """Check the residue bookkeeping of R(A(p)) = (I - A(p))^-1.

    (a) Trapezoidal contour integrals of R(A(p)) on small circles around every
    distinct pole energy, summed; (b) one circle enclosing all poles; (c) the
    simple-pole closed form sum_b [R_b C][b, q1] * Rhat[b, q4]; (d) the rule
    dR/dp = R (dA/dp) R against central finite differences at a random
    complex p.
    """
    rs = build_resolvent_set(modes, quench)
    c = rs.coupling
    n = modes.n
    w = modes.omega
    vals = modes.cls_energy
    # exact poles of R(A(p)) are the eigenvalues of diag(w) + C
    kappa = np.linalg.eigvalsh(np.diag(w) + c)
    gaps = np.diff(vals)
    radius = radius_fraction * (gaps.min() if gaps.size else 1.0)
    for v in vals:
        d = np.abs(np.abs(kappa - v) - radius)
        if np.any(d < 0.05 * radius):
            raise GeometryError("a small circle passes too close to a pole")
    enclosed = sum(int(np.sum(np.abs(kappa - v) < radius)) for v in vals)
    if enclosed != n:
        raise GeometryError("small circles do not enclose every pole exactly once")

    ra = lambda p: np.linalg.inv(np.eye(n) - c / (p - w[None, :]))
    small = sum(_circle_integral(ra, v, radius, nodes) for v in vals)
    center = 0.5 * (vals.min() + vals.max())
    big_r = 0.5 * (vals.max() - vals.min()) + 2.0 * radius + float(np.max(np.abs(kappa - np.clip(kappa, vals.min(), vals.max()))))
    total = _circle_integral(ra, center, big_r, 4 * nodes)

    closed = np.zeros((n, n))
    for b in range(n):
        left = rs.r_hat_family[b] @ c
        closed += np.outer(left[b, :], rs.r_hat[b, :])

    rng = np.random.default_rng(seed)
    p = complex(rng.uniform(vals.min(), vals.max()), rng.uniform(0.3, 1.0))
    hstep = 1e-5
    r0 = ra(p)
    da = -c / (p - w[None, :]) ** 2
    fd = (ra(p + hstep) - ra(p - hstep)) / (2 * hstep)
    rule = r0 @ da @ r0
    deriv_err = float(np.max(np.abs(fd - rule)) / max(np.max(np.abs(rule)), 1e-300))

    scale = float(np.max(np.abs(c)))
    return ResidueReport(small, total, closed, scale, deriv_err, q1, q4)
