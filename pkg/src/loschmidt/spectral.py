"""Free-fermion spectral data of the periodic XY chain in a transverse field.

The chain Hamiltonian is

    H0 = J * sum_j [ (1+g)/2 sx_j sx_{j+1} + (1-g)/2 sy_j sy_{j+1} + h sz_j ]

with periodic boundaries, and the quench adds ``dh * sz_N``.  After the
Jordan-Wigner and Bogoliubov transformations the ground state is the
Bogoliubov vacuum of one parity sector, whose mode energies and angles are
tabulated by :func:`mode_table`.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import (
    DegeneracyError,
    InvalidMomentumError,
    InvalidSpecError,
    SingularModeError,
)

GridKind = Literal["gamma+", "gamma-"]
Convention = Literal["pbc-signed", "force-nonnegative"]

#: relative guard band for "equal energy" decisions
EQUAL_RTOL = 1e-12
#: unequal energies closer than this (relative) trigger a conditioning warning
NEAR_RTOL = 1e-8


@dataclass(frozen=True)
class ChainSpec:
    """Static chain parameters.

    Parameters
    ----------
    n_sites : int
        Number of sites on the ring, at least 3.
    gamma : float
        XY anisotropy; ``gamma = 1`` is the Ising chain.
    h : float
        Uniform transverse field.
    coupling_sign : int
        Overall sign J of the Hamiltonian, +1 or -1.
    """

    n_sites: int
    gamma: float
    h: float
    coupling_sign: int = 1

    def __post_init__(self):
        if int(self.n_sites) != self.n_sites or self.n_sites < 3:
            raise InvalidSpecError(f"n_sites must be an integer >= 3, got {self.n_sites}")
        if self.coupling_sign not in (1, -1):
            raise InvalidSpecError("coupling_sign must be +1 or -1")
        if not (np.isfinite(self.gamma) and np.isfinite(self.h)):
            raise InvalidSpecError("gamma and h must be finite")

    @property
    def guaranteed_nondegenerate(self) -> bool:
        return self.h ** 2 > abs(1.0 - self.gamma ** 2)


@dataclass(frozen=True)
class QuenchSpec:
    """Local field change ``delta_h`` on site N, observed at ``times``."""

    delta_h: float
    times: tuple = (0.0,)
    site: int | None = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).ravel()
        if t.size == 0:
            raise InvalidSpecError("times must be nonempty")
        if t[0] < 0 or np.any(np.diff(t) <= 0) or not np.all(np.isfinite(t)):
            raise InvalidSpecError("times must be finite, nonnegative and strictly increasing")
        object.__setattr__(self, "times", tuple(float(x) for x in t))

    @property
    def t(self) -> np.ndarray:
        return np.asarray(self.times, dtype=float)


@dataclass(frozen=True)
class SectorSelection:
    parity: int
    grid_kind: GridKind
    jwt_variant: Literal["A2", "A1"]
    effective_delta_h_sign: int


@dataclass
class ModeTable:
    """Per-momentum spectral data of the selected parity sector.

    Attributes
    ----------
    q : ndarray
        Momenta in ascending order.
    lam : ndarray
        Mode energies Lambda_q; exceptional modes q in {0, pi} carry a sign
        under the ``pbc-signed`` convention.
    theta : ndarray
        Bogoliubov angles.
    e0 : float
        Ground-state energy, ``-sum(lam)``.
    partner : ndarray of int
        Index of N - q.
    cls : ndarray of int
        Energy-class label of every mode (modes with equal 2*Lambda share it).
    cls_energy : ndarray
        Value of 2*Lambda for each class.
    """

    spec: ChainSpec
    sector: SectorSelection
    convention: str
    q: np.ndarray
    lam: np.ndarray
    theta: np.ndarray
    e0: float
    partner: np.ndarray
    cls: np.ndarray = field(repr=False)
    cls_energy: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.q)

    @property
    def eps(self) -> np.ndarray:
        return 2.0 * self.lam

    @property
    def omega(self) -> np.ndarray:
        """Pole energies 2*Lambda_q."""
        return 2.0 * self.lam

    def same_energy(self) -> np.ndarray:
        """Boolean matrix, True where two modes share an energy class."""
        return self.cls[:, None] == self.cls[None, :]

    def effective_dh(self, delta_h: float) -> float:
        return self.sector.effective_delta_h_sign * float(delta_h)

    def to_dict(self) -> dict:
        s = self.sector
        return {
            "n_sites": self.spec.n_sites,
            "gamma": self.spec.gamma,
            "h": self.spec.h,
            "coupling_sign": self.spec.coupling_sign,
            "mode_convention": self.convention,
            "sector": {
                "parity": s.parity,
                "grid_kind": s.grid_kind,
                "jwt_variant": s.jwt_variant,
                "effective_delta_h_sign": s.effective_delta_h_sign,
            },
            "e0": float(self.e0),
            "modes": [
                {"q": float(q), "lambda": float(l), "epsilon": float(2 * l), "theta": float(th)}
                for q, l, th in zip(self.q, self.lam, self.theta)
            ],
        }


def momentum_grid(n_sites: int, grid_kind: str) -> np.ndarray:
    """Momenta 2*pi*k/N (``gamma-``) or 2*pi*(k+1/2)/N (``gamma+``)."""
    if int(n_sites) != n_sites or n_sites < 3:
        raise InvalidSpecError(f"n_sites must be an integer >= 3, got {n_sites}")
    k = np.arange(n_sites, dtype=float)
    if grid_kind == "gamma-":
        return 2.0 * np.pi * k / n_sites
    if grid_kind == "gamma+":
        return 2.0 * np.pi * (k + 0.5) / n_sites
    raise InvalidSpecError(f"unknown grid kind {grid_kind!r}")


def _partner_index(n: int, grid_kind: str) -> np.ndarray:
    k = np.arange(n)
    return (n - k) % n if grid_kind == "gamma-" else n - 1 - k


def _exceptional(n: int, grid_kind: str) -> np.ndarray:
    """Mask of self-conjugate momenta (q = 0 or q = pi)."""
    return _partner_index(n, grid_kind) == np.arange(n)


def select_sector(spec: ChainSpec) -> SectorSelection:
    """Parity sector hosting the ground state, with its grid and JWT variant."""
    n, h = spec.n_sites, spec.h
    if h == 0:
        raise DegeneracyError("h = 0 is an unsupported (degenerate) corner")
    if n % 2 == 0:
        return SectorSelection(+1, "gamma+", "A2", +1)
    if h > 0:
        return SectorSelection(-1, "gamma-", "A2", +1)
    return SectorSelection(+1, "gamma+", "A1", -1)


def nondegeneracy_check(spec: ChainSpec) -> str:
    """'guaranteed', 'degenerate' or 'unverified' from the field/anisotropy."""
    if spec.h ** 2 > abs(1.0 - spec.gamma ** 2):
        return "guaranteed"
    if abs(spec.gamma) == 1 and spec.h == 0:
        return "degenerate"
    return "unverified"


def _raw_modes(spec: ChainSpec, convention: str):
    if spec.coupling_sign != 1:
        raise InvalidSpecError("free-fermion mode tables are only available for J = +1")
    sec = select_sector(spec)
    n, g, h = spec.n_sites, spec.gamma, spec.h
    q = momentum_grid(n, sec.grid_kind)
    exc = _exceptional(n, sec.grid_kind)
    c = np.cos(q)
    s = np.where(exc, 0.0, np.sin(q))
    c = np.where(exc, np.round(c), c)
    flip = -1.0 if sec.jwt_variant == "A1" else 1.0
    re = flip * (h - c)
    im = -flip * g * s
    lam = np.hypot(h - c, g * s)
    if convention == "pbc-signed":
        lam = np.where(exc, flip * (h - c), lam)
    elif convention != "force-nonnegative":
        raise InvalidSpecError(f"unknown mode convention {convention!r}")
    return sec, q, exc, lam, re, im


def excitation_energy(q: float, spec: ChainSpec, convention: str = "pbc-signed") -> float:
    """Single-fermion excitation energy eps(q) = 2*Lambda_q."""
    sec, grid, exc, lam, _, _ = _raw_modes(spec, convention)
    return float(2.0 * lam[_locate(q, grid)])


def bogoliubov_angle(q: float, spec: ChainSpec, convention: str = "pbc-signed") -> float:
    """Bogoliubov angle theta_q; zero on self-conjugate modes."""
    table = mode_table(spec, convention)
    return float(table.theta[_locate(q, table.q)])


def _locate(q, grid):
    d = np.abs(np.angle(np.exp(1j * (np.asarray(grid) - q))))
    i = int(np.argmin(d))
    if d[i] > 1e-9:
        raise InvalidMomentumError(f"momentum {q} is not on the selected grid")
    return i


def energy_classes(omega: np.ndarray, rtol: float = EQUAL_RTOL):
    """Group equal energies.

    Returns ``(labels, values)`` where ``values`` holds one representative
    per class in ascending order.  Values closer than ``rtol`` (relative)
    are merged; distinct classes closer than ``NEAR_RTOL`` raise a warning.
    """
    omega = np.asarray(omega, dtype=float)
    order = np.argsort(omega, kind="stable")
    labels = np.empty(len(omega), dtype=np.intp)
    values = []
    for i in order:
        w = omega[i]
        if values and abs(w - values[-1]) <= rtol * max(1.0, abs(w)):
            labels[i] = len(values) - 1
            continue
        if values and abs(w - values[-1]) <= NEAR_RTOL * max(1.0, abs(w)):
            warnings.warn(
                f"near-degenerate pole energies {values[-1]!r} and {w!r}; results may be ill-conditioned",
                RuntimeWarning,
                stacklevel=3,
            )
        values.append(w)
        labels[i] = len(values) - 1
    return labels, np.asarray(values)


def mode_table(spec: ChainSpec, convention: str = "pbc-signed") -> ModeTable:
    """Tabulate q, Lambda_q, theta_q and E0 for the ground-state sector.

    Paired modes are evaluated once and mirrored so that
    Lambda_{N-q} == Lambda_q and theta_{N-q} == -theta_q hold exactly.
    """
    sec, q, exc, lam, re, im = _raw_modes(spec, convention)
    n = spec.n_sites
    if np.any(lam == 0.0):
        bad = q[lam == 0.0]
        raise SingularModeError(f"vanishing mode energy at q = {bad.tolist()}")
    theta = 0.5 * np.angle((re + 1j * im) / lam)
    partner = _partner_index(n, sec.grid_kind)
    for k in range(n):
        p = partner[k]
        if p > k:
            lam[p] = lam[k]
            theta[p] = -theta[k]
    labels, values = energy_classes(2.0 * lam)
    return ModeTable(
        spec=spec,
        sector=sec,
        convention=convention,
        q=q,
        lam=lam,
        theta=theta,
        e0=float(-lam.sum()),
        partner=partner,
        cls=labels,
        cls_energy=values,
    )


def ground_energy(spec: ChainSpec, convention: str = "pbc-signed") -> float:
    return mode_table(spec, convention).e0


def vertex_matrix(i: int, k: int, modes: ModeTable) -> np.ndarray:
    """2x2 vertex block for the mode pair (i, k), given by grid indices."""
    s = modes.theta[i] + modes.theta[k]
    c, sn = np.cos(s), np.sin(s)
    return np.array([[c, -1j * sn], [1j * sn, -c]])
