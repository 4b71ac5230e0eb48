from functools import reduce

import numpy as np
import pytest
from scipy.linalg import expm

from loschmidt import ChainSpec, DegeneracyError, FitError, InvalidOrderError, QuenchSpec, ResourceLimitError
from loschmidt import exact

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]])
SZ = np.diag([1.0, -1.0]).astype(complex)


def site_op(op, j, n):
    """op on site j (1-based); site 1 is the least significant bit, bit 0 is spin up."""
    mats = [np.eye(2)] * n
    mats[n - j] = op
    return reduce(np.kron, mats)


def kron_hamiltonian(n, gamma, h, sign=1):
    """Independent construction of the periodic chain from Pauli tensor products."""
    out = 0
    for j in range(1, n + 1):
        k = j % n + 1
        out = out + (1 + gamma) / 2 * site_op(SX, j, n) @ site_op(SX, k, n)
        out = out + (1 - gamma) / 2 * site_op(SY, j, n) @ site_op(SY, k, n)
        out = out + h * site_op(SZ, j, n)
    return sign * out


@pytest.mark.parametrize("n,gamma,h,sign", [(3, 1.0, 0.5, 1), (4, 0.5, -1.5, 1), (5, 0.3, 0.7, -1)])
def test_h0_matches_tensor_product_construction(n, gamma, h, sign):
    h0 = exact.build_h0(ChainSpec(n, gamma, h, sign))
    assert np.isrealobj(h0)
    assert np.allclose(h0, kron_hamiltonian(n, gamma, h, sign), atol=1e-14)


def test_quench_operator_on_last_site():
    spec = ChainSpec(4, 1.0, 1.5)
    v = exact.build_v(spec, QuenchSpec(0.3))
    assert np.allclose(v, 0.3 * site_op(SZ, 4, 4))


def test_cap_enforced():
    with pytest.raises(ResourceLimitError):
        exact.build_h0(ChainSpec(9, 1.0, 1.5), cap=8)


def test_degenerate_ground_state_rejected():
    # Ising chain without field: the two ordered states are degenerate
    with pytest.raises(DegeneracyError):
        exact.ground_state(exact.build_h0(ChainSpec(4, 1.0, 0.0)))


@pytest.mark.parametrize("n,gamma,h,dh", [(5, 1.0, 0.5, 0.2), (6, 0.5, 1.5, -0.3), (5, 1.0, -1.5, 0.4)])
def test_echo_matches_matrix_exponential(n, gamma, h, dh):
    spec = ChainSpec(n, gamma, h)
    t = np.array([0.0, 0.3, 1.7, 5.0, 12.5])
    h0 = kron_hamiltonian(n, gamma, h)
    w, v = np.linalg.eigh(h0)
    g = v[:, 0]
    h1 = h0 + dh * site_op(SZ, n, n)
    ref = np.array([np.exp(1j * w[0] * s) * np.vdot(g, expm(-1j * h1 * s) @ g) for s in t])
    tr = exact.le_exact(spec, QuenchSpec(dh, tuple(t)))
    assert np.max(np.abs(tr.g_values - ref)) < 1e-11


def test_echo_bounds_and_trivial_cases(ising7):
    t = np.linspace(0, 50, 301)
    tr = exact.le_exact(ising7, QuenchSpec(0.5, tuple(t)))
    assert tr.g_values[0] == 1.0
    assert np.all(np.abs(tr.g_values) <= 1 + 1e-12)
    assert np.all(exact.le_exact(ising7, QuenchSpec(0.0, tuple(t))).l_values == 1.0)


def test_fit_first_order_is_expectation_value():
    spec = ChainSpec(5, 1.0, 1.5)
    q = QuenchSpec(0.02, tuple(np.linspace(0.5, 5, 10)))
    gs = exact.ground_state(exact.build_h0(spec))
    ev = exact.expectation_v(gs, exact.build_v(spec, q))
    c1 = exact.cumulant_fit(spec, q, 2)[0]
    assert np.allclose(c1.log_g, -1j * ev * q.t, rtol=1e-9, atol=1e-13)
    assert c1.delta_e is None and c1.f_of_t is None


def test_fit_rejects_bad_arguments():
    spec = ChainSpec(4, 1.0, 1.5)
    with pytest.raises(InvalidOrderError):
        exact.cumulant_fit(spec, QuenchSpec(0.1, (1.0,)), 7)
    with pytest.raises(FitError):
        exact.cumulant_fit(spec, QuenchSpec(0.0, (1.0,)), 2)
    with pytest.raises(FitError):
        exact.cumulant_fit(spec, QuenchSpec(0.1, (1.0,)), 3, lambda_grid=[-1, 0, 1])


def test_complex_coupling_amplitude_is_analytic():
    # G is a polynomial-like analytic function of dh: the mean over a circle is G(0) = 1
    spec = ChainSpec(4, 1.0, 1.5)
    t = np.array([1.0, 3.0])
    r = 0.05
    vals = [exact.EchoPropagator(spec, r * np.exp(2j * np.pi * k / 16)).amplitude(t) for k in range(16)]
    assert np.allclose(np.mean(vals, axis=0), 1.0, atol=1e-12)
