import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from loschmidt import ChainSpec, mode_table
from loschmidt import kernels


def kernel_by_quadrature(w, t, m):
    """Oscillatory-weight quadrature of (t - s) (-i s)**m exp(-i w s) over [0, t]."""
    poly = lambda s: (t - s) * s ** m
    kw = dict(wvar=w, limit=400, epsabs=0.0, epsrel=1e-12)
    c = integrate.quad(poly, 0, t, weight="cos", **kw)[0]
    s_ = integrate.quad(poly, 0, t, weight="sin", **kw)[0]
    return (-1j) ** m * (c - 1j * s_)


@pytest.mark.parametrize("m", [0, 1, 2, 3])
@pytest.mark.parametrize("w,t", [(0.3, 0.5), (1.7, 3.0), (-2.4, 7.0), (4.0, 20.0), (1e-3, 10.0), (0.9, 2.2)])
def test_kernel_matches_quadrature(w, t, m):
    ref = kernel_by_quadrature(w, t, m)
    got = kernels.kernel(w, t, m)
    assert abs(got - ref) <= 1e-9 * max(1.0, abs(ref))


@pytest.mark.parametrize("m", [0, 1, 2, 4])
def test_series_and_closed_form_agree_at_crossover(m):
    w = np.linspace(0.5, 3.5, 31)
    t = 2.0 / w
    a = kernels.kernel(w, t, m, series_below=np.inf)
    b = kernels.kernel(w, t, m, series_below=0.0)
    assert np.max(np.abs(a - b) / np.abs(a)) < 1e-12


def test_f_kernel_small_argument_crossover():
    t = 1.0
    x = np.array([0.99e-4, 1.01e-4, 1e-6, 0.0])
    v = kernels.f_kernel(x, 0.0, t)
    ref = np.array([kernel_by_quadrature(xx, t, 0) for xx in x])
    assert np.max(np.abs(v - ref) / np.abs(ref)) < 1e-12
    assert kernels.f_kernel(0.0, 0.0, 2.0) == pytest.approx(2.0)  # t**2/2


def test_kernel_late_time_slope():
    w, t = 1.3, 1e7
    f = kernels.kernel(w, t, 0)
    assert abs(f / (-1j * t) - kernels.linear_coefficient(w, 0)) < 1e-6


def residue_sum_by_contour(poles, s, nodes=4096):
    """(1/2 pi i) times the integral of exp(-i p s)/prod(p - w) around all poles."""
    poles = np.asarray(poles, dtype=float)
    c = 0.5 * (poles.min() + poles.max())
    r = 0.5 * (poles.max() - poles.min()) + 1.0
    z = c + r * np.exp(2j * np.pi * np.arange(nodes) / nodes)
    f = np.exp(-1j * z * s) / np.prod(z[:, None] - poles[None, :], axis=1)
    return np.mean(f * (z - c))


def residue_sum_from_coefficients(poles, s):
    return sum(beta * (-1j * s) ** r * np.exp(-1j * a * s) for a, r, beta in kernels.residue_coefficients(poles))


def test_residue_coefficients_against_contour_quadrature():
    rng = np.random.default_rng(7)
    levels = np.array([-1.3, -0.4, 0.35, 0.8, 1.9])
    for _ in range(100):
        length = int(rng.integers(1, 7))
        poles = rng.choice(levels, size=length)
        s = float(rng.uniform(0.0, 3.0))
        ref = residue_sum_by_contour(poles, s)
        got = residue_sum_from_coefficients(poles, s)
        assert abs(got - ref) <= 1e-8 * max(1.0, abs(ref)), poles


@settings(max_examples=50, deadline=None)
@given(st.lists(st.sampled_from([-1.0, 0.25, 1.5, 2.75]), min_size=1, max_size=5), st.floats(0.0, 2.0))
def test_residue_coefficients_property(poles, s):
    ref = residue_sum_by_contour(poles, s)
    assert abs(residue_sum_from_coefficients(poles, s) - ref) <= 1e-8 * max(1.0, abs(ref))


def test_residue_coefficients_labels_and_values_agree():
    vals = [0.5, -1.25, 2.0]
    a = kernels.residue_coefficients([0, 0, 2, 1], vals)
    b = kernels.residue_coefficients([0.5, 0.5, 2.0, -1.25])
    ka = sorted((vals[l], r, x) for l, r, x in a)
    kb = sorted((l, r, x) for l, r, x in b)
    assert np.allclose(np.array(ka), np.array(kb), rtol=1e-14, atol=0)


def test_single_pole_of_high_multiplicity():
    # exp(-i a s)/(p - a)**3 has residue (-i s)**2 exp(-i a s)/2
    out = kernels.residue_coefficients([0.7, 0.7, 0.7])
    assert [(r, beta) for _, r, beta in out] == [(0, 0.0), (1, 0.0), (2, 0.5)]


@pytest.mark.skipif(kernels.accumulate_compiled is None, reason="extension not built")
@pytest.mark.parametrize("n", [2, 3, 4])
def test_compiled_accumulator_matches_python(n):
    m = mode_table(ChainSpec(7, 1.0, 0.5026))
    args = (m.theta, m.cls, m.cls_energy, n)
    a = kernels.accumulate_python(*args, 0, m.n)
    b = kernels.accumulate_compiled(*args, 0, m.n)
    assert np.max(np.abs(a - b)) <= 1e-15 * max(1.0, np.max(np.abs(a)))


def test_pure_python_fallback_selected_by_environment():
    env = dict(os.environ, LOSCHMIDT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import loschmidt.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_linear_coefficient_is_derivative_of_inverse():
    w = 1.7
    for m in range(4):
        assert kernels.linear_coefficient(w, m) == pytest.approx((-1) ** m * math.factorial(m) / w ** (m + 1))
