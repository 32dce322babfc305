from __future__ import annotations

import numpy as np
import pytest

from swarmfield.errors import SolverDiagnosticError
from swarmfield.grid import laplacian, make_grid, pad
from swarmfield.mfg.hjb import eno_derivatives, hamiltonian, hjb_backward, solve_helmholtz


@pytest.mark.parametrize("boundary", ["neumann", "periodic"])
def test_helmholtz_inverts_discrete_operator(boundary, rng):
    g = make_grid((-5, 5, -5, 5), 24, 18, boundary)
    x = rng.standard_normal(g.shape)
    rhs = x - 0.3 * laplacian(g, x)
    assert np.abs(solve_helmholtz(g, rhs, 0.3) - x).max() < 1e-12


def test_eno_second_order_on_sine():
    g = make_grid((0, 2 * np.pi, 0, 2 * np.pi), 32, 32, "periodic")
    X, _ = g.mesh()
    f = np.sin(X)
    dm, dp = eno_derivatives(pad(g, f, 2), g.dx, axis=1)
    assert np.abs(dm - np.cos(X)).max() < 2 * g.dx**2
    assert np.abs(dp - np.cos(X)).max() < 2 * g.dx**2


def test_hamiltonian_of_linear_function():
    g = make_grid((0, 1, 0, 1), 16, 16, "periodic")
    H, rate = hamiltonian(g, np.zeros(g.shape), 0.1)
    assert np.all(H == 0) and rate == 0
    # a tilted plane away from the wrap seam: |p|^2 / (4 alpha)
    X, Y = g.mesh()
    H, _ = hamiltonian(g, 2 * X - Y, 0.25)
    assert np.allclose(H[4:-4, 4:-4], 5.0)


def test_zero_cost_gives_zero_value(grid30):
    t = np.linspace(0, 10, 20)
    w = hjb_backward(np.zeros((20, *grid30.shape)), grid30, t, 0.001, 0.1)
    assert np.abs(w).max() == 0.0


def test_constant_cost_is_linear_in_time(grid30):
    t = np.linspace(0, 10, 20)
    w = hjb_backward(np.full((20, *grid30.shape), 1.5), grid30, t, 0.001, 0.1)
    assert np.allclose(w, 1.5 * (10 - t)[:, None, None], atol=1e-12)


def manufactured_error(n, nt, eps=0.05, alpha=0.25, T=1.0):
    """Periodic manufactured solution w = (T - t) sin x cos y."""
    g = make_grid((0, 2 * np.pi, 0, 2 * np.pi), n, n, "periodic")
    X, Y = g.mesh()
    t = np.linspace(0, T, nt)
    s = np.sin(X) * np.cos(Y)
    wx = np.cos(X) * np.cos(Y)
    wy = -np.sin(X) * np.sin(Y)
    F = []
    for tk in t:
        a = T - tk
        # -w_t - eps lap w + |grad w|^2/(4 alpha)
        F.append(s + eps * 2 * a * s + a**2 * (wx**2 + wy**2) / (4 * alpha))
    w = hjb_backward(np.array(F), g, t, eps, alpha)
    exact = (T - t)[:, None, None] * s
    return np.abs(w - exact).max()


def test_manufactured_convergence():
    e1 = manufactured_error(16, 11)
    e2 = manufactured_error(32, 21)
    assert e1 / e2 >= 3.0


def test_blow_up_is_reported(grid30):
    t = np.linspace(0, 1, 3)
    F = np.zeros((3, *grid30.shape))
    F[:, 15, 15] = np.nan
    with pytest.raises(SolverDiagnosticError) as info:
        hjb_backward(F, grid30, t, 0.001, 0.1)
    assert info.value.step is not None


def test_shape_mismatch(grid30):
    with pytest.raises(SolverDiagnosticError):
        hjb_backward(np.zeros((4, 5, 5)), grid30, np.linspace(0, 1, 4), 0.001, 0.1)
