import math

import numpy as np
import pytest
import scipy.sparse as sp

from zaremba import waves
from zaremba.geometry import (
    ConstantDamping,
    Disc,
    Interval,
    LinearPartition,
    MetricField,
    Rectangle,
    StripDamping,
    ZeroDamping,
)

E1 = MetricField.euclidean(1)


def test_mixed_interval_eigenvalues():
    # oracle: u(0) = 0, u'(1) = 0 gives theta_k = (k - 1/2) pi; the three-point
    # scheme with a half-weight Neumann row has frequencies (2/h) sin(theta_k h / 2)
    D = Interval(0, 1, LinearPartition([1.0], 0.5))
    N = 400
    op = waves.assemble(D, E1, None, N)
    ev = np.sort(np.abs(waves.spectrum(op).imag))[::2][:5]
    theta = (np.arange(1, 6) - 0.5) * math.pi
    h = 1.0 / N
    assert np.allclose(ev, 2.0 / h * np.sin(theta * h / 2), rtol=1e-10)
    assert np.allclose(ev, theta, rtol=1e-4)


def test_partition_controls_eliminated_nodes():
    # no partition means psi < 0 everywhere, i.e. pure Dirichlet
    assert waves.assemble(Interval(0, 1), E1, None, 50).n == 49
    # psi > 0 everywhere is pure Neumann: constants make the energy degenerate
    with pytest.raises(waves.NotPositiveDefinite):
        waves.assemble(Interval(0, 1, LinearPartition([1.0], -1.0)), E1, None, 50)


def test_energy_monotone_with_damping(zaremba_line):
    D, a = zaremba_line
    op = waves.assemble(D, E1, a, 100)
    tr = waves.evolve_wave(op, *waves.default_initial_state(op), 5.0, 0.01)
    assert np.all(np.diff(tr.E) <= 1e-14 * tr.E[0])
    assert tr.max_residual <= 1e-10 * tr.E[0] * 0.01


def test_conservative_without_damping(zaremba_line):
    D, _ = zaremba_line
    op = waves.assemble(D, E1, None, 100)
    tr = waves.evolve_wave(op, *waves.default_initial_state(op), 5.0, 0.01)
    assert np.max(np.abs(tr.E - tr.E[0])) / tr.E[0] < 1e-12


def test_normal_matrix_resolvent():
    # A = diag(-1+i, -1-i) is normal: |(A - i)^{-1}| = 1 / dist(i, sigma(A)) = 1
    A = np.diag([-1 + 1j, -1 - 1j])
    assert np.linalg.norm(np.linalg.inv(A - 1j * np.eye(2)), 2) == pytest.approx(1.0)


@pytest.mark.parametrize("method", ["lanczos", "power"])
def test_resolvent_methods_agree(zaremba_line, method):
    D, a = zaremba_line
    op = waves.assemble(D, E1, a, 60)
    ref = waves.resolvent_norm(op, 3.0, method="dense")
    assert waves.resolvent_norm(op, 3.0, method=method) == pytest.approx(ref, rel=1e-3)


def test_singular_shift_at_eigenfrequency(zaremba_line):
    D, _ = zaremba_line
    op = waves.assemble(D, E1, None, 60)
    ev = waves.spectrum(op)
    mu = float(np.min(np.abs(ev.imag)))
    with pytest.raises(waves.SingularShift):
        waves.resolvent_norm(op, mu, method="lanczos")


def test_rectangle_assembly_symmetric():
    R = Rectangle(0, 1, 0, 1, LinearPartition([1.0, 0.0], 0.5))
    op = waves.assemble(R, MetricField.euclidean(2), ConstantDamping(0.5), 10)
    K = op.stiffness
    assert abs(K - K.T).max() < 1e-12
    assert np.all(op.mass > 0)
    # boundary nodes with x <= 0.5 are Dirichlet: 11 on the left side, 5 on top and bottom each
    assert op.n == 11 * 11 - 21


def test_constant_ratio_metric_scales_spectrum():
    D = Interval(0, 1, LinearPartition([1.0], 0.5))
    a = waves.spectrum(waves.assemble(D, E1, None, 80))
    b = waves.spectrum(waves.assemble(D, MetricField.constant_matrix([[4.0]]), None, 80))
    assert np.allclose(np.sort(np.abs(b.imag)), 2 * np.sort(np.abs(a.imag)), rtol=1e-10)


def test_unsupported_domain():
    with pytest.raises(waves.UnsupportedDomain):
        waves.assemble(Disc(), MetricField.euclidean(2), ZeroDamping(), 10)
    with pytest.raises(waves.ResolutionTooLow):
        waves.assemble(Interval(), E1, None, 2)


def test_off_diagonal_metric_rejected():
    R = Rectangle()
    with pytest.raises(waves.WaveError):
        waves.assemble(R, MetricField.constant_matrix([[1.0, 0.2], [0.2, 1.0]]), None, 8)


def test_dyadic_block_ratio():
    assert waves.dyadic_block_ratio(np.ones(200)) == 1.0
    v = np.arange(1, 9, dtype=float)
    # blocks {1}, {2,3}, {4..7}, {8}
    assert waves.dyadic_block_ratio(v) == 8.0
