import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zaremba.geometry import Disc, DiscExterior, HalfSpace, MetricField
from zaremba.symbol import (
    GlanceKind,
    PhasePoint,
    classify_boundary,
    hamiltonian_field,
    j_map,
    reduced_R,
    symbol_p,
    tangential_part,
    unit_conormal,
)

E2 = MetricField.euclidean(2)


def test_symbol_values():
    assert symbol_p(E2, [0.1, 0.2], [0.6, 0.8]) == pytest.approx(0.0)
    assert symbol_p(E2, [0.1, 0.2], [0.0, 0.0]) == -1.0


def test_free_flight_field():
    dx, dxi = hamiltonian_field(E2, np.zeros(2), np.array([0.6, 0.8]))
    assert np.allclose(dx, [1.2, 1.6]) and np.allclose(dxi, 0.0)


def _varying_metric(eps, power):
    # g = (1 + eps x1^power x2) I on the half-space x2 > 0
    return MetricField(2, coeffs=lambda x: (1.0 + eps * x[0] ** power * x[1]) * np.eye(2))


def test_hamiltonian_field_matches_fd():
    m = _varying_metric(0.3, 1)
    x, xi = np.array([0.2, 0.4]), np.array([0.5, -0.7])
    dx, dxi = hamiltonian_field(m, x, xi)
    h = 1e-6
    fd = np.array([(symbol_p(m, x + h * e, xi) - symbol_p(m, x - h * e, xi)) / (2 * h) for e in np.eye(2)])
    assert np.allclose(dxi, -fd, atol=1e-8)


@pytest.mark.parametrize(
    "domain,tag,alpha",
    [(Disc(), GlanceKind.GLIDING, -0.5), (DiscExterior(), GlanceKind.DIFFRACTIVE, 0.5)],
)
def test_disc_tangent_classification(domain, tag, alpha):
    # oracle: the tangent line at (1, 0) has x_d(s) = +-(1 - sqrt(1 + s^2)) ~ -+s^2/2
    c = classify_boundary(domain, E2, np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    assert c.tag == tag and c.k == 2
    assert c.alpha == pytest.approx(alpha, abs=1e-6)


def test_halfspace_tangent_is_undetermined():
    c = classify_boundary(HalfSpace(2), E2, np.zeros(2), np.array([1.0, 0.0]))
    assert c.tag == GlanceKind.UNDETERMINED
    assert "infinite contact" in c.reason


def test_hyperbolic_and_elliptic():
    H = HalfSpace(2)
    assert classify_boundary(H, E2, np.zeros(2), np.array([0.5, 0.0])).tag == GlanceKind.HYPERBOLIC
    assert classify_boundary(H, E2, np.zeros(2), np.array([1.5, 0.0])).tag == GlanceKind.ELLIPTIC


@pytest.mark.parametrize(
    "eps,power,k,alpha",
    # oracle by hand expansion of Hamilton's equations at (0, 0), xi = (1, 0):
    # x_d = -eps s^3 / 12 (power 1) and -eps s^4 / 24 (power 2) in arclength
    [(1.0, 1, 3, -1 / 12), (-1.0, 1, 3, 1 / 12), (1.0, 2, 4, -1 / 24), (-1.0, 2, 4, 1 / 24)],
)
def test_higher_glancing(eps, power, k, alpha):
    c = classify_boundary(HalfSpace(2), _varying_metric(eps, power), np.zeros(2), np.array([1.0, 0.0]))
    assert c.tag == GlanceKind.HIGHER
    assert c.k == k
    assert c.alpha == pytest.approx(alpha, rel=1e-5)
    assert c.alpha_ci[0] <= c.alpha <= c.alpha_ci[1]
    assert c.forward_interior() == (alpha > 0)


@settings(max_examples=50, deadline=None)
@given(st.floats(-math.pi, math.pi), st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_j_map_projects_both_lifts(theta, rt, tn):
    D = Disc()
    x = np.array([math.cos(theta), math.sin(theta)])
    t = np.array([-x[1], x[0]])
    xi_t = math.sqrt(rt) * t
    R, _ = reduced_R(D, E2, x, xi_t)
    assert R == pytest.approx(rt, rel=1e-12)
    for sgn in (1.0, -1.0):
        xi = xi_t + sgn * math.sqrt(1.0 - rt) * unit_conormal(D, E2, x)
        assert abs(symbol_p(E2, x, xi)) < 1e-12
        rho = j_map(D, E2, x, xi)
        assert rho.kind == "boundary"
        assert np.allclose(rho.xi, xi_t, atol=1e-12)
        _, normal = tangential_part(D, E2, x, xi)
        assert normal == pytest.approx(sgn * math.sqrt(1.0 - rt), abs=1e-12)


def test_phase_point_reverse():
    rho = PhasePoint("interior", [0.1, 0.2], [0.6, 0.8])
    assert np.allclose(rho.reversed().xi, [-0.6, -0.8])
    with pytest.raises(ValueError):
        PhasePoint("edge", [0.0], [0.0])
