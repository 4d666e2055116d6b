"""Principal symbol, boundary reduction and classification of boundary phase points.

Phase points are stored in Cartesian coordinates.  A boundary point
``(x, xi)`` has ``phi(x) = 0`` and ``xi`` orthogonal to ``dphi`` in the
cometric; its chart image has ``eta_d = 0`` so ``R = |xi|_g^2``.  With
``q = {phi, p}`` the normal derivative of ``R`` is ``{p, q} / (2 |dphi|_g)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from .geometry import Chart, Domain, MetricField

__all__ = [
    "PhasePoint",
    "BoundaryClassification",
    "GlanceKind",
    "symbol_p",
    "hamiltonian_field",
    "tangential_part",
    "j_map",
    "boundary_R",
    "reduced_R",
    "interface_R0",
    "split_R",
    "gliding_field",
    "singular_field",
    "field_HR",
    "field_HR0",
    "classify_boundary",
    "contact_probe",
    "eps_glance_for",
    "unit_conormal",
]

EPS_GLANCE_CATALOG = 1e-7
EPS_GLANCE_GENERIC = 1e-4
S_PROBE = 1e-2
K_MAX = 6
N_PROBE = 11


class GlanceKind:
    HYPERBOLIC = "Hyperbolic"
    ELLIPTIC = "Elliptic"
    DIFFRACTIVE = "Diffractive"
    GLIDING = "Gliding"
    HIGHER = "HigherGlancing"
    UNDETERMINED = "Undetermined"


@dataclass(eq=False)
class PhasePoint:
    """Point of ``T*Omega`` (interior), ``T*dOmega`` (boundary) or ``T*Gamma`` (interface)."""

    kind: str
    x: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        if self.kind not in ("interior", "boundary", "interface"):
            raise ValueError(f"unknown phase point kind {self.kind!r}")
        self.x = np.array(self.x, dtype=float)
        self.xi = np.array(self.xi, dtype=float)

    def reversed(self) -> "PhasePoint":
        return PhasePoint(self.kind, self.x.copy(), -self.xi)

    def as_dict(self) -> dict:
        return {"kind": self.kind, "x": [float(v) for v in self.x], "xi": [float(v) for v in self.xi]}

    def distance(self, other: "PhasePoint") -> float:
        return float(np.linalg.norm(self.x - other.x) + np.linalg.norm(self.xi - other.xi))


@dataclass
class BoundaryClassification:
    tag: str
    r_value: float
    dxd_R: float
    k: Optional[int] = None
    alpha: Optional[float] = None
    alpha_flow: Optional[float] = None
    alpha_ci: Optional[Tuple[float, float]] = None
    slope: Optional[float] = None
    reason: Optional[str] = None

    @property
    def alpha_sign(self) -> Optional[int]:
        if self.alpha is None or self.alpha == 0:
            return None
        return 1 if self.alpha > 0 else -1

    @property
    def is_glancing(self) -> bool:
        return self.tag in (GlanceKind.DIFFRACTIVE, GlanceKind.GLIDING, GlanceKind.HIGHER)

    def forward_interior(self) -> Optional[bool]:
        """Whether the free ray leaves into the interior for small positive times."""
        if self.tag == GlanceKind.DIFFRACTIVE:
            return True
        if self.tag == GlanceKind.GLIDING:
            return False
        if self.tag == GlanceKind.HIGHER and self.alpha is not None:
            return self.alpha > 0
        return None

    def as_dict(self) -> dict:
        d = {"tag": self.tag, "r_value": float(self.r_value), "dxd_R": float(self.dxd_R)}
        if self.k is not None:
            d["k"] = int(self.k)
        if self.alpha is not None:
            d["alpha"] = float(self.alpha)
            d["alpha_sign"] = self.alpha_sign
        if self.reason:
            d["reason"] = self.reason
        return d


# ---------------------------------------------------------------------------
# interior symbol


def symbol_p(metric: MetricField, x, xi) -> float:
    xi = np.asarray(xi, dtype=float)
    return float(xi @ metric.G(x) @ xi) - 1.0


def hamiltonian_field(metric: MetricField, x, xi):
    """``(dp/dxi, -dp/dx)`` for ``p = xi . G(x) xi - 1``."""
    xi = np.asarray(xi, dtype=float)
    dx = 2.0 * metric.G(x) @ xi
    if metric.is_constant:
        return dx, np.zeros_like(xi)
    dG = metric.dG(x)
    return dx, -np.einsum("kij,i,j->k", dG, xi, xi)


def _grad_xp(metric, x, xi):
    if metric.is_constant:
        return np.zeros_like(xi)
    return np.einsum("kij,i,j->k", metric.dG(x), xi, xi)


# ---------------------------------------------------------------------------
# boundary decomposition


def tangential_part(domain: Domain, metric: MetricField, x, xi):
    """Split ``xi = xi_t + c dphi`` with ``xi_t`` g-orthogonal to ``dphi``; returns ``(xi_t, c |dphi|_g)``."""
    xi = np.asarray(xi, dtype=float)
    g = domain.grad_phi(x)
    G = metric.G(x)
    Gg = G @ g
    n2 = float(g @ Gg)
    c = float(xi @ Gg) / n2
    return xi - c * g, c * math.sqrt(n2)


def unit_conormal(domain: Domain, metric: MetricField, x) -> np.ndarray:
    g = domain.grad_phi(x)
    return g / math.sqrt(float(g @ metric.G(x) @ g))


def j_map(domain: Domain, metric: MetricField, x, xi) -> PhasePoint:
    """Map a covector over a boundary point to its class in ``T*dOmega``."""
    xt, _ = tangential_part(domain, metric, x, xi)
    return PhasePoint("boundary", np.asarray(x, dtype=float), xt)


def _brackets(domain: Domain, metric: MetricField, x, xi):
    """Return ``{p, q}`` and ``{phi, q}`` for ``q = {phi, p}``."""
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    G = metric.G(x)
    g = domain.grad_phi(x)
    Hs = domain.hess_phi(x)
    Gxi = G @ xi
    if metric.is_constant:
        dq_dx = -2.0 * (Hs @ Gxi)
        dp_dx = np.zeros_like(xi)
    else:
        dG = metric.dG(x)
        dq_dx = -2.0 * (Hs @ Gxi + np.einsum("i,kij,j->k", g, dG, xi))
        dp_dx = np.einsum("kij,i,j->k", dG, xi, xi)
    dq_dxi = -2.0 * G @ g
    pq = float(2.0 * Gxi @ dq_dx - dp_dx @ dq_dxi)
    phiq = float(2.0 * g @ G @ g)
    return pq, phiq


def reduced_R(domain: Domain, metric: MetricField, x, xi_t) -> Tuple[float, float]:
    """``(R, dR/dx_d)`` at a boundary point from its tangential covector."""
    xi_t = np.asarray(xi_t, dtype=float)
    G = metric.G(x)
    g = domain.grad_phi(x)
    R = float(xi_t @ G @ xi_t)
    pq, _ = _brackets(domain, metric, x, xi_t)
    return R, pq / (2.0 * math.sqrt(float(g @ G @ g)))


def boundary_R(chart: Chart, y_t, y_d: float, eta_t) -> Tuple[float, float]:
    """``(R, dR/dx_d)`` in chart coordinates."""
    return chart.R(y_t, y_d, eta_t), chart.dR_dyd(y_t, y_d, eta_t)


def _interface_frame(domain, metric, x):
    G = metric.G(x)
    g1 = domain.grad_phi(x)
    g2 = domain.grad_psi(x)
    gram = np.array([[g1 @ G @ g1, g1 @ G @ g2], [g2 @ G @ g1, g2 @ G @ g2]])
    return G, g1, g2, gram


def interface_R0(domain: Domain, metric: MetricField, x, xi) -> float:
    """``R_0`` on ``T*Gamma``: squared length of the part of ``xi`` orthogonal to ``dphi`` and ``dpsi``."""
    xi = np.asarray(xi, dtype=float)
    G, g1, g2, gram = _interface_frame(domain, metric, x)
    c = np.linalg.solve(gram, np.array([g1 @ G @ xi, g2 @ G @ xi]))
    xs = xi - c[0] * g1 - c[1] * g2
    return float(xs @ G @ xs)


def split_R(domain: Domain, metric: MetricField, x, xi_t) -> Tuple[float, float]:
    """At an interface point return ``(xi_1^2, R_1)`` with ``R = xi_1^2 + R_1``.

    ``xi_1`` is the component of ``xi_t`` along the unit conormal of ``Gamma``
    inside the boundary.
    """
    xi_t = np.asarray(xi_t, dtype=float)
    G = metric.G(x)
    g1 = domain.grad_phi(x)
    g2 = domain.grad_psi(x)
    g2t = g2 - float(g2 @ G @ g1) / float(g1 @ G @ g1) * g1
    xi1 = float(xi_t @ G @ g2t) / math.sqrt(float(g2t @ G @ g2t))
    R = float(xi_t @ G @ xi_t)
    return xi1**2, R - xi1**2


# ---------------------------------------------------------------------------
# constrained fields


def gliding_field(domain: Domain, metric: MetricField, x, xi):
    """Field ``H'_R`` on ``Sigma = {phi = 0, q = 0}`` in Cartesian form.

    It reads ``(2 G xi, -dp/dx - c dphi)`` with ``c`` fixed by ``d q / ds = 0``.
    """
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    pq, phiq = _brackets(domain, metric, x, xi)
    c = -pq / phiq
    dx = 2.0 * metric.G(x) @ xi
    dxi = -_grad_xp(metric, x, xi) - c * domain.grad_phi(x)
    return dx, dxi


def field_HR(domain: Domain, metric: MetricField, x, xi_t):
    return gliding_field(domain, metric, x, xi_t)


def _psi_brackets(domain, metric, x, xi, f_grad, f_hess):
    # {p, q_f}, {phi, q_f}, {psi, q_f} for q_f = {f, p}
    G = metric.G(x)
    Gxi = G @ xi
    gf = f_grad(x)
    Hf = f_hess(x)
    if metric.is_constant:
        dq_dx = -2.0 * (Hf @ Gxi)
        dp_dx = np.zeros_like(xi)
    else:
        dG = metric.dG(x)
        dq_dx = -2.0 * (Hf @ Gxi + np.einsum("i,kij,j->k", gf, dG, xi))
        dp_dx = np.einsum("kij,i,j->k", dG, xi, xi)
    dq_dxi = -2.0 * G @ gf
    pq = float(2.0 * Gxi @ dq_dx - dp_dx @ dq_dxi)
    g1 = domain.grad_phi(x)
    g2 = domain.grad_psi(x)
    return pq, float(2.0 * g1 @ G @ gf), float(2.0 * g2 @ G @ gf)


def singular_field(domain: Domain, metric: MetricField, x, xi):
    """Field ``H''_{R_0}`` on ``Sigma' = {phi = psi = 0, q_phi = q_psi = 0}``."""
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if domain.dim == 2:
        return np.zeros(2), np.zeros(2)
    a1 = _psi_brackets(domain, metric, x, xi, domain.grad_phi, domain.hess_phi)
    a2 = _psi_brackets(domain, metric, x, xi, domain.grad_psi, domain.hess_psi)
    M = np.array([[a1[1], a1[2]], [a2[1], a2[2]]])
    ab = np.linalg.solve(M, -np.array([a1[0], a2[0]]))
    dx = 2.0 * metric.G(x) @ xi
    dxi = -_grad_xp(metric, x, xi) - ab[0] * domain.grad_phi(x) - ab[1] * domain.grad_psi(x)
    return dx, dxi


def field_HR0(domain: Domain, metric: MetricField, x, xi):
    return singular_field(domain, metric, x, xi)


# ---------------------------------------------------------------------------
# classification


def eps_glance_for(domain: Domain, metric: MetricField) -> float:
    return EPS_GLANCE_CATALOG if (domain.is_catalog and metric.is_analytic) else EPS_GLANCE_GENERIC


def _normal_distance(domain: Domain, metric: MetricField, x) -> float:
    if domain.is_catalog and metric.is_euclidean:
        return float(domain.normal_coordinate(x))
    g = domain.grad_phi(x)
    return float(domain.phi(x)) / math.sqrt(float(g @ metric.G(x) @ g))


def _free_flow_samples(metric: MetricField, x0, xi0, s_grid):
    d = x0.size

    def rhs(_s, z):
        dx, dxi = hamiltonian_field(metric, z[:d], z[d:])
        return np.concatenate([dx, dxi])

    z0 = np.concatenate([x0, xi0])
    if metric.is_constant:
        G = metric.G(x0)
        return x0[None, :] + 2.0 * np.outer(s_grid, G @ xi0)
    sol = solve_ivp(rhs, (0.0, float(s_grid[-1])), z0, method="DOP853", t_eval=s_grid, rtol=1e-13, atol=1e-16)
    return sol.y[:d].T


def contact_probe(domain: Domain, metric: MetricField, x, xi_t, s_probe: float = S_PROBE, k_max: int = K_MAX):
    """Fit ``x_d(s) = alpha s^k + ...`` along the free ray through a glancing point.

    Returns a dict with keys ``k``, ``alpha_flow``, ``alpha_ci``, ``slope`` and
    ``reason`` (set when no contact order can be determined).
    """
    x = np.asarray(x, dtype=float)
    xi_t = np.asarray(xi_t, dtype=float)
    s = s_probe * 2.0 ** (-np.arange(N_PROBE, dtype=float))
    s_inc = s[::-1]
    fwd = _free_flow_samples(metric, x, xi_t, s_inc)
    bwd = _free_flow_samples(metric, x, -xi_t, s_inc)
    xd_f = np.array([_normal_distance(domain, metric, p) for p in fwd])
    xd_b = np.array([_normal_distance(domain, metric, p) for p in bwd])
    ss = np.concatenate([s_inc, -s_inc])
    xd = np.concatenate([xd_f, xd_b])
    floor = 1e-12 * max(1.0, float(np.linalg.norm(x)))
    use = np.abs(xd) > floor
    if np.count_nonzero(use) < 4:
        return {"k": None, "alpha_flow": None, "alpha_ci": None, "slope": None, "reason": "infinite contact"}
    slope = float(np.polyfit(np.log(np.abs(ss[use])), np.log(np.abs(xd[use])), 1)[0])
    k = int(round(slope))
    if abs(slope - k) > 0.1 or k < 2 or k > k_max:
        return {"k": None, "alpha_flow": None, "alpha_ci": None, "slope": slope, "reason": f"contact order fit failed (slope {slope:.3f})"}
    # alpha by least squares with two remainder terms, rescaled to s_probe units
    t = ss / s_probe
    A = np.column_stack([t**k, t ** (k + 1), t ** (k + 2)])
    coef, res, rank, _ = np.linalg.lstsq(A, xd, rcond=None)
    dof = max(1, xd.size - 3)
    resid = xd - A @ coef
    sigma2 = float(resid @ resid) / dof
    cov = sigma2 * np.linalg.inv(A.T @ A)
    scale = s_probe**k
    alpha = float(coef[0]) / scale
    half = 2.0 * math.sqrt(max(cov[0, 0], 0.0)) / scale + 1e-12 * abs(alpha)
    return {"k": k, "alpha_flow": alpha, "alpha_ci": (alpha - half, alpha + half), "slope": slope, "reason": None}


def classify_boundary(
    domain: Domain,
    metric: MetricField,
    x,
    xi_t,
    eps_glance: Optional[float] = None,
    s_probe: float = S_PROBE,
    k_max: int = K_MAX,
    probe: bool = True,
) -> BoundaryClassification:
    """Classify a boundary phase point.

    The reported ``alpha`` is the coefficient per unit arclength of the
    projected ray; ``alpha_flow`` is per unit flow parameter, where the
    speed is ``2 sqrt(R)``.
    """
    eps = eps_glance_for(domain, metric) if eps_glance is None else eps_glance
    R, dR = reduced_R(domain, metric, x, xi_t)
    r = R - 1.0
    if r < -eps:
        return BoundaryClassification(GlanceKind.HYPERBOLIC, r, dR)
    if r > eps:
        return BoundaryClassification(GlanceKind.ELLIPTIC, r, dR)
    fit = contact_probe(domain, metric, x, xi_t, s_probe, k_max) if probe else None
    if dR < -eps:
        tag = GlanceKind.DIFFRACTIVE
    elif dR > eps:
        tag = GlanceKind.GLIDING
    else:
        tag = GlanceKind.HIGHER
    out = BoundaryClassification(tag, r, dR)
    if fit is None:
        if tag == GlanceKind.HIGHER:
            out.tag = GlanceKind.UNDETERMINED
            out.reason = "probe disabled"
        return out
    out.slope = fit["slope"]
    if fit["k"] is None:
        if tag == GlanceKind.HIGHER:
            out.tag = GlanceKind.UNDETERMINED
        out.reason = fit["reason"]
        return out
    speed = 2.0 * math.sqrt(max(R, 0.0))
    norm = speed ** fit["k"]
    out.k = fit["k"]
    out.alpha_flow = fit["alpha_flow"]
    out.alpha = fit["alpha_flow"] / norm
    lo, hi = fit["alpha_ci"]
    out.alpha_ci = (lo / norm, hi / norm)
    if tag == GlanceKind.HIGHER:
        if out.k == 2:
            # |dR| below the band yet a quadratic fit: sign of alpha decides
            out.tag = GlanceKind.DIFFRACTIVE if out.alpha > 0 else GlanceKind.GLIDING
        elif out.alpha_ci[0] <= 0.0 <= out.alpha_ci[1]:
            out.tag = GlanceKind.UNDETERMINED
            out.reason = "sign of contact coefficient not resolved"
    return out
