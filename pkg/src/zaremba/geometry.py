"""Domains, metrics, damping fields and boundary-adapted charts.

A domain is described by a level-set function ``phi`` with the open set
``{phi > 0}`` as interior.  The boundary is split by a second function
``psi``: points with ``psi < 0`` carry Dirichlet conditions, points with
``psi > 0`` Neumann conditions and ``{phi = 0, psi = 0}`` is the interface
``Gamma``.

Catalog domains (interval, half-space, rectangle, disc, disc exterior,
annulus, 3-ball) expose closed-form derivatives and normal geodesic charts
for the Euclidean metric.  :class:`LevelSetDomain` wraps user callables and
falls back to finite differences and a numerically shot chart.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

__all__ = [
    "GeometryError",
    "NotOnBoundary",
    "DegenerateNormal",
    "ChartFailure",
    "MetricError",
    "Region",
    "MetricField",
    "Partition",
    "NoPartition",
    "LinearPartition",
    "DampingField",
    "ZeroDamping",
    "ConstantDamping",
    "BallDamping",
    "AnnulusDamping",
    "StripDamping",
    "FunctionDamping",
    "Domain",
    "Interval",
    "HalfSpace",
    "Rectangle",
    "Disc",
    "DiscExterior",
    "Annulus",
    "Ball3",
    "LevelSetDomain",
    "Chart",
    "FlatChart",
    "PolarChart",
    "SphericalChart",
    "NumericalChart",
    "normal_chart",
    "classify_region",
    "smooth_step",
    "smooth_step_prime",
    "make_domain",
    "make_damping",
    "make_partition",
]

TOL_BAND_CATALOG = 1e-9
TOL_BAND_GENERIC = 1e-6
EPS_GRAD = 1e-8


class GeometryError(ValueError):
    """Base class for geometric failures."""


class NotOnBoundary(GeometryError):
    pass


class DegenerateNormal(GeometryError):
    pass


class ChartFailure(GeometryError):
    pass


class MetricError(ValueError):
    pass


class Region(str, enum.Enum):
    INTERIOR = "Interior"
    DIRICHLET = "DirichletBoundary"
    NEUMANN = "NeumannBoundary"
    INTERFACE = "InterfaceGamma"
    EXTERIOR = "Exterior"


# ---------------------------------------------------------------------------
# smooth step


def _bump_exp(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, strictly increasing between."""
    t = np.asarray(t, dtype=float)
    f0 = _bump_exp(t)
    f1 = _bump_exp(1.0 - t)
    return f0 / (f0 + f1)


def smooth_step_prime(t):
    t = np.asarray(t, dtype=float)
    f0 = _bump_exp(t)
    f1 = _bump_exp(1.0 - t)
    with np.errstate(divide="ignore", invalid="ignore"):
        d0 = np.where(t > 0, f0 / np.where(t > 0, t, 1.0) ** 2, 0.0)
        d1 = np.where(t < 1, f1 / np.where(t < 1, 1.0 - t, 1.0) ** 2, 0.0)
    return (d0 * f1 + f0 * d1) / (f0 + f1) ** 2


# ---------------------------------------------------------------------------
# finite differences


def _fd_step(x):
    return 1e-5 * (1.0 + float(np.linalg.norm(x)))


def fd_gradient(f, x):
    """Fourth-order central differences of a scalar function."""
    x = np.asarray(x, dtype=float)
    h = _fd_step(x)
    g = np.empty(x.shape[-1])
    for k in range(x.shape[-1]):
        e = np.zeros_like(x)
        e[k] = h
        g[k] = (-f(x + 2 * e) + 8 * f(x + e) - 8 * f(x - e) + f(x - 2 * e)) / (12 * h)
    return g


def fd_jacobian(f, x):
    """Fourth-order central differences of an array-valued function; axis 0 is the derivative."""
    x = np.asarray(x, dtype=float)
    h = _fd_step(x)
    rows = []
    for k in range(x.shape[-1]):
        e = np.zeros_like(x)
        e[k] = h
        rows.append((-f(x + 2 * e) + 8 * f(x + e) - 8 * f(x - e) + f(x - 2 * e)) / (12 * h))
    return np.stack(rows)


# ---------------------------------------------------------------------------
# metric


class MetricField:
    """Coefficients of ``P = sum D_j p_jk D_k + sum p_j D_j + p_0``.

    ``coeffs(x)`` returns the symmetric matrix ``p_jk(x)``; ``coeffs_grad(x)``
    returns an array ``dG`` with ``dG[k] = d p / d x_k``.  When the gradient
    is omitted it is approximated by fourth-order central differences.
    """

    def __init__(
        self,
        dim: int,
        coeffs: Optional[Callable] = None,
        coeffs_grad: Optional[Callable] = None,
        first_order: Optional[Callable] = None,
        zeroth_order: Optional[Callable] = None,
        constant: Optional[np.ndarray] = None,
    ):
        if dim < 1:
            raise MetricError("dimension must be >= 1")
        self.dim = int(dim)
        self._coeffs = coeffs
        self._coeffs_grad = coeffs_grad
        self._first = first_order
        self._zeroth = zeroth_order
        self._const = None if constant is None else np.array(constant, dtype=float)
        if self._const is None and coeffs is None:
            raise MetricError("either coeffs or constant must be given")
        if self._const is not None:
            self._const.setflags(write=False)

    @classmethod
    def euclidean(cls, dim: int) -> "MetricField":
        return cls(dim, constant=np.eye(dim))

    @classmethod
    def constant_matrix(cls, matrix) -> "MetricField":
        m = np.atleast_2d(np.array(matrix, dtype=float))
        return cls(m.shape[0], constant=m)

    @property
    def is_constant(self) -> bool:
        return self._const is not None

    @property
    def is_euclidean(self) -> bool:
        return self._const is not None and np.array_equal(self._const, np.eye(self.dim))

    @property
    def is_analytic(self) -> bool:
        return self._const is not None or self._coeffs_grad is not None

    def G(self, x) -> np.ndarray:
        if self._const is not None:
            return self._const
        return np.asarray(self._coeffs(np.asarray(x, dtype=float)), dtype=float)

    def dG(self, x) -> np.ndarray:
        if self._const is not None:
            return np.zeros((self.dim, self.dim, self.dim))
        if self._coeffs_grad is not None:
            return np.asarray(self._coeffs_grad(np.asarray(x, dtype=float)), dtype=float)
        return fd_jacobian(self.G, np.asarray(x, dtype=float))

    def p_first(self, x) -> np.ndarray:
        if self._first is None:
            return np.zeros(self.dim)
        return np.asarray(self._first(np.asarray(x, dtype=float)), dtype=float)

    def p_zero(self, x) -> float:
        if self._zeroth is None:
            return 0.0
        return float(self._zeroth(np.asarray(x, dtype=float)))

    @property
    def has_first_order(self) -> bool:
        return self._first is not None

    def norm2(self, x, xi) -> float:
        """Squared cometric length ``sum p_jk xi_j xi_k``."""
        xi = np.asarray(xi, dtype=float)
        return float(xi @ self.G(x) @ xi)

    def validate(self, points) -> None:
        for x in np.atleast_2d(points):
            g = self.G(x)
            if np.max(np.abs(g - g.T)) > 1e-12:
                raise MetricError(f"coefficients not symmetric at {x}")
            if np.linalg.eigvalsh(g)[0] <= 0:
                raise MetricError(f"coefficients not positive definite at {x}")


# ---------------------------------------------------------------------------
# partition of the boundary


class Partition:
    """Interface function ``psi``; Dirichlet where ``psi < 0``."""

    def psi(self, x):
        raise NotImplementedError

    def grad(self, x) -> np.ndarray:
        raise NotImplementedError

    def hess(self, x) -> np.ndarray:
        raise NotImplementedError

    @property
    def has_interface(self) -> bool:
        return True


class NoPartition(Partition):
    """Whole boundary Dirichlet; no interface."""

    def __init__(self, dim: int):
        self.dim = dim

    def psi(self, x):
        x = np.asarray(x, dtype=float)
        return -np.ones(x.shape[:-1]) if x.ndim > 1 else -1.0

    def grad(self, x):
        return np.zeros(self.dim)

    def hess(self, x):
        return np.zeros((self.dim, self.dim))

    @property
    def has_interface(self) -> bool:
        return False

    def __repr__(self):
        return "NoPartition()"


class LinearPartition(Partition):
    """``psi(x) = normal . x - offset``."""

    def __init__(self, normal: Sequence[float], offset: float = 0.0):
        self.normal = np.array(normal, dtype=float)
        self.offset = float(offset)
        self.dim = self.normal.size

    def psi(self, x):
        x = np.asarray(x, dtype=float)
        return x @ self.normal - self.offset

    def grad(self, x):
        return self.normal.copy()

    def hess(self, x):
        return np.zeros((self.dim, self.dim))

    def __repr__(self):
        return f"LinearPartition(normal={self.normal.tolist()}, offset={self.offset})"


# ---------------------------------------------------------------------------
# damping


class DampingField:
    """Nonnegative damping coefficient ``a(x)``; ``omega = {a > 0}``."""

    def __call__(self, x):
        raise NotImplementedError

    def in_support(self, x, a_min: float = 1e-12) -> bool:
        return float(self(np.asarray(x, dtype=float))) > a_min

    def validate(self, points) -> None:
        vals = np.atleast_1d(self(np.atleast_2d(points)))
        if np.min(vals) < 0:
            raise ValueError("damping must be nonnegative")


class ZeroDamping(DampingField):
    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1]) if x.ndim > 1 else 0.0


class ConstantDamping(DampingField):
    def __init__(self, value: float):
        if value < 0:
            raise ValueError("damping must be nonnegative")
        self.value = float(value)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.full(x.shape[:-1], self.value) if x.ndim > 1 else self.value


def _profile(t_lo, t_hi, width):
    # equals 1 where t_lo >= 0 and t_hi >= 0, positive where both > -width
    if width <= 0:
        return np.where((t_lo >= 0) & (t_hi >= 0), 1.0, 0.0)
    return smooth_step(t_lo / width + 1.0) * smooth_step(t_hi / width + 1.0)


class BallDamping(DampingField):
    """``value`` on the closed ball, smooth decay to zero over ``width``."""

    def __init__(self, center, radius: float, value: float = 1.0, width: float = 0.0):
        self.center = np.array(center, dtype=float)
        self.radius = float(radius)
        self.value = float(value)
        self.width = float(width)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x - self.center, axis=-1)
        out = self.value * _profile(self.radius - r, np.ones_like(r), self.width)
        return out if x.ndim > 1 else float(out)


class AnnulusDamping(DampingField):
    """``value`` on ``r_in <= |x - c| <= r_out``, smooth decay over ``width``."""

    def __init__(self, center, r_in: float, r_out: float, value: float = 1.0, width: float = 0.0):
        self.center = np.array(center, dtype=float)
        self.r_in = float(r_in)
        self.r_out = float(r_out)
        self.value = float(value)
        self.width = float(width)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x - self.center, axis=-1)
        out = self.value * _profile(r - self.r_in, self.r_out - r, self.width)
        return out if x.ndim > 1 else float(out)


class StripDamping(DampingField):
    """``value`` on ``lo <= x[axis] <= hi``, smooth decay over ``width``."""

    def __init__(self, axis: int, lo: float, hi: float, value: float = 1.0, width: float = 0.0):
        self.axis = int(axis)
        self.lo = float(lo)
        self.hi = float(hi)
        self.value = float(value)
        self.width = float(width)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        t = x[..., self.axis]
        out = self.value * _profile(t - self.lo, self.hi - t, self.width)
        return out if x.ndim > 1 else float(out)


class FunctionDamping(DampingField):
    def __init__(self, func: Callable):
        self.func = func

    def __call__(self, x):
        return self.func(np.asarray(x, dtype=float))


# ---------------------------------------------------------------------------
# charts


class Chart:
    """Normal geodesic chart near a boundary point.

    Chart coordinates ``y = (y', y_d)`` satisfy ``phi = 0 <=> y_d = 0`` with the
    domain locally ``{y_d > 0}``; covectors transform as ``eta = J^T xi`` with
    ``J = dx/dy``, and the pulled-back symbol is ``eta_d^2 + R(y, eta') - 1``.
    """

    dim: int

    def to_chart(self, x) -> np.ndarray:
        raise NotImplementedError

    def from_chart(self, y) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, y) -> np.ndarray:
        raise NotImplementedError

    def tangential_cometric(self, y) -> np.ndarray:
        raise NotImplementedError

    def tangential_cometric_dyd(self, y) -> np.ndarray:
        h = 1e-5
        e = np.zeros(self.dim)
        e[-1] = h
        f = self.tangential_cometric
        return (-f(y + 2 * e) + 8 * f(y + e) - 8 * f(y - e) + f(y - 2 * e)) / (12 * h)

    def tangential_cometric_grad(self, y) -> np.ndarray:
        """Derivatives of the tangential cometric in the tangential directions."""
        h = 1e-5
        out = []
        for k in range(self.dim - 1):
            e = np.zeros(self.dim)
            e[k] = h
            f = self.tangential_cometric
            out.append((-f(y + 2 * e) + 8 * f(y + e) - 8 * f(y - e) + f(y - 2 * e)) / (12 * h))
        return np.array(out)

    def pull_covector(self, y, xi) -> np.ndarray:
        return self.jacobian(y).T @ np.asarray(xi, dtype=float)

    def push_covector(self, y, eta) -> np.ndarray:
        return np.linalg.solve(self.jacobian(y).T, np.asarray(eta, dtype=float))

    def R(self, y_t, y_d: float, eta_t) -> float:
        y = np.append(np.asarray(y_t, dtype=float), y_d)
        eta_t = np.asarray(eta_t, dtype=float)
        if self.dim == 1:
            return 0.0
        return float(eta_t @ self.tangential_cometric(y) @ eta_t)

    def dR_dyd(self, y_t, y_d: float, eta_t) -> float:
        y = np.append(np.asarray(y_t, dtype=float), y_d)
        eta_t = np.asarray(eta_t, dtype=float)
        if self.dim == 1:
            return 0.0
        return float(eta_t @ self.tangential_cometric_dyd(y) @ eta_t)

    def reduced_symbol(self, y, eta) -> float:
        y = np.asarray(y, dtype=float)
        eta = np.asarray(eta, dtype=float)
        return eta[-1] ** 2 + self.R(y[:-1], y[-1], eta[:-1]) - 1.0

    def field_HR(self, y_t, eta_t):
        """Tangential Hamiltonian field of ``R(., 0, .)`` in chart coordinates."""
        y = np.append(np.asarray(y_t, dtype=float), 0.0)
        eta_t = np.asarray(eta_t, dtype=float)
        H = self.tangential_cometric(y)
        dH = self.tangential_cometric_grad(y)
        dy = 2.0 * H @ eta_t
        deta = -np.array([eta_t @ dH[k] @ eta_t for k in range(self.dim - 1)])
        return dy, deta


class FlatChart(Chart):
    """Affine chart ``x = origin + T y' + n y_d`` for a flat boundary piece."""

    def __init__(self, origin, tangents, normal):
        self.origin = np.array(origin, dtype=float)
        self.normal = np.array(normal, dtype=float)
        self.dim = self.origin.size
        T = np.array(tangents, dtype=float).reshape(self.dim, self.dim - 1)
        self.J = np.column_stack([T, self.normal]) if self.dim > 1 else self.normal.reshape(1, 1)

    def to_chart(self, x):
        return np.linalg.solve(self.J, np.asarray(x, dtype=float) - self.origin)

    def from_chart(self, y):
        return self.origin + self.J @ np.asarray(y, dtype=float)

    def jacobian(self, y):
        return self.J

    def tangential_cometric(self, y):
        return np.eye(self.dim - 1)

    def tangential_cometric_dyd(self, y):
        return np.zeros((self.dim - 1, self.dim - 1))

    def tangential_cometric_grad(self, y):
        return np.zeros((self.dim - 1, self.dim - 1, self.dim - 1))


class PolarChart(Chart):
    """``(theta, y_d)`` with ``r = radius - side * y_d``.

    ``side = +1`` for the inside of a circle (disc, outer annulus boundary),
    ``side = -1`` for the outside (disc exterior, inner annulus boundary).
    """

    dim = 2

    def __init__(self, center, radius: float, side: int, theta0: float):
        self.center = np.array(center, dtype=float)
        self.radius = float(radius)
        self.side = int(side)
        self.theta0 = float(theta0)

    def _r(self, y_d):
        return self.radius - self.side * y_d

    def to_chart(self, x):
        v = np.asarray(x, dtype=float) - self.center
        r = math.hypot(v[0], v[1])
        th = math.atan2(v[1], v[0])
        th = self.theta0 + (th - self.theta0 + math.pi) % (2 * math.pi) - math.pi
        return np.array([th, self.side * (self.radius - r)])

    def from_chart(self, y):
        th, yd = float(y[0]), float(y[1])
        r = self._r(yd)
        return self.center + r * np.array([math.cos(th), math.sin(th)])

    def jacobian(self, y):
        th, yd = float(y[0]), float(y[1])
        r = self._r(yd)
        c, s = math.cos(th), math.sin(th)
        return np.array([[-r * s, -self.side * c], [r * c, -self.side * s]])

    def tangential_cometric(self, y):
        return np.array([[1.0 / self._r(float(y[1])) ** 2]])

    def tangential_cometric_dyd(self, y):
        r = self._r(float(y[1]))
        return np.array([[2.0 * self.side / r**3]])

    def tangential_cometric_grad(self, y):
        return np.zeros((1, 1, 1))


class SphericalChart(Chart):
    """Latitude/longitude chart of a sphere rotated so the base point sits at (lat, lon) = (0, 0).

    ``x = center + r Q (cos y1 cos y2, cos y1 sin y2, sin y1)`` and
    ``r = radius - side * y_d``.
    """

    dim = 3

    def __init__(self, center, radius: float, side: int, rotation):
        self.center = np.array(center, dtype=float)
        self.radius = float(radius)
        self.side = int(side)
        self.Q = np.array(rotation, dtype=float)

    def _r(self, y_d):
        return self.radius - self.side * y_d

    def to_chart(self, x):
        u = self.Q.T @ (np.asarray(x, dtype=float) - self.center)
        r = float(np.linalg.norm(u))
        lat = math.asin(max(-1.0, min(1.0, u[2] / r)))
        lon = math.atan2(u[1], u[0])
        return np.array([lat, lon, self.side * (self.radius - r)])

    def from_chart(self, y):
        lat, lon, yd = (float(v) for v in y)
        r = self._r(yd)
        u = np.array([math.cos(lat) * math.cos(lon), math.cos(lat) * math.sin(lon), math.sin(lat)])
        return self.center + r * (self.Q @ u)

    def jacobian(self, y):
        lat, lon, yd = (float(v) for v in y)
        r = self._r(yd)
        cl, sl, co, so = math.cos(lat), math.sin(lat), math.cos(lon), math.sin(lon)
        d_lat = r * np.array([-sl * co, -sl * so, cl])
        d_lon = r * np.array([-cl * so, cl * co, 0.0])
        d_yd = -self.side * np.array([cl * co, cl * so, sl])
        return self.Q @ np.column_stack([d_lat, d_lon, d_yd])

    def tangential_cometric(self, y):
        lat, yd = float(y[0]), float(y[2])
        r = self._r(yd)
        return np.diag([1.0 / r**2, 1.0 / (r * math.cos(lat)) ** 2])

    def tangential_cometric_dyd(self, y):
        r = self._r(float(y[2]))
        return 2.0 * self.side / r * self.tangential_cometric(y)

    def tangential_cometric_grad(self, y):
        lat, yd = float(y[0]), float(y[2])
        r = self._r(yd)
        out = np.zeros((2, 2, 2))
        out[0, 1, 1] = 2.0 * math.sin(lat) / (r**2 * math.cos(lat) ** 3)
        return out

    def interface_R0(self, eta_lon: float) -> float:
        """``R_0`` on the equator ``{lat = 0}`` of the chart."""
        return eta_lon**2 / self.radius**2

    def field_HR0(self, eta_lon: float):
        """Hamiltonian field of ``R_0`` on the chart equator: ``(dlon/ds, deta/ds)``."""
        return 2.0 * eta_lon / self.radius**2, 0.0


class NumericalChart(Chart):
    """Normal geodesic chart built by projecting onto the boundary and shooting geodesics.

    The boundary point for tangential coordinates ``y'`` is the Newton projection of
    ``base + T y'`` onto ``{phi = 0}``; the point at depth ``y_d`` is reached by the
    flow of ``H_p`` from the unit inward conormal for flow time ``y_d / 2``.
    """

    def __init__(self, domain: "Domain", metric: MetricField, base):
        self.domain = domain
        self.metric = metric
        self.base = np.array(base, dtype=float)
        self.dim = self.base.size
        g = domain.grad_phi(self.base)
        if self.dim > 1:
            q, _ = np.linalg.qr(np.column_stack([g, np.eye(self.dim)]))
            self.T = q[:, 1 : self.dim]
        else:
            self.T = np.zeros((1, 0))
        self.scale = 1e-5 * max(1.0, domain.diameter)

    def _boundary_point(self, y_t):
        x = self.base + self.T @ np.asarray(y_t, dtype=float)
        for _ in range(50):
            f = float(self.domain.phi(x))
            g = self.domain.grad_phi(x)
            step = f / float(g @ g)
            x = x - step * g
            if abs(f) < 1e-15 * max(1.0, self.domain.diameter):
                break
        return x

    def from_chart(self, y):
        y = np.asarray(y, dtype=float)
        b = self._boundary_point(y[:-1])
        if y[-1] == 0.0:
            return b
        G = self.metric.G(b)
        n = self.domain.grad_phi(b)
        n = n / math.sqrt(float(n @ G @ n))
        d = self.dim
        metric = self.metric

        def rhs(_s, z):
            x, xi = z[:d], z[d:]
            dG = metric.dG(x)
            return np.concatenate([2.0 * metric.G(x) @ xi, -np.einsum("kij,i,j->k", dG, xi, xi)])

        sol = solve_ivp(rhs, (0.0, 0.5 * y[-1]), np.concatenate([b, n]), method="DOP853", rtol=1e-12, atol=1e-14)
        if not sol.success:
            raise ChartFailure(sol.message)
        return sol.y[:d, -1]

    def jacobian(self, y):
        y = np.asarray(y, dtype=float)
        h = self.scale
        cols = []
        for k in range(self.dim):
            e = np.zeros(self.dim)
            e[k] = h
            f = self.from_chart
            cols.append((-f(y + 2 * e) + 8 * f(y + e) - 8 * f(y - e) + f(y - 2 * e)) / (12 * h))
        return np.column_stack(cols)

    def to_chart(self, x):
        x = np.asarray(x, dtype=float)
        y = np.append(self.T.T @ (x - self.base), float(self.domain.normal_coordinate(x)))
        for _ in range(30):
            r = self.from_chart(y) - x
            if np.linalg.norm(r) < 1e-13 * max(1.0, self.domain.diameter):
                return y
            y = y - np.linalg.solve(self.jacobian(y), r)
        raise ChartFailure("chart inversion did not converge")

    def cometric(self, y):
        J = self.jacobian(y)
        Jinv = np.linalg.inv(J)
        return Jinv @ self.metric.G(self.from_chart(y)) @ Jinv.T

    def tangential_cometric(self, y):
        return self.cometric(y)[: self.dim - 1, : self.dim - 1]

    def form_defect(self, y) -> float:
        """Deviation of the chart cometric from the block form ``diag(H, 1)``."""
        c = self.cometric(y)
        return float(max(abs(c[-1, -1] - 1.0), np.max(np.abs(c[-1, :-1])) if self.dim > 1 else 0.0))


# ---------------------------------------------------------------------------
# domains


class Domain:
    """Base class; subclasses implement ``phi`` and its derivatives."""

    dim: int
    catalog_id: Optional[str] = None
    diameter: float = 1.0
    bounded: bool = True

    def __init__(self, partition: Optional[Partition] = None):
        self.partition = partition if partition is not None else NoPartition(self.dim)

    # level set -------------------------------------------------------------
    def phi(self, x):
        raise NotImplementedError

    def grad_phi(self, x) -> np.ndarray:
        return fd_gradient(self.phi, x)

    def hess_phi(self, x) -> np.ndarray:
        return fd_jacobian(self.grad_phi, x)

    def normal_coordinate(self, x):
        """Signed distance to the boundary (positive inside) near the boundary."""
        g = self.grad_phi(x)
        return float(self.phi(x)) / float(np.linalg.norm(g))

    # partition -------------------------------------------------------------
    def psi(self, x):
        return self.partition.psi(x)

    def grad_psi(self, x):
        return self.partition.grad(x)

    def hess_psi(self, x):
        return self.partition.hess(x)

    # misc ------------------------------------------------------------------
    @property
    def is_catalog(self) -> bool:
        return self.catalog_id is not None

    @property
    def tol_band(self) -> float:
        return TOL_BAND_CATALOG if self.is_catalog else TOL_BAND_GENERIC

    def singular_distance(self, x) -> float:
        """Distance to boundary singularities (corners); infinite for smooth domains."""
        return math.inf

    def chart(self, x) -> Chart:
        raise ChartFailure("no closed-form chart")

    def project_to_boundary(self, x) -> np.ndarray:
        x = np.array(x, dtype=float)
        for _ in range(50):
            f = float(self.phi(x))
            g = self.grad_phi(x)
            x = x - f / float(g @ g) * g
            if abs(f) < 1e-16 * max(1.0, self.diameter):
                break
        return x

    def bounding_box(self):
        raise NotImplementedError

    def interior_lattice(self, resolution: int) -> np.ndarray:
        lo, hi = self.bounding_box()
        axes = [lo[k] + (np.arange(resolution) + 0.5) * (hi[k] - lo[k]) / resolution for k in range(self.dim)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)
        margin = 10 * self.tol_band
        keep = np.array([float(self.phi(p)) > margin for p in pts], dtype=bool)
        return pts[keep]

    def boundary_param(self, t) -> np.ndarray:
        """Point on the boundary for ``t`` in [0, 1) (d = 2 curves)."""
        raise NotImplementedError

    def boundary_lattice(self, n: int) -> np.ndarray:
        ts = (np.arange(n) + 0.5) / n
        return np.array([self.boundary_param(t) for t in ts])

    def gamma_points(self, n: int = 8) -> np.ndarray:
        """Points of the interface ``{phi = 0, psi = 0}``."""
        if not self.partition.has_interface or self.dim < 2:
            return np.zeros((0, self.dim))
        if self.dim == 2:
            return self._gamma_points_curve()
        raise NotImplementedError

    def _gamma_points_curve(self, samples: int = 4096) -> np.ndarray:
        from scipy.optimize import brentq

        ts = np.linspace(0.0, 1.0, samples + 1)
        vals = np.array([float(self.psi(self.boundary_param(t % 1.0))) for t in ts])
        pts = []
        for i in range(samples):
            if vals[i] == 0.0:
                pts.append(self.boundary_param(ts[i]))
            elif vals[i] * vals[i + 1] < 0:
                t = brentq(lambda s: float(self.psi(self.boundary_param(s % 1.0))), ts[i], ts[i + 1], xtol=1e-15)
                pts.append(self.boundary_param(t % 1.0))
        return np.array(pts).reshape(-1, self.dim)


class Interval(Domain):
    dim = 1
    catalog_id = "interval"

    def __init__(self, a: float = 0.0, b: float = 1.0, partition=None):
        if not b > a:
            raise ValueError("interval needs b > a")
        self.a, self.b = float(a), float(b)
        self.diameter = self.b - self.a
        super().__init__(partition)

    def phi(self, x):
        x = np.asarray(x, dtype=float)
        return np.minimum(x[..., 0] - self.a, self.b - x[..., 0])

    def grad_phi(self, x):
        x = np.asarray(x, dtype=float)
        return np.array([1.0]) if x[0] - self.a <= self.b - x[0] else np.array([-1.0])

    def hess_phi(self, x):
        return np.zeros((1, 1))

    def normal_coordinate(self, x):
        return float(self.phi(x))

    def chart(self, x):
        x = np.asarray(x, dtype=float)
        if abs(x[0] - self.a) <= abs(x[0] - self.b):
            return FlatChart([self.a], np.zeros((1, 0)), [1.0])
        return FlatChart([self.b], np.zeros((1, 0)), [-1.0])

    def bounding_box(self):
        return np.array([self.a]), np.array([self.b])

    def boundary_lattice(self, n: int = 2):
        return np.array([[self.a], [self.b]])


class HalfSpace(Domain):
    """``{x_d > 0}`` in dimension ``dim``; unbounded."""

    catalog_id = "halfspace"
    bounded = False

    def __init__(self, dim: int = 2, partition=None, box: float = 1.0):
        self.dim = int(dim)
        self.diameter = float(box)
        super().__init__(partition)

    def phi(self, x):
        return np.asarray(x, dtype=float)[..., -1]

    def grad_phi(self, x):
        g = np.zeros(self.dim)
        g[-1] = 1.0
        return g

    def hess_phi(self, x):
        return np.zeros((self.dim, self.dim))

    def normal_coordinate(self, x):
        return float(np.asarray(x, dtype=float)[-1])

    def chart(self, x):
        x = np.asarray(x, dtype=float)
        origin = x.copy()
        origin[-1] = 0.0
        T = np.eye(self.dim)[:, : self.dim - 1]
        return FlatChart(origin, T, np.eye(self.dim)[:, -1])

    def bounding_box(self):
        lo = -self.diameter * np.ones(self.dim)
        lo[-1] = 0.0
        return lo, self.diameter * np.ones(self.dim)

    def boundary_param(self, t):
        return np.array([self.diameter * (2 * t - 1), 0.0]) if self.dim == 2 else NotImplemented


class Rectangle(Domain):
    """Axis-aligned rectangle; corners are excluded through ``r_corner`` balls."""

    dim = 2
    catalog_id = "rectangle"

    def __init__(self, x0=0.0, x1=1.0, y0=0.0, y1=1.0, partition=None, r_corner: float = 1e-3):
        self.x0, self.x1, self.y0, self.y1 = float(x0), float(x1), float(y0), float(y1)
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError("degenerate rectangle")
        self.r_corner = float(r_corner)
        self.diameter = math.hypot(self.x1 - self.x0, self.y1 - self.y0)
        self.corners = np.array([[self.x0, self.y0], [self.x1, self.y0], [self.x1, self.y1], [self.x0, self.y1]])
        super().__init__(partition)

    def _pieces(self, x):
        x = np.asarray(x, dtype=float)
        return np.stack([x[..., 0] - self.x0, self.x1 - x[..., 0], x[..., 1] - self.y0, self.y1 - x[..., 1]], axis=-1)

    _GRADS = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])

    def phi(self, x):
        return np.min(self._pieces(x), axis=-1)

    def active_side(self, x) -> int:
        return int(np.argmin(self._pieces(x)))

    def grad_phi(self, x):
        return self._GRADS[self.active_side(x)].copy()

    def hess_phi(self, x):
        return np.zeros((2, 2))

    def normal_coordinate(self, x):
        return float(self.phi(x))

    def singular_distance(self, x):
        return float(np.min(np.linalg.norm(self.corners - np.asarray(x, dtype=float), axis=-1)))

    def chart(self, x):
        x = np.asarray(x, dtype=float)
        k = self.active_side(x)
        n = self._GRADS[k]
        t = np.array([-n[1], n[0]])
        origin = x - float(self._pieces(x)[k]) * n
        return FlatChart(origin, t.reshape(2, 1), n)

    def bounding_box(self):
        return np.array([self.x0, self.y0]), np.array([self.x1, self.y1])

    def boundary_param(self, t):
        w, h = self.x1 - self.x0, self.y1 - self.y0
        s = (t % 1.0) * 2 * (w + h)
        if s < w:
            return np.array([self.x0 + s, self.y0])
        s -= w
        if s < h:
            return np.array([self.x1, self.y0 + s])
        s -= h
        if s < w:
            return np.array([self.x1 - s, self.y1])
        s -= w
        return np.array([self.x0, self.y1 - s])


class _Round(Domain):
    """Shared closed forms for circles and spheres."""

    side = 1

    def __init__(self, center, radius: float, partition=None):
        self.center = np.array(center, dtype=float)
        self.dim = self.center.size
        self.radius = float(radius)
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        self.diameter = 2 * self.radius
        super().__init__(partition)

    def _r(self, x):
        return np.linalg.norm(np.asarray(x, dtype=float) - self.center, axis=-1)

    def phi(self, x):
        return self.side * (self.radius - self._r(x))

    def grad_phi(self, x):
        v = np.asarray(x, dtype=float) - self.center
        return -self.side * v / np.linalg.norm(v)

    def hess_phi(self, x):
        v = np.asarray(x, dtype=float) - self.center
        r = np.linalg.norm(v)
        u = v / r
        return -self.side * (np.eye(self.dim) - np.outer(u, u)) / r

    def normal_coordinate(self, x):
        return float(self.phi(x))

    def chart(self, x):
        v = np.asarray(x, dtype=float) - self.center
        if self.dim == 2:
            return PolarChart(self.center, self.radius, self.side, math.atan2(v[1], v[0]))
        u = v / np.linalg.norm(v)
        n = getattr(self.partition, "normal", None)
        if n is not None and abs(float(np.dot(n, u))) < 1e-8 * np.linalg.norm(n):
            e3 = np.asarray(n, dtype=float) / np.linalg.norm(n)
        else:
            trial = np.eye(3)[int(np.argmin(np.abs(u)))]
            e3 = trial - np.dot(trial, u) * u
            e3 /= np.linalg.norm(e3)
        e2 = np.cross(e3, u)
        return SphericalChart(self.center, self.radius, self.side, np.column_stack([u, e2, e3]))

    def project_to_boundary(self, x):
        v = np.asarray(x, dtype=float) - self.center
        return self.center + self.radius * v / np.linalg.norm(v)

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius

    def boundary_param(self, t):
        th = 2 * math.pi * t
        return self.center + self.radius * np.array([math.cos(th), math.sin(th)])

    def gamma_points(self, n: int = 8):
        if self.dim == 3 and isinstance(self.partition, LinearPartition):
            nrm = self.partition.normal / np.linalg.norm(self.partition.normal)
            dist = (self.partition.offset - float(nrm @ self.center) * np.linalg.norm(self.partition.normal))
            dist /= np.linalg.norm(self.partition.normal)
            if abs(dist) >= self.radius:
                return np.zeros((0, 3))
            rho = math.sqrt(self.radius**2 - dist**2)
            trial = np.eye(3)[int(np.argmin(np.abs(nrm)))]
            e1 = trial - (trial @ nrm) * nrm
            e1 /= np.linalg.norm(e1)
            e2 = np.cross(nrm, e1)
            th = 2 * math.pi * (np.arange(n) + 0.5) / n
            return self.center + dist * nrm + rho * (np.outer(np.cos(th), e1) + np.outer(np.sin(th), e2))
        return super().gamma_points(n)


class Disc(_Round):
    catalog_id = "disc"

    def __init__(self, center=(0.0, 0.0), radius: float = 1.0, partition=None):
        super().__init__(center, radius, partition)
        if self.dim != 2:
            raise ValueError("disc center must be 2-dimensional")


class DiscExterior(_Round):
    """Outside of a disc; unbounded (used for diffractive boundary points)."""

    catalog_id = "disc_exterior"
    side = -1
    bounded = False

    def __init__(self, center=(0.0, 0.0), radius: float = 1.0, partition=None):
        super().__init__(center, radius, partition)

    def bounding_box(self):
        return self.center - 3 * self.radius, self.center + 3 * self.radius


class Ball3(_Round):
    catalog_id = "ball3"

    def __init__(self, center=(0.0, 0.0, 0.0), radius: float = 1.0, partition=None):
        super().__init__(center, radius, partition)
        if self.dim != 3:
            raise ValueError("ball3 center must be 3-dimensional")

    def boundary_lattice(self, n: int):
        # Fibonacci sphere
        k = np.arange(n) + 0.5
        z = 1 - 2 * k / n
        th = math.pi * (1 + math.sqrt(5)) * k
        rr = np.sqrt(1 - z**2)
        return self.center + self.radius * np.column_stack([rr * np.cos(th), rr * np.sin(th), z])


class Annulus(Domain):
    dim = 2
    catalog_id = "annulus"

    def __init__(self, center=(0.0, 0.0), r_in: float = 0.5, r_out: float = 1.0, partition=None):
        self.center = np.array(center, dtype=float)
        self.r_in, self.r_out = float(r_in), float(r_out)
        if not 0 < self.r_in < self.r_out:
            raise ValueError("annulus needs 0 < r_in < r_out")
        self.diameter = 2 * self.r_out
        super().__init__(partition)

    def _r(self, x):
        return np.linalg.norm(np.asarray(x, dtype=float) - self.center, axis=-1)

    def _outer(self, x) -> bool:
        r = float(self._r(x))
        return self.r_out - r <= r - self.r_in

    def phi(self, x):
        r = self._r(x)
        return np.minimum(self.r_out - r, r - self.r_in)

    def grad_phi(self, x):
        v = np.asarray(x, dtype=float) - self.center
        u = v / np.linalg.norm(v)
        return -u if self._outer(x) else u

    def hess_phi(self, x):
        v = np.asarray(x, dtype=float) - self.center
        r = np.linalg.norm(v)
        u = v / r
        h = (np.eye(2) - np.outer(u, u)) / r
        return -h if self._outer(x) else h

    def normal_coordinate(self, x):
        return float(self.phi(x))

    def chart(self, x):
        v = np.asarray(x, dtype=float) - self.center
        th = math.atan2(v[1], v[0])
        if self._outer(x):
            return PolarChart(self.center, self.r_out, 1, th)
        return PolarChart(self.center, self.r_in, -1, th)

    def project_to_boundary(self, x):
        v = np.asarray(x, dtype=float) - self.center
        r = self.r_out if self._outer(x) else self.r_in
        return self.center + r * v / np.linalg.norm(v)

    def bounding_box(self):
        return self.center - self.r_out, self.center + self.r_out

    def boundary_param(self, t):
        # first half: outer circle, second half: inner circle
        t = t % 1.0
        r = self.r_out if t < 0.5 else self.r_in
        th = 4 * math.pi * (t % 0.5)
        return self.center + r * np.array([math.cos(th), math.sin(th)])


class LevelSetDomain(Domain):
    """User-provided level set; derivatives by finite differences unless given."""

    def __init__(
        self,
        dim: int,
        phi: Callable,
        grad_phi: Optional[Callable] = None,
        hess_phi: Optional[Callable] = None,
        partition=None,
        box=None,
        boundary_param: Optional[Callable] = None,
    ):
        self.dim = int(dim)
        self._phi = phi
        self._grad = grad_phi
        self._hess = hess_phi
        self._param = boundary_param
        if box is None:
            box = (-np.ones(self.dim), np.ones(self.dim))
        self._box = (np.asarray(box[0], dtype=float), np.asarray(box[1], dtype=float))
        self.diameter = float(np.linalg.norm(self._box[1] - self._box[0]))
        super().__init__(partition)

    def phi(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim > 1:
            return np.array([self._phi(p) for p in x.reshape(-1, self.dim)]).reshape(x.shape[:-1])
        return float(self._phi(x))

    def grad_phi(self, x):
        if self._grad is not None:
            return np.asarray(self._grad(np.asarray(x, dtype=float)), dtype=float)
        return fd_gradient(self.phi, x)

    def hess_phi(self, x):
        if self._hess is not None:
            return np.asarray(self._hess(np.asarray(x, dtype=float)), dtype=float)
        return fd_jacobian(self.grad_phi, x)

    def bounding_box(self):
        return self._box

    def boundary_param(self, t):
        if self._param is None:
            raise NotImplementedError("no boundary parametrization supplied")
        return np.asarray(self._param(t), dtype=float)


# ---------------------------------------------------------------------------
# operations


def normal_chart(domain: Domain, metric: MetricField, boundary_point) -> Chart:
    """Boundary-adapted chart at ``boundary_point`` (closed form for catalog domains)."""
    x = np.asarray(boundary_point, dtype=float)
    tol = domain.tol_band
    if abs(float(domain.phi(x))) > tol * max(1.0, domain.diameter):
        raise NotOnBoundary(f"|phi(x)| = {abs(float(domain.phi(x))):.3e} exceeds {tol:.1e}")
    if np.linalg.norm(domain.grad_phi(x)) < EPS_GRAD:
        raise DegenerateNormal("gradient of phi vanishes")
    metric.validate(x)
    if domain.is_catalog and metric.is_euclidean:
        return domain.chart(x)
    return NumericalChart(domain, metric, x)


def classify_region(domain: Domain, x, tol_band: Optional[float] = None) -> Region:
    x = np.asarray(x, dtype=float)
    tol = domain.tol_band if tol_band is None else tol_band
    f = float(domain.phi(x))
    if f > tol:
        return Region.INTERIOR
    if f < -tol:
        return Region.EXTERIOR
    if domain.partition.has_interface:
        g = domain.grad_psi(x)
        s = float(domain.psi(x)) / max(float(np.linalg.norm(g)), 1e-300)
        if abs(s) <= tol:
            return Region.INTERFACE
        return Region.DIRICHLET if s < 0 else Region.NEUMANN
    return Region.DIRICHLET


# ---------------------------------------------------------------------------
# factories used by the configuration layer

_DOMAIN_FACTORIES = {
    "interval": lambda p, part: Interval(p.get("a", 0.0), p.get("b", 1.0), part),
    "halfspace": lambda p, part: HalfSpace(int(p.get("dim", 2)), part),
    "rectangle": lambda p, part: Rectangle(
        p.get("x0", 0.0), p.get("x1", 1.0), p.get("y0", 0.0), p.get("y1", 1.0), part, p.get("r_corner", 1e-3)
    ),
    "disc": lambda p, part: Disc(p.get("center", (0.0, 0.0)), p.get("radius", 1.0), part),
    "disc_exterior": lambda p, part: DiscExterior(p.get("center", (0.0, 0.0)), p.get("radius", 1.0), part),
    "annulus": lambda p, part: Annulus(p.get("center", (0.0, 0.0)), p.get("r_in", 0.5), p.get("r_out", 1.0), part),
    "ball3": lambda p, part: Ball3(p.get("center", (0.0, 0.0, 0.0)), p.get("radius", 1.0), part),
}

DOMAIN_DIMS = {"interval": 1, "rectangle": 2, "disc": 2, "disc_exterior": 2, "annulus": 2, "ball3": 3}


def make_partition(kind: str, dim: int, normal=None, offset: float = 0.0) -> Partition:
    if kind == "none":
        return NoPartition(dim)
    if kind == "linear":
        if normal is None or len(normal) != dim:
            raise ValueError("linear partition needs a normal of the domain dimension")
        return LinearPartition(normal, offset)
    raise ValueError(f"unknown partition kind {kind!r}")


def make_domain(catalog_id: str, params: dict, partition: Optional[Partition] = None) -> Domain:
    try:
        factory = _DOMAIN_FACTORIES[catalog_id]
    except KeyError:
        raise ValueError(f"unknown catalog_id {catalog_id!r}") from None
    return factory(params, partition)


def make_damping(kind: str, params: dict) -> DampingField:
    value = params.get("value", 1.0)
    width = params.get("width", 0.0)
    if kind == "zero":
        return ZeroDamping()
    if kind == "constant":
        return ConstantDamping(value)
    if kind == "ball":
        return BallDamping(params["center"], params["radius"], value, width)
    if kind == "annulus":
        return AnnulusDamping(params["center"], params["r_in"], params["r_out"], value, width)
    if kind == "strip":
        return StripDamping(params.get("axis", 0), params["lo"], params["hi"], value, width)
    raise ValueError(f"unknown damping kind {kind!r}")
