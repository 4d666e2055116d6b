"""Finite-difference damped wave system with Zaremba boundary conditions.

Grids are node-centred on an interval or an axis-aligned rectangle.  The
stiffness matrix ``K`` is the discrete energy form ``sum p (du)^2`` over grid
edges, so it is symmetric by construction; Neumann closure is the ghost-node
reflection, which in this form amounts to halving the mass and edge weights on
boundary lines.  Dirichlet nodes (``psi <= 0`` on the boundary) are removed.

The generator acting on ``U = (u0, u1)`` is ``A = [[0, I], [-W^{-1} K, -D_a]]``
and the energy is ``E = u0' K u0 + u1' W u1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .geometry import DampingField, Domain, Interval, MetricField, Rectangle, ZeroDamping

__all__ = [
    "WaveError",
    "UnsupportedDomain",
    "ResolutionTooLow",
    "NotPositiveDefinite",
    "LinearSolveFailure",
    "NonPositiveEnergy",
    "SingularShift",
    "EigensolverFailure",
    "DiscreteOperator",
    "EnergyTrace",
    "ResolventScan",
    "assemble",
    "with_damping",
    "energy",
    "evolve_wave",
    "fit_decay",
    "spectrum",
    "spectral_abscissa",
    "energy_generator",
    "resolvent_norm",
    "resolvent_scan",
    "trace_scaling_experiment",
    "dyadic_block_ratio",
    "default_initial_state",
]

DENSE_CAP = 4000


class WaveError(RuntimeError):
    pass


class UnsupportedDomain(WaveError):
    pass


class ResolutionTooLow(WaveError):
    pass


class NotPositiveDefinite(WaveError):
    pass


class LinearSolveFailure(WaveError):
    pass


class NonPositiveEnergy(WaveError):
    pass


class SingularShift(WaveError):
    pass


class EigensolverFailure(WaveError):
    pass


@dataclass
class DiscreteOperator:
    stiffness: sp.csr_matrix
    mass: np.ndarray
    damping_diag: np.ndarray
    nodes: np.ndarray
    dof_kind: np.ndarray
    shape: Tuple[int, ...]
    spacing: Tuple[float, ...]
    grid_index: np.ndarray
    domain: Domain

    @property
    def n(self) -> int:
        return self.mass.size

    def generator(self) -> sp.csr_matrix:
        n = self.n
        Winv = sp.diags(1.0 / self.mass)
        top = sp.hstack([sp.csr_matrix((n, n)), sp.identity(n, format="csr")])
        bot = sp.hstack([-(Winv @ self.stiffness), -sp.diags(self.damping_diag)])
        return sp.vstack([top, bot]).tocsc()

    def energy_matrix(self) -> sp.csc_matrix:
        return sp.block_diag([self.stiffness, sp.diags(self.mass)]).tocsc()

    def full_field(self, u) -> np.ndarray:
        """Scatter dof values onto the full grid (zero at Dirichlet nodes)."""
        out = np.zeros(int(np.prod(self.shape)), dtype=np.result_type(u, float))
        out[self.grid_index] = u
        return out.reshape(self.shape)


@dataclass
class EnergyTrace:
    t: np.ndarray
    E: np.ndarray
    residual: np.ndarray
    fitted: Optional[Tuple[float, float]] = None

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residual)) if self.residual.size else 0.0


@dataclass
class ResolventScan:
    mu: np.ndarray
    norms: np.ndarray
    spectral_abscissa: float


# ---------------------------------------------------------------------------
# assembly


def _check_metric(metric: MetricField, pts):
    for x in pts:
        G = metric.G(x)
        if np.max(np.abs(G - np.diag(np.diag(G)))) > 0:
            raise UnsupportedDomain("off-diagonal metric coefficients are not supported by the grid assembly")


def assemble(
    domain: Domain,
    metric: MetricField,
    damping: Optional[DampingField],
    resolution: int,
    first_order: bool = False,
) -> DiscreteOperator:
    """Assemble the stiffness, mass and damping on a structured grid.

    ``resolution`` is the number of cells per side.  ``first_order`` adds the
    Hermitian part of ``sum p_j D_j`` (central differences), making the
    stiffness complex Hermitian.
    """
    damping = damping or ZeroDamping()
    if resolution < 4:
        raise ResolutionTooLow("resolution must be >= 4")
    if isinstance(domain, Interval):
        op = _assemble_1d(domain, metric, damping, resolution, first_order)
    elif isinstance(domain, Rectangle):
        op = _assemble_2d(domain, metric, damping, resolution, first_order)
    else:
        raise UnsupportedDomain(f"no structured grid for domain {domain.catalog_id or type(domain).__name__}")
    return op


def _dirichlet(domain, x) -> bool:
    return float(domain.psi(x)) <= 0.0


def _finalize(domain, metric, damping, K_full, w_full, nodes, on_bdry, shape, spacing, first):
    N = nodes.shape[0]
    keep = np.array([not (on_bdry[i] and _dirichlet(domain, nodes[i])) for i in range(N)])
    if keep.all():
        p0 = np.array([metric.p_zero(x) for x in nodes])
        if not np.any(p0 > 0):
            raise NotPositiveDefinite("no Dirichlet nodes and no zeroth-order term: stiffness is singular")
    idx = np.flatnonzero(keep)
    K_full = K_full.tocsr()
    p0 = np.array([metric.p_zero(x) for x in nodes])
    if np.any(p0 != 0):
        K_full = K_full + sp.diags(p0 * w_full)
    if first is not None:
        K_full = K_full + first
    K = K_full[idx][:, idx].tocsr()
    K.eliminate_zeros()
    kind = np.where(on_bdry[idx], "neumann", "interior")
    a = np.asarray(damping(nodes[idx]), dtype=float).reshape(-1)
    if np.any(a < 0):
        raise ValueError("damping must be nonnegative")
    return DiscreteOperator(K, w_full[idx], a, nodes[idx], kind, shape, spacing, idx, domain)


def _first_order_1d(metric, nodes, w, h):
    # Hermitian part of p(x) D_x with D = -i d/dx, central differences
    N = nodes.shape[0]
    pj = np.array([metric.p_first(x)[0] for x in nodes])
    B = sp.diags([np.ones(N - 1), -np.ones(N - 1)], [1, -1]) * (-0.5j / h)
    B = sp.diags(w * pj) @ B
    return 0.5 * (B + B.conj().T)


def _assemble_1d(domain: Interval, metric, damping, res, first_order):
    a, b = domain.a, domain.b
    h = (b - a) / res
    nodes = (a + h * np.arange(res + 1)).reshape(-1, 1)
    _check_metric(metric, nodes)
    mids = 0.5 * (nodes[1:] + nodes[:-1])
    k = np.array([metric.G(m)[0, 0] for m in mids]) / h
    N = res + 1
    diag = np.zeros(N)
    diag[:-1] += k
    diag[1:] += k
    K = sp.diags([diag, -k, -k], [0, 1, -1], format="csr")
    w = np.full(N, h)
    w[0] = w[-1] = 0.5 * h
    on_bdry = np.zeros(N, dtype=bool)
    on_bdry[[0, -1]] = True
    first = _first_order_1d(metric, nodes, w, h) if (first_order and metric.has_first_order) else None
    return _finalize(domain, metric, damping, K, w, nodes, on_bdry, (N,), (h,), first)


def _assemble_2d(domain: Rectangle, metric, damping, res, first_order):
    nx = ny = res
    hx = (domain.x1 - domain.x0) / nx
    hy = (domain.y1 - domain.y0) / ny
    xs = domain.x0 + hx * np.arange(nx + 1)
    ys = domain.y0 + hy * np.arange(ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    _check_metric(metric, nodes[:: max(1, nodes.shape[0] // 64)])
    idx = np.arange(nodes.shape[0]).reshape(nx + 1, ny + 1)
    rows, cols, vals = [], [], []

    def edge(i0, i1, c):
        rows.extend([i0, i1, i0, i1])
        cols.extend([i0, i1, i1, i0])
        vals.extend([c, c, -c, -c])

    for i in range(nx):
        for j in range(ny + 1):
            m = np.array([xs[i] + 0.5 * hx, ys[j]])
            c = metric.G(m)[0, 0] * hy / hx * (0.5 if j in (0, ny) else 1.0)
            edge(idx[i, j], idx[i + 1, j], c)
    for i in range(nx + 1):
        for j in range(ny):
            m = np.array([xs[i], ys[j] + 0.5 * hy])
            c = metric.G(m)[1, 1] * hx / hy * (0.5 if i in (0, nx) else 1.0)
            edge(idx[i, j], idx[i, j + 1], c)
    N = nodes.shape[0]
    K = sp.coo_matrix((vals, (rows, cols)), shape=(N, N)).tocsr()
    wx = np.full(nx + 1, hx)
    wx[[0, -1]] *= 0.5
    wy = np.full(ny + 1, hy)
    wy[[0, -1]] *= 0.5
    w = np.outer(wx, wy).ravel()
    on_bdry = np.zeros((nx + 1, ny + 1), dtype=bool)
    on_bdry[[0, -1], :] = True
    on_bdry[:, [0, -1]] = True
    first = None
    if first_order and metric.has_first_order:
        first = _first_order_2d(metric, nodes, w, idx, hx, hy)
    return _finalize(domain, metric, damping, K, w, nodes, on_bdry.ravel(), (nx + 1, ny + 1), (hx, hy), first)


def _first_order_2d(metric, nodes, w, idx, hx, hy):
    nx1, ny1 = idx.shape
    N = nodes.shape[0]
    pj = np.array([metric.p_first(x) for x in nodes])
    B = sp.lil_matrix((N, N), dtype=complex)
    for i in range(nx1):
        for j in range(ny1):
            r = idx[i, j]
            if 0 < i < nx1 - 1:
                B[r, idx[i + 1, j]] += -0.5j / hx * pj[r, 0] * w[r]
                B[r, idx[i - 1, j]] += 0.5j / hx * pj[r, 0] * w[r]
            if 0 < j < ny1 - 1:
                B[r, idx[i, j + 1]] += -0.5j / hy * pj[r, 1] * w[r]
                B[r, idx[i, j - 1]] += 0.5j / hy * pj[r, 1] * w[r]
    B = B.tocsr()
    return 0.5 * (B + B.conj().T)


def with_damping(op: DiscreteOperator, damping: DampingField) -> DiscreteOperator:
    a = np.asarray(damping(op.nodes), dtype=float).reshape(-1)
    return DiscreteOperator(op.stiffness, op.mass, a, op.nodes, op.dof_kind, op.shape, op.spacing, op.grid_index, op.domain)


# ---------------------------------------------------------------------------
# time stepping


def energy(op: DiscreteOperator, u0, u1) -> float:
    return float(np.real(np.vdot(u0, op.stiffness @ u0)) + np.real(np.vdot(u1, op.mass * u1)))


def default_initial_state(op: DiscreteOperator, center=None, width: float = 0.1):
    """Gaussian displacement bump at rest."""
    lo, hi = op.domain.bounding_box()
    c = 0.5 * (lo + hi) if center is None else np.asarray(center, dtype=float)
    r2 = np.sum((op.nodes - c) ** 2, axis=1)
    return np.exp(-r2 / width**2), np.zeros(op.n)


def evolve_wave(op: DiscreteOperator, u0, u1, T: float, dt: float) -> EnergyTrace:
    """Implicit midpoint rule; records E at every step and the discrete dissipation residual.

    The scheme satisfies ``E+ - E = -2 dt (a u1_mid | u1_mid)_W`` exactly in
    exact arithmetic, so ``residual`` measures rounding only.
    """
    if dt <= 0 or T <= 0:
        raise ValueError("T and dt must be positive")
    n = op.n
    A = op.generator()
    I2 = sp.identity(2 * n, format="csc")
    try:
        lu = spla.splu((I2 - 0.5 * dt * A).tocsc())
    except RuntimeError as exc:
        raise LinearSolveFailure(str(exc)) from exc
    B = (I2 + 0.5 * dt * A).tocsr()
    steps = int(round(T / dt))
    U = np.concatenate([np.asarray(u0, dtype=float), np.asarray(u1, dtype=float)])
    Wa = op.mass * op.damping_diag
    t = np.empty(steps + 1)
    E = np.empty(steps + 1)
    res = np.empty(steps)
    t[0] = 0.0
    E[0] = energy(op, U[:n], U[n:])
    for k in range(steps):
        Un = lu.solve(B @ U)
        if not np.all(np.isfinite(Un)):
            raise LinearSolveFailure("non-finite state")
        v_mid = 0.5 * (U[n:] + Un[n:])
        E[k + 1] = energy(op, Un[:n], Un[n:])
        res[k] = abs(E[k + 1] - E[k] + 2.0 * dt * float(v_mid @ (Wa * v_mid)))
        t[k + 1] = (k + 1) * dt
        U = Un
    return EnergyTrace(t, E, res)


def fit_decay(trace: EnergyTrace) -> Tuple[float, float]:
    """Least-squares fit of ``log E`` on the tail ``[T/2, T]``; returns ``(C, c)`` with ``c >= 0``."""
    t = np.asarray(trace.t, dtype=float)
    E = np.asarray(trace.E, dtype=float)
    if t.size < 10:
        raise ValueError("need at least 10 samples")
    if np.any(E <= 0):
        raise NonPositiveEnergy("energy must be positive to fit a decay rate")
    T = t[-1]
    m = t >= 0.5 * T
    slope, intercept = np.polyfit(t[m], np.log(E[m]), 1)
    C, c = float(math.exp(intercept)), float(max(-slope, 0.0))
    trace.fitted = (C, c)
    return C, c


# ---------------------------------------------------------------------------
# spectra


def energy_generator(op: DiscreteOperator) -> np.ndarray:
    """Dense generator in an energy-orthonormal basis, ``[[0, L^1/2], [-L^1/2, -Q' W D Q]]``."""
    K = op.stiffness.toarray()
    lam, Q = sla.eigh(K, np.diag(op.mass))
    if lam[0] <= 0:
        raise NotPositiveDefinite(f"smallest stiffness eigenvalue {lam[0]:.3e} is not positive")
    s = np.sqrt(lam)
    D = Q.conj().T @ ((op.mass * op.damping_diag)[:, None] * Q)
    n = op.n
    At = np.zeros((2 * n, 2 * n), dtype=np.result_type(D, float))
    At[:n, n:] = np.diag(s)
    At[n:, :n] = -np.diag(s)
    At[n:, n:] = -D
    return At


def spectrum(op: DiscreteOperator, k: int = 40, sigma: complex = 0.0) -> np.ndarray:
    """Eigenvalues of the generator.

    Dense when ``2n <= DENSE_CAP``; otherwise ``k`` eigenvalues nearest
    ``sigma`` by shift-invert Arnoldi.
    """
    try:
        if 2 * op.n <= DENSE_CAP:
            ev = sla.eigvals(energy_generator(op))
        else:
            ev = spla.eigs(op.generator().astype(complex), k=k, sigma=sigma, return_eigenvectors=False)
    except (np.linalg.LinAlgError, spla.ArpackError, spla.ArpackNoConvergence) as exc:
        raise EigensolverFailure(str(exc)) from exc
    return ev[np.lexsort((ev.imag, ev.real))]


def spectral_abscissa(eigs) -> float:
    return float(np.max(np.real(eigs)))


def _norm_A(op: DiscreteOperator) -> float:
    lam = spla.eigsh(op.stiffness, k=1, M=sp.diags(op.mass).tocsc(), which="LA", return_eigenvectors=False)[0]
    return math.sqrt(max(float(np.real(lam)), 0.0)) + float(np.max(op.damping_diag, initial=0.0))


def resolvent_norm(
    op: DiscreteOperator,
    mu: float,
    method: str = "lanczos",
    rtol: float = 1e-4,
    maxiter: int = 500,
    norm_A: Optional[float] = None,
    v0=None,
) -> float:
    """Energy-norm of ``(A - i mu)^{-1}``.

    ``method`` is ``"lanczos"`` (largest eigenvalue of ``R* R`` by implicitly
    restarted Lanczos in the energy inner product), ``"power"`` (plain power
    iteration on ``R* R``) or ``"dense"`` (SVD of the energy-orthonormal
    generator, small problems only).
    """
    n = op.n
    if method == "dense":
        At = energy_generator(op)
        sv = sla.svdvals(At - 1j * mu * np.eye(2 * n))
        nA = float(sla.svdvals(At)[0]) if norm_A is None else norm_A
        if sv[-1] == 0 or nA / sv[-1] >= 1e10:
            raise SingularShift(f"mu = {mu} hits the spectrum")
        return float(1.0 / sv[-1])
    A = op.generator().astype(complex)
    shift = (A - 1j * mu * sp.identity(2 * n, format="csc")).tocsc()
    try:
        lu = spla.splu(shift)
    except RuntimeError as exc:
        raise SingularShift(f"mu = {mu}: {exc}") from exc
    M = op.energy_matrix()
    Mc = M.astype(complex)
    def R(v):
        return lu.solve(v)

    def RH(v):
        return lu.solve(v, trans="H")

    def RstarR_M(v):
        # M R* R v = R^H M R v
        return RH(Mc @ R(v))

    nA = _norm_A(op) if norm_A is None else norm_A
    rng = np.random.default_rng(12345)
    if v0 is None:
        v0 = rng.standard_normal(2 * n) + 1j * rng.standard_normal(2 * n)
    if method == "power":
        v = v0 / math.sqrt(np.real(np.vdot(v0, Mc @ v0)))
        lam_old = 0.0
        Minv = spla.splu(M)
        for _ in range(maxiter):
            w = Minv.solve(np.real(RstarR_M(v))) + 1j * Minv.solve(np.imag(RstarR_M(v)))
            lam = float(np.real(np.vdot(v, Mc @ w)))
            v = w / math.sqrt(np.real(np.vdot(w, Mc @ w)))
            if abs(lam - lam_old) <= rtol * abs(lam):
                break
            lam_old = lam
        norm = math.sqrt(lam)
    elif method == "lanczos":
        Minv = spla.splu(M)
        Bop = spla.LinearOperator((2 * n, 2 * n), matvec=RstarR_M, dtype=complex)
        Mop = spla.LinearOperator((2 * n, 2 * n), matvec=lambda v: Mc @ v, dtype=complex)
        Minv_op = spla.LinearOperator(
            (2 * n, 2 * n), matvec=lambda v: Minv.solve(np.real(v)) + 1j * Minv.solve(np.imag(v)), dtype=complex
        )
        try:
            lam = spla.eigsh(Bop, k=1, M=Mop, Minv=Minv_op, which="LA", tol=rtol * 1e-2, v0=v0, return_eigenvectors=False)[0]
        except (spla.ArpackError, spla.ArpackNoConvergence) as exc:
            raise EigensolverFailure(str(exc)) from exc
        norm = math.sqrt(float(np.real(lam)))
    else:
        raise ValueError(f"unknown method {method!r}")
    if not math.isfinite(norm) or norm * nA >= 1e10:
        raise SingularShift(f"mu = {mu}: resolvent norm {norm:.3e} exceeds the conditioning cap")
    return norm


def _scan_chunk(args):
    op, mus, method, nA = args
    return [resolvent_norm(op, m, method=method, norm_A=nA) for m in mus]


def resolvent_scan(op: DiscreteOperator, mus: Sequence[float], method: str = "lanczos", threads: int = 1) -> ResolventScan:
    mus = np.asarray(mus, dtype=float)
    nA = _norm_A(op)
    if threads > 1 and mus.size > 1:
        from concurrent.futures import ProcessPoolExecutor

        chunks = np.array_split(mus, threads)
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_scan_chunk, [(op, c, method, nA) for c in chunks]))
        norms = np.concatenate([np.asarray(p) for p in parts])
    else:
        norms = np.array([resolvent_norm(op, m, method=method, norm_A=nA) for m in mus])
    ab = spectral_abscissa(spectrum(op)) if 2 * op.n <= DENSE_CAP else float("nan")
    return ResolventScan(mus, norms, ab)


# ---------------------------------------------------------------------------
# boundary traces of eigenmodes


def _modes(op: DiscreteOperator, count: int):
    if op.n <= count + 1:
        raise EigensolverFailure("grid too coarse for the requested number of modes")
    W = sp.diags(op.mass).tocsc()
    try:
        lam, V = spla.eigsh(op.stiffness.tocsc(), k=count, M=W, sigma=0.0, which="LM")
    except (spla.ArpackError, spla.ArpackNoConvergence) as exc:
        raise EigensolverFailure(str(exc)) from exc
    order = np.argsort(lam)
    return lam[order], V[:, order]


def _boundary_loop(shape):
    nx1, ny1 = shape
    loop = [(i, 0) for i in range(nx1)]
    loop += [(nx1 - 1, j) for j in range(1, ny1)]
    loop += [(i, ny1 - 1) for i in range(nx1 - 2, -1, -1)]
    loop += [(0, j) for j in range(ny1 - 2, 0, -1)]
    return loop


def _loop_operator(shape, hx, hy):
    """Periodic weighted second difference along the boundary loop; returns (S, w) with L = S / w."""
    loop = _boundary_loop(shape)
    m = len(loop)
    pts = np.array([[i * hx, j * hy] for i, j in loop])
    seg = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
    w = 0.5 * (seg + np.roll(seg, 1))
    S = np.zeros((m, m))
    for k in range(m):
        c = 1.0 / seg[k]
        k2 = (k + 1) % m
        S[k, k] += c
        S[k2, k2] += c
        S[k, k2] -= c
        S[k2, k] -= c
    return loop, S, w


def _frac_norm(f, S, w, h, s):
    lam, V = sla.eigh(S, np.diag(w))
    c = V.T @ (w * f)
    return float(math.sqrt(np.sum((1.0 + h * h * np.maximum(lam, 0.0)) ** s * np.abs(c) ** 2)))


def trace_scaling_experiment(op: DiscreteOperator, count: int = 200) -> dict:
    """Boundary traces of the first ``count`` eigenmodes.

    For each mode ``phi_n`` (unit in the discrete L2 norm) with
    ``h_n = lambda_n^{-1/2}`` this reports ``q_n = h^{1/2} |phi|_{1/2}`` and
    ``r_n = h^{1/2} |h d_nu phi|_{-1/2}``, with semiclassical boundary norms
    ``|f|_s = |(1 + h^2 L)^{s/2} f|`` built from the boundary second
    difference ``L`` (pointwise values in one dimension), together with the
    unscaled traces ``|phi|_{1/2}`` and ``|h d_nu phi|_{-1/2}``.
    """
    lam, V = _modes(op, count)
    h = 1.0 / np.sqrt(lam)
    tr0 = np.empty(count)
    tr1 = np.empty(count)
    if len(op.shape) == 1:
        dx = op.spacing[0]
        for k in range(count):
            u = op.full_field(V[:, k])
            # outward normal derivatives at x = a and x = b, one-sided second order
            dn_a = -(-3 * u[0] + 4 * u[1] - u[2]) / (2 * dx)
            dn_b = (3 * u[-1] - 4 * u[-2] + u[-3]) / (2 * dx)
            tr0[k] = math.hypot(u[0], u[-1])
            tr1[k] = h[k] * math.hypot(dn_a, dn_b)
    else:
        hx, hy = op.spacing
        loop, S, w = _loop_operator(op.shape, hx, hy)
        nx1, ny1 = op.shape
        for k in range(count):
            u = op.full_field(V[:, k])
            f = np.array([u[i, j] for i, j in loop])
            dn = np.zeros(len(loop))
            for m, (i, j) in enumerate(loop):
                corner = i in (0, nx1 - 1) and j in (0, ny1 - 1)
                if corner:
                    continue
                if j == 0:
                    dn[m] = -(-3 * u[i, 0] + 4 * u[i, 1] - u[i, 2]) / (2 * hy)
                elif j == ny1 - 1:
                    dn[m] = (3 * u[i, -1] - 4 * u[i, -2] + u[i, -3]) / (2 * hy)
                elif i == 0:
                    dn[m] = -(-3 * u[0, j] + 4 * u[1, j] - u[2, j]) / (2 * hx)
                else:
                    dn[m] = (3 * u[-1, j] - 4 * u[-2, j] + u[-3, j]) / (2 * hx)
            tr0[k] = _frac_norm(f, S, w, h[k], 0.5)
            tr1[k] = _frac_norm(h[k] * dn, S, w, h[k], -0.5)
    q = np.sqrt(h) * tr0
    r = np.sqrt(h) * tr1
    return {
        "lambda": lam,
        "h": h,
        "q": q,
        "r": r,
        "trace": tr0,
        "normal_trace": tr1,
        "max_q": float(np.max(q)),
        "max_r": float(np.max(r)),
        "scaled_block_ratio": dyadic_block_ratio(np.maximum(q, r)),
        "unscaled_block_ratio": dyadic_block_ratio(np.maximum(tr0, tr1)),
    }


def dyadic_block_ratio(values) -> float:
    """Max over min of the block maxima on mode blocks ``[2^j, 2^{j+1})`` (1-based)."""
    v = np.asarray(values, dtype=float)
    maxima = []
    j = 0
    while 2**j <= v.size:
        blk = v[2**j - 1 : min(2 ** (j + 1) - 1, v.size)]
        maxima.append(float(np.max(blk)))
        j += 1
    maxima = np.array(maxima)
    if np.min(maxima) <= 0:
        return float("inf")
    return float(np.max(maxima) / np.min(maxima))
