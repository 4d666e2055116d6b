"""Generalized bicharacteristic flow on interior and boundary phase space.

Interior arcs integrate ``H_p`` with an embedded Runge-Kutta pair (DOP853) and
locate boundary crossings on the dense output.  Boundary events reflect at
hyperbolic points and branch at glancing points according to contact order
and the sign of the contact coefficient.  Gliding arcs integrate the
constrained field on ``Sigma`` and singular arcs the field on ``Sigma'``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
from scipy.integrate import DOP853
from scipy.optimize import brentq, minimize_scalar

from .geometry import Domain, MetricField, Region, classify_region
from .symbol import (
    BoundaryClassification,
    GlanceKind,
    PhasePoint,
    classify_boundary,
    eps_glance_for,
    gliding_field,
    hamiltonian_field,
    interface_R0,
    reduced_R,
    singular_field,
    symbol_p,
    tangential_part,
    unit_conormal,
)

log = logging.getLogger(__name__)

__all__ = [
    "FlowOptions",
    "Segment",
    "BoundaryEvent",
    "Trajectory",
    "FlowError",
    "StepFailure",
    "evolve",
    "evolve_on_gamma",
    "time_reverse",
    "trajectory_records",
]

INTERIOR_ARC = "InteriorArc"
GLIDING_ARC = "GlidingArc"
SINGULAR_ARC = "SingularArc"

REFLECT = "Reflect"
ENTER_GLIDING = "EnterGliding"
LEAVE_GLIDING = "LeaveGliding"
ENTER_INTERIOR = "EnterInterior"
TERMINATE = "Terminate"

N_SUB = 8


class FlowError(RuntimeError):
    pass


class StepFailure(FlowError):
    pass


@dataclass
class FlowOptions:
    rtol: float = 1e-12
    atol: float = 1e-14
    tol_event: Optional[float] = None
    tol_char: float = 1e-8
    eps_glance: Optional[float] = None
    s_probe: float = 1e-2
    k_max: int = 6
    max_events: int = 10_000
    r_corner: Optional[float] = None
    gamma_policy: str = "terminate"
    max_step: Optional[float] = None
    target: Optional[Callable] = None
    record_samples: bool = True

    def __post_init__(self):
        if self.gamma_policy not in ("terminate", "continue-hyperbolic"):
            raise ValueError(f"unknown gamma policy {self.gamma_policy!r}")


@dataclass
class Segment:
    kind: str
    s_start: float
    s_end: float
    s: np.ndarray
    x: np.ndarray
    xi: np.ndarray


@dataclass
class BoundaryEvent:
    s: float
    x: np.ndarray
    xi_in: np.ndarray
    xi_out: np.ndarray
    action: str
    classification: Optional[BoundaryClassification] = None
    region: Optional[str] = None
    reason: Optional[str] = None


@dataclass
class Trajectory:
    seed: PhasePoint
    s_total: float
    segments: List[Segment] = field(default_factory=list)
    events: List[BoundaryEvent] = field(default_factory=list)
    status: str = "complete"
    reason: Optional[str] = None
    s_final: float = 0.0
    final: Optional[PhasePoint] = None
    target_s: Optional[float] = None
    start_classification: Optional[BoundaryClassification] = None

    @property
    def complete(self) -> bool:
        return self.status == "complete"

    @property
    def terminated(self) -> bool:
        return self.status == "terminated"


def time_reverse(rho: PhasePoint) -> PhasePoint:
    return rho.reversed()


# ---------------------------------------------------------------------------


class _Builder:
    def __init__(self, kind, s0, x0, xi0, record):
        self.kind = kind
        self.s = [s0]
        self.x = [np.array(x0, dtype=float)]
        self.xi = [np.array(xi0, dtype=float)]
        self.record = record

    def add(self, s, x, xi):
        self.s.append(s)
        self.x.append(np.array(x, dtype=float))
        self.xi.append(np.array(xi, dtype=float))

    def finish(self, s, x, xi) -> Segment:
        if s != self.s[-1]:
            self.add(s, x, xi)
        if not self.record and len(self.s) > 2:
            self.s = [self.s[0], self.s[-1]]
            self.x = [self.x[0], self.x[-1]]
            self.xi = [self.xi[0], self.xi[-1]]
        return Segment(self.kind, self.s[0], self.s[-1], np.array(self.s), np.array(self.x), np.array(self.xi))


class _Tracer:
    def __init__(self, domain: Domain, metric: MetricField, opts: FlowOptions):
        self.domain = domain
        self.metric = metric
        self.opts = opts
        self.d = domain.dim
        self.tol_event = opts.tol_event if opts.tol_event is not None else (1e-10 if domain.is_catalog else 1e-7)
        self.tol_arm = 10.0 * self.tol_event
        self.eps = opts.eps_glance if opts.eps_glance is not None else eps_glance_for(domain, metric)
        self.max_step = opts.max_step if opts.max_step is not None else 0.05 * domain.diameter
        rc = opts.r_corner if opts.r_corner is not None else getattr(domain, "r_corner", 1e-3)
        self.r_corner = rc
        self.has_corners = math.isfinite(domain.singular_distance(np.zeros(self.d) + 0.5))
        self.target = opts.target

    # --- right-hand sides ------------------------------------------------
    def _rhs_interior(self, _s, z):
        d = self.d
        if self.metric.is_constant:
            return np.concatenate([2.0 * self.metric.G(None) @ z[d:], np.zeros(d)])
        dx, dxi = hamiltonian_field(self.metric, z[:d], z[d:])
        return np.concatenate([dx, dxi])

    def _rhs_gliding(self, _s, z):
        dx, dxi = gliding_field(self.domain, self.metric, z[: self.d], z[self.d :])
        return np.concatenate([dx, dxi])

    def _rhs_singular(self, _s, z):
        dx, dxi = singular_field(self.domain, self.metric, z[: self.d], z[self.d :])
        return np.concatenate([dx, dxi])

    # --- helpers ---------------------------------------------------------
    def _phi(self, X):
        return np.asarray(self.domain.phi(X), dtype=float)

    def _target_vals(self, X):
        return np.array([float(self.target(p)) for p in X])

    def _corner_vals(self, X):
        return np.array([self.domain.singular_distance(p) - self.r_corner for p in X])

    def _classify(self, x, xi_t, probe=True):
        return classify_boundary(
            self.domain, self.metric, x, xi_t, eps_glance=self.eps, s_probe=self.opts.s_probe, k_max=self.opts.k_max, probe=probe
        )

    def _region(self, x):
        return classify_region(self.domain, x)

    def _reflect(self, x, xi):
        g = self.domain.grad_phi(x)
        G = self.metric.G(x)
        return xi - 2.0 * float(xi @ G @ g) / float(g @ G @ g) * g

    def _depart(self, x, xi_t, R):
        return xi_t + math.sqrt(max(1.0 - R, 0.0)) * unit_conormal(self.domain, self.metric, x)

    # --- scanning for events inside a step ---------------------------------
    def _first_root(self, f, a, b):
        return brentq(f, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)

    def _scan_interior(self, dense, ts, Z, armed, prev):
        """Earliest event inside one step as ``(s, kind)`` or None, plus the armed flag and carry-over."""
        d = self.d
        X = Z[:d].T
        ph = self._phi(X)
        cands = []

        def phi_at(t):
            if prev is not None and t < ts[0]:
                return float(self.domain.phi(prev[2](t)[:d]))
            return float(self.domain.phi(dense(t)[:d]))

        # sign changes of phi
        for i in range(len(ts) - 1):
            a, b = ts[i], ts[i + 1]
            if armed:
                if ph[i] > 0 and ph[i + 1] <= 0:
                    cands.append((self._first_root(phi_at, a, b) if ph[i + 1] < 0 else b, "boundary"))
                    break
            else:
                if ph[i + 1] < -self.tol_event:
                    # never armed: the crossing sits after the last positive sample
                    left = next((ts[j] for j in range(i, -1, -1) if ph[j] > 0), None)
                    cands.append((self._first_root(phi_at, left, b) if left is not None else a, "boundary"))
                    break
                if ph[i + 1] > self.tol_arm:
                    armed = True
        # shallow dips that leave and re-enter between samples
        if armed:
            seq_t = ts if prev is None else np.concatenate([[prev[0]], ts])
            seq_p = ph if prev is None else np.concatenate([[prev[1]], ph])
            for i in range(1, len(seq_t) - 1):
                if seq_p[i] > 0 and seq_p[i + 1] > 0 and seq_p[i] <= seq_p[i - 1] and seq_p[i] <= seq_p[i + 1]:
                    lo, hi = seq_t[i - 1], seq_t[i + 1]
                    res = minimize_scalar(phi_at, bounds=(lo, hi), method="bounded", options={"xatol": 1e-14})
                    if res.fun <= 0:
                        root = self._first_root(phi_at, lo, res.x) if phi_at(lo) > 0 else lo
                        cands.append((root, "boundary"))
                        break
        if self.has_corners:
            cv = self._corner_vals(X)
            for i in range(len(ts) - 1):
                if cv[i] > 0 and cv[i + 1] <= 0:
                    f = lambda t: self.domain.singular_distance(dense(t)[:d]) - self.r_corner  # noqa: E731
                    cands.append((self._first_root(f, ts[i], ts[i + 1]), "corner"))
                    break
        if self.target is not None:
            tv = self._target_vals(X)
            for i in range(len(ts) - 1):
                if tv[i] <= 0 < tv[i + 1]:
                    f = lambda t: float(self.target(dense(t)[:d]))  # noqa: E731
                    cands.append((self._first_root(f, ts[i], ts[i + 1]), "target"))
                    break
        if not cands:
            return None, armed, (ts[-2], ph[-2], dense)
        cands.sort(key=lambda c: c[0])
        s_ev, kind = cands[0]
        z = prev[2](s_ev) if (prev is not None and s_ev < ts[0]) else dense(s_ev)
        return (s_ev, kind, z), armed, None

    # --- arcs ------------------------------------------------------------
    def interior_arc(self, s0, x0, xi0, s_end, from_boundary):
        z0 = np.concatenate([x0, xi0])
        seg = _Builder(INTERIOR_ARC, s0, x0, xi0, self.opts.record_samples)
        if s_end <= s0:
            return seg.finish(s0, x0, xi0), s0, x0, xi0, "end"
        solver = DOP853(self._rhs_interior, s0, z0, s_end, rtol=self.opts.rtol, atol=self.opts.atol, max_step=self.max_step)
        armed = not from_boundary or float(self.domain.phi(x0)) > self.tol_arm
        prev = None
        d = self.d
        while solver.status == "running":
            solver.step()
            if solver.status == "failed":
                raise StepFailure(f"integrator failed at s={solver.t}")
            dense = solver.dense_output()
            ts = np.linspace(solver.t_old, solver.t, N_SUB + 1)
            Z = dense(ts)
            ev, armed, prev = self._scan_interior(dense, ts, Z, armed, prev)
            if ev is not None:
                s_ev, kind, z = ev
                while len(seg.s) > 1 and seg.s[-1] >= s_ev:
                    seg.s.pop()
                    seg.x.pop()
                    seg.xi.pop()
                return seg.finish(s_ev, z[:d], z[d:]), s_ev, z[:d], z[d:], kind
            seg.add(solver.t, solver.y[:d], solver.y[d:])
        z = solver.y
        return seg.finish(solver.t, z[:d], z[d:]), solver.t, z[:d], z[d:], "end"

    def _project_boundary(self, x, xi):
        x = self.domain.project_to_boundary(x)
        xi_t, _ = tangential_part(self.domain, self.metric, x, xi)
        return x, xi_t

    def gliding_arc(self, s0, x0, xi0, s_end):
        d = self.d
        seg = _Builder(GLIDING_ARC, s0, x0, xi0, self.opts.record_samples)
        if s_end <= s0:
            return seg.finish(s0, x0, xi0), s0, x0, xi0, "end"
        solver = DOP853(
            self._rhs_gliding, s0, np.concatenate([x0, xi0]), s_end, rtol=self.opts.rtol, atol=self.opts.atol, max_step=self.max_step
        )
        has_gamma = self.domain.partition.has_interface
        while solver.status == "running":
            solver.step()
            if solver.status == "failed":
                raise StepFailure(f"integrator failed at s={solver.t}")
            dense = solver.dense_output()
            ts = np.linspace(solver.t_old, solver.t, N_SUB + 1)
            Z = dense(ts)
            X = Z[:d].T
            cands = []
            if has_gamma:
                ps = np.asarray(self.domain.psi(X), dtype=float)
                for i in range(N_SUB):
                    if ps[i] * ps[i + 1] <= 0 and not (ps[i] == 0 and i == 0 and ts[0] == s0):
                        f = lambda t: float(self.domain.psi(dense(t)[:d]))  # noqa: E731
                        cands.append((self._first_root(f, ts[i], ts[i + 1]) if ps[i] != 0 else ts[i], "gamma"))
                        break
            dR = np.array([reduced_R(self.domain, self.metric, X[i], Z[d:, i])[1] for i in range(N_SUB + 1)])
            for i in range(N_SUB):
                if dR[i] > self.eps and dR[i + 1] <= self.eps:
                    f = lambda t: reduced_R(self.domain, self.metric, dense(t)[:d], dense(t)[d:])[1] - self.eps  # noqa: E731
                    cands.append((self._first_root(f, ts[i], ts[i + 1]), "departure"))
                    break
            if self.has_corners:
                cv = self._corner_vals(X)
                for i in range(N_SUB):
                    if cv[i] > 0 and cv[i + 1] <= 0:
                        f = lambda t: self.domain.singular_distance(dense(t)[:d]) - self.r_corner  # noqa: E731
                        cands.append((self._first_root(f, ts[i], ts[i + 1]), "corner"))
                        break
            if self.target is not None:
                tv = self._target_vals(X)
                for i in range(N_SUB):
                    if tv[i] <= 0 < tv[i + 1]:
                        f = lambda t: float(self.target(dense(t)[:d]))  # noqa: E731
                        cands.append((self._first_root(f, ts[i], ts[i + 1]), "target"))
                        break
            if cands:
                cands.sort(key=lambda c: c[0])
                s_ev, kind = cands[0]
                z = dense(s_ev)
                x, xi = self._project_boundary(z[:d], z[d:])
                return seg.finish(s_ev, x, xi), s_ev, x, xi, kind
            seg.add(solver.t, solver.y[:d], solver.y[d:])
        x, xi = self._project_boundary(solver.y[:d], solver.y[d:])
        return seg.finish(solver.t, x, xi), solver.t, x, xi, "end"

    # --- driver ----------------------------------------------------------
    def run(self, rho: PhasePoint, s_total: float) -> Trajectory:
        traj = Trajectory(seed=rho, s_total=s_total)
        dom = self.domain
        s = 0.0
        x = rho.x.copy()
        xi = rho.xi.copy()

        def finish(status, reason=None, mode="interior"):
            traj.status = status
            traj.reason = reason
            traj.s_final = s
            kind = "interior" if mode == "interior" else "boundary"
            traj.final = PhasePoint(kind, x, xi)
            return traj

        if rho.kind == "interface":
            raise ValueError("interface seeds are evolved with evolve_on_gamma")

        if self.target is not None and float(self.target(x)) > 0:
            traj.target_s = 0.0
            return finish("target", mode="interior" if rho.kind == "interior" else "boundary")

        mode = "interior"
        from_boundary = False
        if rho.kind == "interior":
            ph = float(dom.phi(x))
            if ph < -self.tol_event:
                raise ValueError("seed lies outside the domain")
            if ph <= self.tol_event:
                xi_t, nd = tangential_part(dom, self.metric, x, xi)
                if nd < -1e-12:
                    x0 = dom.project_to_boundary(x)
                    res = self.boundary_hit(traj, s, x0, xi)
                    if res is None:
                        x = x0
                        return finish("terminated", traj.events[-1].reason)
                    mode, x, xi = res
                    from_boundary = True
                elif nd <= 1e-12:
                    rho = PhasePoint("boundary", x, xi_t)
                else:
                    from_boundary = True
        if rho.kind == "boundary":
            x, xi_t = self._project_boundary(x, rho.xi)
            region = self._region(x)
            if region == Region.INTERFACE and self.opts.gamma_policy == "terminate":
                xi = xi_t
                return finish("terminated", "seed on Gamma", mode="boundary")
            cls = self._classify(x, xi_t)
            traj.start_classification = cls
            if cls.tag == GlanceKind.HYPERBOLIC:
                R = reduced_R(dom, self.metric, x, xi_t)[0]
                xi = self._depart(x, xi_t, R)
                mode = "interior"
                from_boundary = True
            elif cls.tag == GlanceKind.ELLIPTIC:
                xi = xi_t
                return finish("terminated", "elliptic seed", mode="boundary")
            else:
                fi = cls.forward_interior()
                xi = xi_t
                if fi is None:
                    return finish("terminated", cls.reason or "undetermined contact", mode="boundary")
                if region == Region.INTERFACE:
                    return finish("terminated", "non-hyperbolic Gamma point", mode="boundary")
                mode = "interior" if fi else "gliding"
                from_boundary = True

        while True:
            if len(traj.events) >= self.opts.max_events:
                return finish("terminated", "event cap reached", mode)
            if mode == "interior":
                seg, s, x, xi, why = self.interior_arc(s, x, xi, s_total, from_boundary)
            else:
                seg, s, x, xi, why = self.gliding_arc(s, x, xi, s_total)
            traj.segments.append(seg)
            if why == "end":
                return finish("complete", mode=mode)
            if why == "target":
                traj.target_s = s
                return finish("target", mode=mode)
            if why == "corner":
                traj.events.append(BoundaryEvent(s, x.copy(), xi.copy(), xi.copy(), TERMINATE, reason="corner ball"))
                return finish("terminated", "corner ball", mode)
            if why == "gamma":
                xb, xt = self._project_boundary(x, xi)
                cls = self._classify(xb, xt, probe=False)
                traj.events.append(
                    BoundaryEvent(s, xb, xt, xt, TERMINATE, cls, Region.INTERFACE.value, "gliding ray reached Gamma")
                )
                x, xi = xb, xt
                return finish("terminated", "gliding ray reached Gamma", mode)
            if why == "departure":
                cls = self._classify(x, xi)
                fi = cls.forward_interior()
                if fi is True:
                    traj.events.append(BoundaryEvent(s, x.copy(), xi.copy(), xi.copy(), LEAVE_GLIDING, cls, self._region(x).value))
                    mode = "interior"
                    from_boundary = True
                elif fi is None:
                    traj.events.append(
                        BoundaryEvent(s, x.copy(), xi.copy(), xi.copy(), TERMINATE, cls, self._region(x).value, cls.reason or "undetermined contact")
                    )
                    return finish("terminated", cls.reason or "undetermined contact", mode)
                continue
            if why == "boundary":
                res = self.boundary_hit(traj, s, x, xi)
                if res is None:
                    ev = traj.events[-1]
                    x, xi = ev.x, ev.xi_in
                    return finish("terminated", ev.reason, "boundary")
                mode, x, xi = res
                from_boundary = True
                continue
            raise FlowError(f"unexpected arc end {why!r}")

    def boundary_hit(self, traj, s, x, xi):
        """Handle arrival at the boundary from the interior; returns (mode, x, xi) or None on termination."""
        dom = self.domain
        x = dom.project_to_boundary(x)
        if self.has_corners and dom.singular_distance(x) < self.r_corner:
            traj.events.append(BoundaryEvent(s, x, xi.copy(), xi.copy(), TERMINATE, reason="corner ball"))
            return None
        region = self._region(x)
        xi_t, nd = tangential_part(dom, self.metric, x, xi)
        R = reduced_R(dom, self.metric, x, xi_t)[0]
        hyper = 1.0 - R > self.eps
        cls = self._classify(x, xi_t, probe=not hyper)
        if region == Region.INTERFACE:
            if self.opts.gamma_policy == "terminate" or cls.tag != GlanceKind.HYPERBOLIC:
                traj.events.append(BoundaryEvent(s, x, xi.copy(), xi.copy(), TERMINATE, cls, region.value, "Gamma encounter"))
                return None
        if cls.tag == GlanceKind.HYPERBOLIC:
            xo = self._reflect(x, xi)
            traj.events.append(BoundaryEvent(s, x, xi.copy(), xo, REFLECT, cls, region.value))
            return "interior", x, xo
        if cls.tag == GlanceKind.ELLIPTIC:
            traj.events.append(BoundaryEvent(s, x, xi.copy(), xi.copy(), TERMINATE, cls, region.value, "elliptic point"))
            return None
        fi = cls.forward_interior()
        if fi is None:
            traj.events.append(BoundaryEvent(s, x, xi.copy(), xi.copy(), TERMINATE, cls, region.value, cls.reason or "undetermined contact"))
            return None
        if fi:
            traj.events.append(BoundaryEvent(s, x, xi.copy(), xi.copy(), ENTER_INTERIOR, cls, region.value))
            return "interior", x, xi
        traj.events.append(BoundaryEvent(s, x, xi.copy(), xi_t, ENTER_GLIDING, cls, region.value))
        return "gliding", x, xi_t

    def singular(self, rho: PhasePoint, s_total: float) -> Trajectory:
        d = self.d
        traj = Trajectory(seed=rho, s_total=s_total)
        x, xi = rho.x.copy(), rho.xi.copy()
        seg = _Builder(SINGULAR_ARC, 0.0, x, xi, self.opts.record_samples)
        if self.target is not None and float(self.target(x)) > 0:
            traj.segments.append(seg.finish(0.0, x, xi))
            traj.status, traj.target_s, traj.final = "target", 0.0, PhasePoint("interface", x, xi)
            return traj
        if d == 2 or s_total == 0.0:
            traj.segments.append(seg.finish(s_total, x, xi))
            traj.s_final = s_total
            traj.final = PhasePoint("interface", x, xi)
            return traj
        solver = DOP853(self._rhs_singular, 0.0, np.concatenate([x, xi]), s_total, rtol=self.opts.rtol, atol=self.opts.atol, max_step=self.max_step)
        while solver.status == "running":
            solver.step()
            if solver.status == "failed":
                raise StepFailure(f"integrator failed at s={solver.t}")
            if self.target is not None:
                dense = solver.dense_output()
                ts = np.linspace(solver.t_old, solver.t, N_SUB + 1)
                Z = dense(ts)
                tv = self._target_vals(Z[:d].T)
                hit = None
                for i in range(N_SUB):
                    if tv[i] <= 0 < tv[i + 1]:
                        f = lambda t: float(self.target(dense(t)[:d]))  # noqa: E731
                        hit = self._first_root(f, ts[i], ts[i + 1])
                        break
                if hit is not None:
                    z = dense(hit)
                    traj.segments.append(seg.finish(hit, z[:d], z[d:]))
                    traj.status, traj.target_s, traj.s_final = "target", hit, hit
                    traj.final = PhasePoint("interface", z[:d], z[d:])
                    return traj
            seg.add(solver.t, solver.y[:d], solver.y[d:])
        z = solver.y
        traj.segments.append(seg.finish(solver.t, z[:d], z[d:]))
        traj.s_final = solver.t
        traj.final = PhasePoint("interface", z[:d], z[d:])
        return traj


# ---------------------------------------------------------------------------


def _mirror(traj: Trajectory, seed: PhasePoint) -> Trajectory:
    """Map a forward trajectory of the reversed seed to the backward trajectory of ``seed``."""
    out = Trajectory(seed=seed, s_total=-traj.s_total, status=traj.status, reason=traj.reason)
    out.s_final = -traj.s_final
    out.final = traj.final.reversed() if traj.final is not None else None
    out.target_s = None if traj.target_s is None else -traj.target_s
    out.start_classification = traj.start_classification
    for sg in traj.segments:
        out.segments.append(Segment(sg.kind, -sg.s_start, -sg.s_end, -sg.s, sg.x, -sg.xi))
    for ev in traj.events:
        out.events.append(BoundaryEvent(-ev.s, ev.x, -ev.xi_in, -ev.xi_out, ev.action, ev.classification, ev.region, ev.reason))
    return out


def evolve(domain: Domain, metric: MetricField, rho: PhasePoint, s_total: float, opts: Optional[FlowOptions] = None) -> Trajectory:
    """Generalized bicharacteristic from ``rho`` over the signed flow time ``s_total``.

    Negative times are handled by evolving the time-reversed seed; segments
    are listed in traversal order starting at the seed.
    """
    opts = opts or FlowOptions()
    if not math.isfinite(s_total):
        raise ValueError("s_total must be finite")
    if rho.kind == "interior":
        if abs(symbol_p(metric, rho.x, rho.xi)) > opts.tol_char:
            raise ValueError("seed is not characteristic")
    tracer = _Tracer(domain, metric, opts)
    if rho.kind == "interface":
        return evolve_on_gamma(domain, metric, rho, s_total, opts)
    if s_total >= 0:
        return tracer.run(rho, float(s_total))
    fwd = tracer.run(rho.reversed(), -float(s_total))
    return _mirror(fwd, rho)


def evolve_on_gamma(domain: Domain, metric: MetricField, rho: PhasePoint, s_total: float, opts: Optional[FlowOptions] = None) -> Trajectory:
    """Singular flow on ``T*Gamma``; stationary in dimension two."""
    opts = opts or FlowOptions()
    tracer = _Tracer(domain, metric, opts)
    x = np.asarray(rho.x, dtype=float)
    if abs(float(domain.phi(x))) > 1e3 * domain.tol_band or abs(float(domain.psi(x))) > 1e3 * domain.tol_band:
        raise ValueError("interface seed is not on Gamma")
    rho = PhasePoint("interface", x, rho.xi)
    if s_total >= 0:
        return tracer.singular(rho, float(s_total))
    return _mirror(tracer.singular(rho.reversed(), -float(s_total)), rho)


# ---------------------------------------------------------------------------


def _floats(a):
    return [float(v) for v in np.ravel(a)]


def trajectory_records(traj: Trajectory, seed_index: int = 0) -> List[dict]:
    """JSON-ready records: one seed header, then segments and events in traversal order."""
    recs = [
        {
            "type": "seed",
            "index": int(seed_index),
            "kind": traj.seed.kind,
            "x": _floats(traj.seed.x),
            "xi": _floats(traj.seed.xi),
            "s_total": float(traj.s_total),
            "status": traj.status,
            "reason": traj.reason,
        }
    ]
    # an event at the junction precedes the segment it starts
    items = [(abs(sg.s_start), 1, i, sg) for i, sg in enumerate(traj.segments)]
    items += [(abs(ev.s), 0, i, ev) for i, ev in enumerate(traj.events)]
    items.sort(key=lambda t: (t[0], t[1], t[2]))
    for _, typ, _, obj in items:
        if typ == 1:
            samples = [[float(s)] + _floats(x) + _floats(xi) for s, x, xi in zip(obj.s, obj.x, obj.xi)]
            recs.append({"type": "segment", "kind": obj.kind, "s_start": float(obj.s_start), "s_end": float(obj.s_end), "samples": samples})
        else:
            cls = obj.classification.tag if obj.classification is not None else None
            recs.append(
                {
                    "type": "event",
                    "s": float(obj.s),
                    "class": cls,
                    "action": obj.action,
                    "x": _floats(obj.x),
                    "xi_in": _floats(obj.xi_in),
                    "xi_out": _floats(obj.xi_out),
                    "region": obj.region,
                    "reason": obj.reason,
                }
            )
    return recs
