"""Finite-horizon checker for the modified geometric control condition.

A seed is Controlled when its generalized ray meets ``{a > a_min}`` within the
horizon, crossing the interface only at hyperbolic points (non-hyperbolic
interface encounters terminate the ray).  It is Failed only with a certificate:
an undamped closed orbit detected as a recurrence of post-reflection states on
a ray that is complete in both time directions.  Everything else is
Undetermined.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .flow import REFLECT, FlowOptions, Trajectory, evolve, evolve_on_gamma
from .geometry import DampingField, Domain, MetricField, Region, classify_region
from .symbol import PhasePoint, interface_R0, tangential_part

log = logging.getLogger(__name__)

__all__ = [
    "SeedVerdict",
    "MGCCReport",
    "check_mgcc",
    "seed_lattice",
    "find_period",
    "verify_witness",
    "CONTROLLED",
    "FAILED",
    "UNDETERMINED",
]

CONTROLLED = "Controlled"
FAILED = "Failed"
UNDETERMINED = "Undetermined"
A_MIN = 1e-12


@dataclass
class SeedVerdict:
    index: int
    seed: PhasePoint
    verdict: str
    s0: Optional[float] = None
    reason: Optional[str] = None
    witness: Optional[Trajectory] = None
    period: Optional[float] = None

    def as_dict(self) -> dict:
        d = {"index": self.index, "seed": self.seed.as_dict(), "verdict": self.verdict}
        if self.s0 is not None:
            d["s0"] = float(self.s0)
        if self.reason is not None:
            d["reason"] = self.reason
        if self.period is not None:
            d["period"] = float(self.period)
        return d


@dataclass
class MGCCReport:
    horizon: float
    per_seed: List[SeedVerdict] = field(default_factory=list)

    @property
    def seed_count(self) -> int:
        return len(self.per_seed)

    def counts(self) -> dict:
        c = {CONTROLLED: 0, FAILED: 0, UNDETERMINED: 0}
        for v in self.per_seed:
            c[v.verdict] += 1
        return c

    def summary(self) -> dict:
        times = [abs(v.s0) for v in self.per_seed if v.verdict == CONTROLLED]
        return {
            "counts": self.counts(),
            "min_control_time": min(times) if times else None,
            "max_control_time": max(times) if times else None,
            "horizon": float(self.horizon),
            "seed_count": self.seed_count,
        }

    @property
    def exit_code(self) -> int:
        c = self.counts()
        if c[FAILED]:
            return 1
        if c[UNDETERMINED]:
            return 2
        return 0


# ---------------------------------------------------------------------------
# seeds


def _unit_directions(dim: int, n: int, offset: float) -> np.ndarray:
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        th = 2 * math.pi * (np.arange(n) + offset) / n
        return np.column_stack([np.cos(th), np.sin(th)])
    k = np.arange(n) + 0.5
    z = 1 - 2 * k / n
    ang = math.pi * (1 + math.sqrt(5)) * k + 2 * math.pi * offset
    r = np.sqrt(1 - z**2)
    return np.column_stack([r * np.cos(ang), r * np.sin(ang), z])


def _characteristic(metric: MetricField, x, w) -> np.ndarray:
    return w / math.sqrt(float(w @ metric.G(x) @ w))


def seed_lattice(
    domain: Domain,
    metric: MetricField,
    resolution: int,
    n_dir: int = 8,
    seed: Optional[int] = None,
    boundary: int = 0,
    n_R: int = 4,
    gamma: int = 0,
) -> List[PhasePoint]:
    """Deterministic lattice in the characteristic set.

    Interior grid positions times ``n_dir`` unit-symbol directions (two in
    dimension one); ``seed`` rotates the direction fan by a random offset.
    ``boundary`` boundary positions carry tangential covectors with
    ``R = j / n_R`` for ``j = 1..n_R`` in both orientations (dimension two).
    ``gamma`` adds interface seeds.
    """
    offset = 0.0 if seed is None else float(np.random.default_rng(seed).uniform(0.0, 1.0))
    out: List[PhasePoint] = []
    dirs = _unit_directions(domain.dim, n_dir, offset)
    for x in domain.interior_lattice(resolution):
        for w in dirs:
            out.append(PhasePoint("interior", x, _characteristic(metric, x, w)))
    if boundary and domain.dim == 2:
        for x in domain.boundary_lattice(boundary):
            if domain.singular_distance(x) < getattr(domain, "r_corner", 0.0):
                continue
            if classify_region(domain, x) == Region.INTERFACE:
                continue
            g = domain.grad_phi(x)
            t = np.array([-g[1], g[0]])
            t, _ = tangential_part(domain, metric, x, t)
            tn = math.sqrt(float(t @ metric.G(x) @ t))
            for j in range(1, n_R + 1):
                for sgn in (1.0, -1.0):
                    out.append(PhasePoint("boundary", x, sgn * math.sqrt(j / n_R) * t / tn))
    if gamma and domain.partition.has_interface and domain.dim >= 2:
        for x in domain.gamma_points(gamma):
            if domain.dim == 2:
                out.append(PhasePoint("interface", x, np.zeros(2)))
                continue
            G = metric.G(x)
            g1, g2 = domain.grad_phi(x), domain.grad_psi(x)
            t = np.cross(g1, g2)
            t = t / math.sqrt(float(t @ G @ t))
            # covector dual to the tangent of Gamma, unit in R_0
            w = np.linalg.solve(G, t)
            w = w / math.sqrt(interface_R0(domain, metric, x, w))
            out.append(PhasePoint("interface", x, w))
            out.append(PhasePoint("interface", x, -w))
    return out


# ---------------------------------------------------------------------------
# periodic witnesses


def find_period(traj: Trajectory, tol: float = 1e-7):
    """First recurrence of a post-reflection state; returns ``(i, j, period)`` or None."""
    refl = [e for e in traj.events if e.action == REFLECT]
    for j in range(1, len(refl)):
        for i in range(j):
            if np.linalg.norm(refl[j].x - refl[i].x) + np.linalg.norm(refl[j].xi_out - refl[i].xi_out) < tol:
                return i, j, abs(refl[j].s - refl[i].s)
    return None


def verify_witness(domain: Domain, metric: MetricField, verdict: SeedVerdict, opts: Optional[FlowOptions] = None, tol: float = 1e-6) -> bool:
    """Re-trace a Failed witness and check that it reproduces its events and closes up."""
    if verdict.witness is None:
        return False
    w = verdict.witness
    again = evolve(domain, metric, verdict.seed, w.s_total, opts or FlowOptions())
    if [e.action for e in again.events] != [e.action for e in w.events]:
        return False
    for a, b in zip(again.events, w.events):
        if abs(a.s - b.s) > tol or np.linalg.norm(a.x - b.x) > tol:
            return False
    if verdict.period is None:
        return verdict.seed.kind == "interface"
    hit = find_period(again)
    return hit is not None and abs(hit[2] - verdict.period) <= tol * max(1.0, verdict.period)


# ---------------------------------------------------------------------------
# checker


class _Target:
    """Picklable ``a(x) - a_min``."""

    def __init__(self, damping: DampingField, a_min: float):
        self.damping = damping
        self.a_min = a_min

    def __call__(self, x):
        return float(self.damping(np.asarray(x, dtype=float))) - self.a_min


def _verdict_one(args) -> SeedVerdict:
    index, seed, domain, metric, damping, T, a_min, opts = args
    target = _Target(damping, a_min)
    if target(seed.x) > 0:
        return SeedVerdict(index, seed, CONTROLLED, 0.0)
    o = FlowOptions(**{**opts.__dict__, "target": target})
    try:
        if seed.kind == "interface":
            fwd = evolve_on_gamma(domain, metric, seed, T, o)
        else:
            fwd = evolve(domain, metric, seed, T, o)
        s_plus = fwd.target_s if fwd.status == "target" else None
        back_T = T if s_plus is None else min(T, s_plus)
        if seed.kind == "interface":
            bwd = evolve_on_gamma(domain, metric, seed, -back_T, o)
        else:
            bwd = evolve(domain, metric, seed, -back_T, o)
    except Exception as exc:  # flow errors become Undetermined
        return SeedVerdict(index, seed, UNDETERMINED, reason=f"{type(exc).__name__}: {exc}")
    s_minus = bwd.target_s if bwd.status == "target" else None
    if s_plus is not None or s_minus is not None:
        if s_minus is not None and (s_plus is None or abs(s_minus) < s_plus):
            return SeedVerdict(index, seed, CONTROLLED, s_minus)
        return SeedVerdict(index, seed, CONTROLLED, s_plus)
    if fwd.complete and bwd.complete:
        if seed.kind == "interface" and domain.dim == 2:
            return SeedVerdict(index, seed, FAILED, reason="stationary interface point outside the damping set", witness=fwd)
        hit = find_period(fwd)
        if hit is not None:
            return SeedVerdict(index, seed, FAILED, reason="undamped periodic orbit", witness=fwd, period=hit[2])
        return SeedVerdict(index, seed, UNDETERMINED, reason="horizon exhausted")
    bad = fwd if not fwd.complete else bwd
    return SeedVerdict(index, seed, UNDETERMINED, reason=bad.reason or bad.status)


def check_mgcc(
    domain: Domain,
    metric: MetricField,
    damping: DampingField,
    horizon: float,
    seeds: Sequence[PhasePoint],
    a_min: float = A_MIN,
    opts: Optional[FlowOptions] = None,
    threads: int = 1,
) -> MGCCReport:
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    opts = opts or FlowOptions()
    opts = FlowOptions(**{**opts.__dict__, "target": None})
    jobs = [(i, s, domain, metric, damping, float(horizon), a_min, opts) for i, s in enumerate(seeds)]
    report = MGCCReport(horizon=float(horizon))
    if threads > 1 and len(jobs) > 1:
        try:
            with ProcessPoolExecutor(max_workers=threads) as pool:
                report.per_seed = list(pool.map(_verdict_one, jobs, chunksize=max(1, len(jobs) // (4 * threads))))
            return report
        except Exception as exc:  # unpicklable user callables fall back to serial
            log.warning("parallel mgcc failed (%s); running serially", exc)
    report.per_seed = [_verdict_one(j) for j in jobs]
    return report
