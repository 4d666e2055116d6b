"""Acceptance suite: one PASS/FAIL line per criterion.

Run ``pytest tests/test_acceptance.py -v``; the table is printed in the
terminal summary.  ``python tests/test_acceptance.py`` prints it directly.
"""

import math
import time

import numpy as np
import pytest

from zaremba import airy, waves
from zaremba.flow import INTERIOR_ARC, REFLECT, SINGULAR_ARC, evolve, evolve_on_gamma
from zaremba.geometry import (
    AnnulusDamping,
    Ball3,
    ConstantDamping,
    Disc,
    DiscExterior,
    HalfSpace,
    Interval,
    LinearPartition,
    MetricField,
    Rectangle,
    StripDamping,
)
from zaremba.mgcc import CONTROLLED, FAILED, check_mgcc, seed_lattice, verify_witness
from zaremba.symbol import GlanceKind, PhasePoint, classify_boundary, interface_R0, symbol_p, tangential_part

RESULTS = []

E1 = MetricField.euclidean(1)
E2 = MetricField.euclidean(2)


def record(name, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def _zaremba_line(N, damped=True):
    D = Interval(0.0, 1.0, LinearPartition([1.0], 0.5))
    a = StripDamping(0, 0.3, 0.7, 1.0, 0.0) if damped else None
    return waves.assemble(D, E1, a, N)


def test_1_flow_fidelity():
    t0 = time.perf_counter()
    D = Disc()
    rng = np.random.default_rng(1)
    p_drift = group = refl = 0.0
    compared = 0
    for _ in range(100):
        r = 0.95 * math.sqrt(rng.uniform())
        th, ph = rng.uniform(0, 2 * math.pi, 2)
        rho = PhasePoint("interior", [r * math.cos(th), r * math.sin(th)], [math.cos(ph), math.sin(ph)])
        s1, s2 = rng.uniform(0.5, 2.5, 2)
        full = evolve(D, E2, rho, s1 + s2)
        for sg in full.segments:
            if sg.kind == INTERIOR_ARC:
                p_drift = max(p_drift, max(abs(symbol_p(E2, x, xi)) for x, xi in zip(sg.x, sg.xi)))
        for ev in full.events:
            if ev.action == REFLECT:
                a, na = tangential_part(D, E2, ev.x, ev.xi_in)
                b, nb = tangential_part(D, E2, ev.x, ev.xi_out)
                refl = max(refl, float(np.max(np.abs(a - b))), abs(na + nb))
        half = evolve(D, E2, rho, s1)
        if half.complete and half.final.kind == "interior" and full.complete:
            rest = evolve(D, E2, half.final, s2)
            if rest.final.kind == full.final.kind:
                group = max(group, rest.final.distance(full.final))
                compared += 1
    dt = time.perf_counter() - t0
    ok = p_drift <= 1e-8 and group <= 1e-6 and refl <= 1e-8 and dt <= 30 and compared >= 90
    record(
        "1 flow fidelity",
        ok,
        f"|p| drift {p_drift:.2e} (<=1e-8), group defect {group:.2e} (<=1e-6, {compared} pairs), "
        f"reflection {refl:.2e} (<=1e-8), {dt:.1f}s (<=30s)",
    )


def test_2_classification_table():
    x, t = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    inner = classify_boundary(Disc(), E2, x, t)
    outer = classify_boundary(DiscExterior(), E2, x, t)
    flat = classify_boundary(HalfSpace(2), E2, np.zeros(2), np.array([1.0, 0.0]))
    ok = (
        inner.tag == GlanceKind.GLIDING
        and inner.k == 2
        and abs(inner.alpha + 0.5) <= 0.05
        and outer.tag == GlanceKind.DIFFRACTIVE
        and abs(outer.alpha - 0.5) <= 0.05
        and flat.tag == GlanceKind.UNDETERMINED
    )
    record(
        "2 classification",
        ok,
        f"disc {inner.tag} k={inner.k} alpha={inner.alpha:.6f}; exterior {outer.tag} alpha={outer.alpha:.6f}; "
        f"half-space {flat.tag}",
    )


def test_3_mgcc_verdicts():
    t0 = time.perf_counter()
    R = Rectangle(0, 1, 0, 1, LinearPartition([1.0, 0.0], 0.25))
    bb = check_mgcc(R, E2, StripDamping(0, 0.0, 0.1, 1.0, 0.05), 8.0, [PhasePoint("interior", [0.5, 0.5], [0.0, 1.0])])
    v = bb.per_seed[0]
    bb_ok = v.verdict == FAILED and verify_witness(R, E2, v) and bb.exit_code == 1

    D = Disc()
    seeds = seed_lattice(D, E2, 12, 8, seed=0, boundary=16, n_R=4)
    full = check_mgcc(D, E2, ConstantDamping(1.0), 8.0, seeds)
    full_ok = all(s.verdict == CONTROLLED and s.s0 == 0.0 for s in full.per_seed)

    # T = 4 diameters of the unit disc
    ann = check_mgcc(D, E2, AnnulusDamping((0.0, 0.0), 0.9, 1.0, 1.0, 0.05), 8.0, seeds, threads=4)
    ann_ok = ann.counts()[CONTROLLED] == len(seeds) and len(seeds) >= 1000
    dt = time.perf_counter() - t0
    record(
        "3 mgcc verdicts",
        bb_ok and full_ok and ann_ok and dt <= 120,
        f"bouncing ball {v.verdict} period={v.period} witness ok={bb_ok}; constant damping {full.counts()[CONTROLLED]}/{len(seeds)} at s0=0; "
        f"disc annulus {ann.counts()[CONTROLLED]}/{len(seeds)} Controlled; {dt:.1f}s (<=120s)",
    )


def test_4_energy_decay():
    T, dt = 40.0, 0.01
    out = {}
    for N in (200, 400):
        op = _zaremba_line(N)
        tr = waves.evolve_wave(op, *waves.default_initial_state(op), T, dt)
        _, c = waves.fit_decay(tr)
        out[N] = (tr, c)
    tr, c200 = out[200]
    c400 = out[400][1]
    mono = bool(np.all(np.diff(tr.E) <= 0.0))
    resid = tr.max_residual / (tr.E[0] * dt)
    op0 = _zaremba_line(200, damped=False)
    tr0 = waves.evolve_wave(op0, *waves.default_initial_state(op0), T, dt)
    cons = float(np.max(np.abs(tr0.E[1:] - tr0.E[0]) / tr0.E[0] / tr0.t[1:]))
    stable = abs(c400 - c200) / c200
    ok = c200 > 0 and stable <= 0.2 and mono and resid <= 1e-10 and cons <= 1e-10
    record(
        "4 energy decay",
        ok,
        f"c(N=200)={c200:.4f}, c(N=400)={c400:.4f} (change {stable:.1%} <=20%), monotone={mono}, "
        f"residual/(E0 dt)={resid:.2e} (<=1e-10), undamped drift {cons:.2e}/unit time (<=1e-10)",
    )


def test_5_resolvent_and_spectrum():
    op = _zaremba_line(200)
    ev = waves.spectrum(op)
    ab = waves.spectral_abscissa(ev)
    mus = np.arange(-50.0, 50.0 + 1e-9, 0.5)
    scan = waves.resolvent_scan(op, mus, threads=4)
    dist = np.array([np.min(np.abs(1j * m - ev)) for m in mus])
    ratio = float(np.min(scan.norms * dist))
    finite = bool(np.all(np.isfinite(scan.norms)))
    # pair each eigenvalue with the nearest conjugate
    conj = float(max(np.min(np.abs(np.conj(l) - ev)) for l in ev))
    op0 = _zaremba_line(200, damped=False)
    ev0 = waves.spectrum(op0)
    imag = float(np.max(np.abs(ev0.real)))
    mu0 = float(np.min(np.abs(ev0.imag)))
    try:
        waves.resolvent_norm(op0, mu0)
        raised = False
    except waves.SingularShift:
        raised = True
    ok = ab < 0 and finite and ratio >= 1 - 1e-3 and conj <= 1e-9 and imag <= 1e-8 and raised
    record(
        "5 resolvent/spectrum",
        ok,
        f"abscissa {ab:.4g} (<0), scan finite={finite} sup={np.max(scan.norms):.3f}, min norm*dist={ratio:.6f} (>=0.999), "
        f"conjugate defect {conj:.1e} (<=1e-9), undamped max|Re| {imag:.1e} (<=1e-8), SingularShift={raised}",
    )


def test_6_trace_scaling():
    one = waves.trace_scaling_experiment(waves.assemble(Interval(0, 1, LinearPartition([1.0], 0.5)), E1, None, 1000), 200)
    rect = Rectangle(0, 1, 0, 1, LinearPartition([1.0, 0.0], 0.0))
    two = waves.trace_scaling_experiment(waves.assemble(rect, E2, None, 60), 200)
    r1, r2 = one["scaled_block_ratio"], two["scaled_block_ratio"]
    record(
        "6 trace scaling",
        r1 <= 3 and r2 <= 3,
        f"h^1/2-scaled dyadic block ratio 1D {r1:.2f}, 2D {r2:.2f} (<=3); "
        f"unscaled traces: 1D {one['unscaled_block_ratio']:.2f}, 2D {two['unscaled_block_ratio']:.2f}",
    )


def test_7_airy_suite():
    t0 = time.perf_counter()
    rows = airy.verify()
    dt = time.perf_counter() - t0
    bad = [r["property"] for r in rows if not r["pass"]]
    worst = {r["property"]: r["worst"] for r in rows}
    record(
        "7 airy suite",
        not bad and dt <= 10,
        f"{len(rows) - len(bad)}/{len(rows)} properties pass {bad or ''}; "
        f"ODE residual {max(v for k, v in worst.items() if k.startswith('ode')):.1e}; {dt:.2f}s (<=10s)",
    )


def test_8_gamma_flow():
    B = Ball3(partition=LinearPartition([0.0, 0.0, 1.0], 0.0))
    E3 = MetricField.euclidean(3)
    rho = PhasePoint("interface", [1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
    tr = evolve_on_gamma(B, E3, rho, 1.25 * math.pi)
    s = np.concatenate([sg.s for sg in tr.segments if sg.kind == SINGULAR_ARC])
    x = np.concatenate([sg.x for sg in tr.segments if sg.kind == SINGULAR_ARC])
    xi = np.concatenate([sg.xi for sg in tr.segments if sg.kind == SINGULAR_ARC])
    R0 = np.array([interface_R0(B, E3, a, b) for a, b in zip(x, xi)])
    drift = float(np.max(np.abs(R0 - R0[0])))
    off = float(np.max(np.abs(x[:, 2])) + np.max(np.abs(np.linalg.norm(x, axis=1) - 1.0)))
    ang = np.unwrap(np.arctan2(x[:, 1], x[:, 0]))
    period = float(np.interp(2 * math.pi, ang, s))
    rel = abs(period - math.pi) / math.pi

    R = Rectangle(0, 1, 0, 1, LinearPartition([1.0, 0.0], 0.5))
    flat = evolve_on_gamma(R, E2, PhasePoint("interface", [0.5, 0.0], [0.0, 0.0]), 5.0)
    pts = np.concatenate([sg.x for sg in flat.segments]) if flat.segments else flat.final.x[None]
    stationary = bool(np.all(pts == np.array([0.5, 0.0])) and np.array_equal(flat.final.x, [0.5, 0.0]))
    ok = drift <= 1e-7 and rel <= 1e-5 and off <= 1e-7 and stationary
    record(
        "8 gamma flow",
        ok,
        f"R0 drift {drift:.1e} (<=1e-7), period {period:.10f} rel err {rel:.1e} (<=1e-5), "
        f"off-circle {off:.1e}; d=2 stationary={stationary}",
    )


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_"):
            try:
                fn()
            except AssertionError:
                pass
