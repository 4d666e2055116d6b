import numpy as np
import pytest

from zaremba.geometry import (
    AnnulusDamping,
    ConstantDamping,
    Disc,
    LinearPartition,
    MetricField,
    Rectangle,
    StripDamping,
    ZeroDamping,
)
from zaremba.mgcc import (
    CONTROLLED,
    FAILED,
    UNDETERMINED,
    check_mgcc,
    seed_lattice,
    verify_witness,
)
from zaremba.symbol import PhasePoint, symbol_p

E2 = MetricField.euclidean(2)


def bouncing_ball():
    R = Rectangle(0, 1, 0, 1, LinearPartition([1.0, 0.0], 0.25))
    return R, StripDamping(0, 0.0, 0.1, 1.0, 0.05)


def test_bouncing_ball_fails_with_witness():
    R, a = bouncing_ball()
    seed = PhasePoint("interior", [0.5, 0.5], [0.0, 1.0])
    rep = check_mgcc(R, E2, a, 8.0, [seed])
    (v,) = rep.per_seed
    assert v.verdict == FAILED
    assert v.period == pytest.approx(1.0, abs=1e-9)
    assert verify_witness(R, E2, v)
    assert rep.exit_code == 1


def test_constant_damping_controls_at_zero():
    seeds = seed_lattice(Disc(), E2, 5, 4)
    rep = check_mgcc(Disc(), E2, ConstantDamping(1.0), 8.0, seeds)
    assert all(v.verdict == CONTROLLED and v.s0 == 0.0 for v in rep.per_seed)
    assert rep.exit_code == 0


def test_zero_damping_never_controls():
    seeds = seed_lattice(Disc(), E2, 3, 4, seed=1)
    rep = check_mgcc(Disc(), E2, ZeroDamping(), 2.0, seeds)
    assert rep.counts()[CONTROLLED] == 0
    assert rep.exit_code in (1, 2)


def test_annulus_damping_controls_disc_lattice():
    D = Disc()
    seeds = seed_lattice(D, E2, 6, 8, seed=4, boundary=8, n_R=2)
    rep = check_mgcc(D, E2, AnnulusDamping((0.0, 0.0), 0.9, 1.0, 1.0, 0.05), 8.0, seeds)
    assert rep.counts() == {CONTROLLED: len(seeds), FAILED: 0, UNDETERMINED: 0}
    s = rep.summary()
    assert 0.0 <= s["min_control_time"] <= s["max_control_time"] <= 8.0


def test_lattice_is_characteristic_and_seeded():
    D = Disc()
    a = seed_lattice(D, E2, 4, 6, seed=7)
    b = seed_lattice(D, E2, 4, 6, seed=7)
    c = seed_lattice(D, E2, 4, 6, seed=8)
    assert all(abs(symbol_p(E2, r.x, r.xi)) < 1e-12 for r in a)
    assert all(np.array_equal(r.xi, s.xi) for r, s in zip(a, b))
    assert not all(np.array_equal(r.xi, s.xi) for r, s in zip(a, c))


def test_threads_match_serial():
    D = Disc()
    seeds = seed_lattice(D, E2, 4, 4, seed=2)
    a = AnnulusDamping((0.0, 0.0), 0.9, 1.0, 1.0, 0.05)
    r1 = check_mgcc(D, E2, a, 8.0, seeds)
    r2 = check_mgcc(D, E2, a, 8.0, seeds, threads=2)
    assert [v.as_dict() for v in r1.per_seed] == [v.as_dict() for v in r2.per_seed]


def test_planar_gamma_seed_outside_damping_fails():
    R, a = bouncing_ball()
    rep = check_mgcc(R, E2, a, 4.0, [PhasePoint("interface", [0.25, 0.0], [0.0, 0.0])])
    assert rep.per_seed[0].verdict == FAILED


def test_bad_horizon():
    with pytest.raises(ValueError):
        check_mgcc(Disc(), E2, ZeroDamping(), 0.0, [])
