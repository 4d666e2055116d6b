import csv
import json

import pytest

from zaremba.cli import main

HALFSPACE = """
[domain]
catalog_id = "halfspace"

[flow]
horizon = 1.0

[[seeds.points]]
kind = "interior"
x = [0.0, 1.0]
xi = [0.0, -1.0]
"""

DISC_TANGENT = """
[domain]
catalog_id = "disc"

[flow]
horizon = 1.0

[[seeds.points]]
kind = "boundary"
x = [1.0, 0.0]
xi = [0.0, 1.0]
"""

BOUNCING = """
[domain]
catalog_id = "rectangle"

[partition]
kind = "linear"
normal = [1.0, 0.0]
offset = 0.25

[damping]
kind = "strip"
axis = 0
lo = 0.0
hi = 0.1
width = 0.05

[flow]
horizon = 8.0

[[seeds.points]]
kind = "interior"
x = [0.5, 0.5]
xi = [0.0, 1.0]
"""

LINE = """
[domain]
catalog_id = "interval"

[partition]
kind = "linear"
normal = [1.0]
offset = 0.5

[damping]
kind = "{kind}"
axis = 0
lo = 0.3
hi = 0.7

[solver]
resolution = 40
T = 2.0
dt = 0.01

[scan]
mu_min = -2.0
mu_max = 2.0
mu_step = 1.0
"""

DISC_LATTICE = """
[domain]
catalog_id = "disc"

[damping]
kind = "annulus"
center = [0.0, 0.0]
r_in = 0.9
r_out = 1.0
width = 0.05

[seeds]
resolution = 4
n_dir = 4
boundary = 4
n_R = 2
"""


def _cfg(tmp_path, text, name="run.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def _records(path):
    return [json.loads(l) for l in path.read_text().splitlines()]


def test_trace_halfspace_deterministic(tmp_path):
    cfg = _cfg(tmp_path, HALFSPACE)
    assert main(["trace", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    assert main(["trace", "--config", cfg, "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "trajectories.jsonl").read_bytes()
    assert a == (tmp_path / "b" / "trajectories.jsonl").read_bytes()
    recs = _records(tmp_path / "a" / "trajectories.jsonl")
    assert [r["type"] for r in recs] == ["seed", "segment", "event", "segment"]
    assert recs[2]["action"] == "Reflect"


def test_trace_disc_tangent_single_gliding_record(tmp_path):
    main(["trace", "--config", _cfg(tmp_path, DISC_TANGENT), "--out", str(tmp_path)])
    segs = [r for r in _records(tmp_path / "trajectories.jsonl") if r["type"] == "segment"]
    assert len(segs) == 1 and segs[0]["kind"] == "GlidingArc"


def test_malformed_config_names_key(tmp_path, capsys):
    cfg = _cfg(tmp_path, "[flow]\nhorizn = 2.0\n")
    assert main(["trace", "--config", cfg, "--out", str(tmp_path)]) == 3
    assert "flow.horizn" in capsys.readouterr().err


def test_mgcc_bouncing_ball_exit_1(tmp_path):
    assert main(["mgcc", "--config", _cfg(tmp_path, BOUNCING), "--out", str(tmp_path)]) == 1
    (seed,) = _records(tmp_path / "mgcc_seeds.jsonl")
    assert seed["verdict"] == "Failed" and seed["period"] == pytest.approx(1.0)
    report = json.loads((tmp_path / "mgcc_report.json").read_text())
    assert report["counts"]["Failed"] == 1 and report["exit_code"] == 1


def test_mgcc_lattice_deterministic_and_seed_recorded(tmp_path):
    cfg = _cfg(tmp_path, DISC_LATTICE)
    outs = []
    for name, threads in (("a", "1"), ("b", "2")):
        code = main(["mgcc", "--config", cfg, "--out", str(tmp_path / name), "--seed", "5", "--threads", threads])
        assert code == 0
        outs.append(((tmp_path / name / "mgcc_seeds.jsonl").read_bytes(), (tmp_path / name / "mgcc_report.json").read_bytes()))
    assert outs[0] == outs[1]
    assert json.loads(outs[0][1])["rng_seed"] == 5


def test_evolve_without_damping_is_flat(tmp_path):
    main(["evolve", "--config", _cfg(tmp_path, LINE.replace('kind = "{kind}"', 'kind = "zero"')), "--out", str(tmp_path)])
    with open(tmp_path / "energy.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "E"]
    E = [float(r[1]) for r in rows[1:]]
    assert max(E) - min(E) <= 1e-12 * E[0]
    assert b"\r\n" not in (tmp_path / "energy.csv").read_bytes()


def test_resolvent_and_spectrum_csv(tmp_path):
    cfg = _cfg(tmp_path, LINE.replace("{kind}", "strip"))
    assert main(["resolvent", "--config", cfg, "--out", str(tmp_path)]) == 0
    assert main(["spectrum", "--config", cfg, "--out", str(tmp_path)]) == 0
    res = (tmp_path / "resolvent.csv").read_text().splitlines()
    assert res[0] == "mu,norm" and len(res) == 6
    assert (tmp_path / "spectrum.csv").read_text().splitlines()[0] == "re,im"


def test_singular_shift_is_runtime_error(tmp_path, capsys):
    # discrete first frequency of the mixed interval at N = 40: 80 sin(pi / 160)
    import math

    mu = repr(80.0 * math.sin(math.pi / 160.0))
    text = LINE.replace('kind = "{kind}"', 'kind = "zero"').replace("mu_min = -2.0", f"mu_min = {mu}").replace("mu_max = 2.0", f"mu_max = {mu}")
    assert main(["resolvent", "--config", _cfg(tmp_path, text), "--out", str(tmp_path)]) == 4
    assert "SingularShift" in capsys.readouterr().err


def test_airy_verify(tmp_path):
    assert main(["airy-verify", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "airy_verify.json").read_text())
    assert all(r["pass"] for r in doc["properties"])


def test_bad_flag_is_config_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["trace", "--config", _cfg(tmp_path, HALFSPACE), "--gamma-policy", "bounce"])
    assert exc.value.code == 3
