import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zaremba.config import SCHEMA, ConfigError, RunConfig, defaults, emit, loads

BASE = """
[domain]
catalog_id = "rectangle"
r_corner = 0.001

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


def test_emit_parse_emit_is_byte_identical():
    text = emit(loads(BASE))
    assert emit(loads(text)) == text
    assert emit(defaults()) == emit(loads(emit(defaults())))


def test_defaults_filled():
    cfg = loads("")
    assert cfg["flow"]["rtol"] == 1e-12
    assert cfg["domain"]["catalog_id"] == "disc"


def test_unknown_key_named_with_line():
    with pytest.raises(ConfigError, match=r"flow\.rtoll \(line 3\)"):
        loads("[flow]\nhorizon = 1.0\nrtoll = 1e-9\n")
    with pytest.raises(ConfigError, match=r"unknown section \[solvr\]"):
        loads("[solvr]\nT = 1.0\n")


def test_syntax_error_reports_line_and_column():
    with pytest.raises(ConfigError, match=r"line 2, column"):
        loads("[flow]\nrtol = = 1\n")


@pytest.mark.parametrize("key", ["rtol", "atol", "tol_event", "eps_glance", "s_probe", "horizon"])
def test_tolerances_must_be_positive(key):
    with pytest.raises(ConfigError, match=key):
        loads(f"[flow]\n{key} = 0.0\n")


def test_type_and_choice_errors():
    with pytest.raises(ConfigError, match="expected an integer"):
        loads("[flow]\nk_max = 2.5\n")
    with pytest.raises(ConfigError, match="gamma_policy"):
        loads('[flow]\ngamma_policy = "reflect"\n')


def test_runconfig_builds_objects():
    rc = RunConfig.from_text(BASE)
    assert rc.domain().catalog_id == "rectangle"
    assert rc.damping()([0.05, 0.5]) == 1.0
    assert rc.flow_options().r_corner == 0.001
    (p,) = rc.points()
    assert p.kind == "interior"


def test_metric_shape_checked():
    rc = RunConfig.from_text('[metric]\nkind = "constant"\nmatrix = [[1.0]]\n')
    with pytest.raises(ConfigError):
        rc.metric()


def _mutate(text: str, rng: random.Random) -> str:
    lines = text.splitlines()
    choice = rng.randrange(5)
    key_lines = [i for i, l in enumerate(lines) if "=" in l]
    if choice == 0:  # corrupt a key name
        i = rng.choice(key_lines)
        k, v = lines[i].split(" = ", 1)
        pos = rng.randrange(len(k) + 1)
        lines[i] = k[:pos] + rng.choice("abcxyz_Q") + k[pos:] + " = " + v
    elif choice == 1:  # add an unknown key to a random section
        heads = [i for i, l in enumerate(lines) if l.startswith("[") and not l.startswith("[[")]
        lines.insert(rng.choice(heads) + 1, f"zz_{rng.randrange(1000)} = 1")
    elif choice == 2:  # unknown section
        lines.append(f"[extra{rng.randrange(100)}]")
    elif choice == 3:  # whitespace only
        i = rng.choice(key_lines)
        lines[i] = lines[i].replace(" = ", "   =  ", 1)
    else:  # insert a comment
        lines.insert(rng.randrange(len(lines)), "# note")
    return "\n".join(lines) + "\n"


def test_fuzzed_configs_rejected_or_identical():
    canon = emit(loads(BASE))
    rng = random.Random(2024)
    rejected = identical = 0
    for _ in range(100):
        text = _mutate(canon, rng)
        try:
            cfg = loads(text)
        except ConfigError:
            rejected += 1
            continue
        assert emit(cfg) == canon
        identical += 1
    assert rejected + identical == 100 and rejected > 0 and identical > 0


_num = st.floats(1e-9, 1e3, allow_nan=False, allow_infinity=False)


@settings(max_examples=60, deadline=None)
@given(rtol=_num, horizon=_num, k=st.integers(2, 6), res=st.integers(4, 500), mu=st.floats(-100, 0), gp=st.sampled_from(["terminate", "continue-hyperbolic"]))
def test_roundtrip_property(rtol, horizon, k, res, mu, gp):
    cfg = defaults()
    cfg["flow"].update(rtol=rtol, horizon=horizon, k_max=k, gamma_policy=gp)
    cfg["solver"]["resolution"] = res
    cfg["scan"]["mu_min"] = mu
    text = emit(cfg)
    assert loads(text) == cfg
    assert emit(loads(text)) == text


def test_schema_sections_complete():
    assert list(SCHEMA) == ["domain", "metric", "damping", "partition", "flow", "solver", "scan", "seeds", "output"]
