import numpy as np
import pytest

from confsym.config import DEFAULT_TOLERANCES, build_system, load, loads
from confsym.errors import SchemaError

GOOD = """
[system]
name = flex

[params]
eta = 0.9

[tolerances]
check = 1e-7

[sampling]
count = 10
seed = 3

[output]
format = both
"""


def test_good_config_round_trip():
    cfg = loads(GOOD)
    assert cfg.system == "flex" and cfg.params == {"eta": 0.9}
    assert cfg.tolerances["check"] == 1e-7 and cfg.tolerances["fiber"] == DEFAULT_TOLERANCES["fiber"]
    assert (cfg.samples, cfg.seed, cfg.fmt) == (10, 3, "both")
    assert build_system(cfg).eta == 0.9


@pytest.mark.parametrize("text, line, needle", [
    ("[system]\nname = dsm\n[bogus]\nx = 1\n", 3, "unknown section"),
    ("[system]\nname = dsm\ncolour = red\n", 3, "unknown field"),
    ("[sampling]\n\ncount = many\n", 3, "expected int"),
    ("[tolerances]\nfiber = -1\n", 2, "positive"),
    ("[params]\neta = fast\n", 2, "numeric"),
])
def test_schema_errors_name_the_line(text, line, needle):
    with pytest.raises(SchemaError) as exc:
        loads(text, "run.cfg")
    assert f"line {line}" in str(exc.value) and needle in str(exc.value)


def test_bad_format_rejected():
    with pytest.raises(SchemaError):
        loads("[output]\nformat = xml\n")


def test_unknown_parameter_is_schema_error():
    with pytest.raises(SchemaError):
        build_system(loads("[system]\nname = dsm\n[params]\nbogus = 1\n"))


def test_custom_system_from_expressions(rng):
    text = """
[system]
name = custom
variables = I, theta
forward = eta*I + 0.1*sin(2*pi*theta); theta + eta*I + 0.1*sin(2*pi*theta)
eta = 0.8
omega = 0 1 1.0
periodic = theta

[params]
eta = 0.8
"""
    sys = build_system(loads(text))
    from confsym.geometry import conformality_residual

    assert sys.periodic == (False, True)
    assert conformality_residual(sys, sys.sample(rng, 20)) <= 1e-8
    x = np.array([0.1, 0.2])
    assert np.allclose(sys.finv(sys.f(x)), x, atol=1e-10)


def test_custom_system_needs_expressions():
    with pytest.raises(SchemaError):
        build_system(loads("[system]\nname = custom\nvariables = x\n"))


def test_missing_file(tmp_path):
    with pytest.raises(SchemaError):
        load(tmp_path / "absent.cfg")


def test_inline_comments_are_ignored():
    cfg = loads("[system]\nname = flex   # trailing note\n[tolerances]   # comment\ncheck = 1e-5 # loose\n")
    assert cfg.system == "flex" and cfg.tolerances["check"] == 1e-5
