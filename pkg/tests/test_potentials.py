import numpy as np
import pytest

from semidamp import potentials as pots
from semidamp.errors import ConfigError


@pytest.mark.parametrize("expr,damping", [
    ("free", "none"),
    ("gaussian_bump(0.5, 1.0)", "well_centered(1.0, 1.0)"),
    ("double_barrier(2.0, 2.0, 0.4)", "well_centered(2.0, 0.8)"),
    ("double_barrier(2.0, 1.3, 0.3)", "outside_only(2.0, 1.0)"),
    ("free", "constant(0.5)"),
])
def test_preset_invariants(expr, damping):
    pot = pots.make_potential(expr, damping)
    report = pots.validate_potential(pot)
    assert report["grad_fd_error"] <= 1e-6


def test_outside_only_support_is_exact():
    v2 = pots.outside_only_damping(2.0, 1.0)
    x = np.linspace(-4.0, 4.0, 400)
    assert np.all(v2(x) == 0.0)
    assert v2(np.array([5.0]))[0] > 0.1


def test_constant_damping_value():
    v2 = pots.constant_damping(0.5)
    assert np.allclose(v2(np.linspace(-3, 3, 7)), 0.5)


def test_parse_preset_call():
    name, args = pots.parse_preset_call("double_barrier(2, 1.5, 0.35)")
    assert name == "double_barrier" and args == [2.0, 1.5, 0.35]
    name, args = pots.parse_preset_call("free")
    assert name == "free" and args == []
    with pytest.raises(ConfigError):
        pots.parse_preset_call("not a preset()")
    with pytest.raises(ConfigError):
        pots.make_potential("unknown_thing(1)")


def test_smooth_window_plateau_and_support():
    x = np.linspace(-3, 3, 601)
    w = pots.smooth_window(x, -2.0, 2.0, 0.5)
    assert np.all(w[np.abs(x) <= 1.5] == pytest.approx(1.0, abs=1e-12))
    assert np.all(w[np.abs(x) >= 2.0] == 0.0)
    assert np.all((0.0 <= w) & (w <= 1.0))
