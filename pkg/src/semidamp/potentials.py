"""Potential pairs (V1, V2) and the named presets used by the scenarios.

All presets are one-dimensional. V1 carries an analytic gradient; V2 is
nonnegative. Compactly supported damping profiles use the standard smooth
bump exp(-u^2/(1-u^2)) so that "supported outside" statements are exact.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError


def _smooth_bump(u):
    """C-infinity bump: exp(-u^2/(1-u^2)) for |u|<1, zero outside, max 1 at 0."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    ui = u[inside]
    out[inside] = np.exp(-ui * ui / (1.0 - ui * ui))
    return out


def _smooth_bump_grad(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    ui = u[inside]
    out[inside] = np.exp(-ui * ui / (1.0 - ui * ui)) * (-2.0 * ui) / (1.0 - ui * ui) ** 2
    return out


def smooth_window(x, lo: float, hi: float, ramp: float):
    """C-infinity plateau equal to 1 on [lo+ramp, hi-ramp], 0 outside [lo, hi]."""
    x = np.asarray(x, dtype=float)
    up = _smoothstep((x - lo) / ramp)
    down = _smoothstep((hi - x) / ramp)
    return up * down


def _exp_cutoff(t):
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def _smoothstep(t):
    # C-infinity transition f(t)/(f(t)+f(1-t)); flat spectral tails matter
    # for the band-limited test machinery
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    a = _exp_cutoff(t)
    b = _exp_cutoff(1.0 - t)
    return a / (a + b)


@dataclass(frozen=True)
class Potential:
    """The pair (V1, V2) with the analytic gradient of V1.

    rho is the nominal polynomial decay exponent of V1 (presets decay at
    least that fast); preset_name records how the pair was built.
    """

    v1: Callable
    grad_v1: Callable
    v2: Callable
    rho: float
    preset_name: str
    decays: bool = True
    params: dict = field(default_factory=dict)


def _zero(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def free_potential(v2=None, v2_name="none") -> Potential:
    return Potential(v1=_zero, grad_v1=_zero, v2=v2 or _zero, rho=1.0,
                     preset_name=f"free+{v2_name}")


def gaussian_bump_potential(height: float = 0.5, sigma: float = 1.0,
                            v2=None, v2_name="none") -> Potential:
    def v1(x):
        x = np.asarray(x, dtype=float)
        return height * np.exp(-((x / sigma) ** 2))

    def grad(x):
        x = np.asarray(x, dtype=float)
        return height * np.exp(-((x / sigma) ** 2)) * (-2.0 * x / sigma**2)

    return Potential(v1=v1, grad_v1=grad, v2=v2 or _zero, rho=2.0,
                     preset_name=f"gaussian_bump({height},{sigma})+{v2_name}",
                     params={"height": height, "sigma": sigma})


def harmonic_potential(omega2: float = 1.0) -> Potential:
    """V1 = omega2 * x^2; confining, used only by closed-form flow tests."""

    def v1(x):
        return omega2 * np.asarray(x, dtype=float) ** 2

    def grad(x):
        return 2.0 * omega2 * np.asarray(x, dtype=float)

    return Potential(v1=v1, grad_v1=grad, v2=_zero, rho=0.0,
                     preset_name=f"harmonic({omega2})", decays=False)


def double_barrier_potential(a: float = 2.0, height: float = 2.0,
                             sigma: float = 0.4, v2=None,
                             v2_name="none") -> Potential:
    """Two Gaussian barriers of the given height centered at +-a.

    Energies below the barrier top are classically trapped between the
    barriers; above, orbits escape.
    """

    def v1(x):
        x = np.asarray(x, dtype=float)
        return height * (np.exp(-(((x - a) / sigma) ** 2))
                         + np.exp(-(((x + a) / sigma) ** 2)))

    def grad(x):
        x = np.asarray(x, dtype=float)
        gp = np.exp(-(((x - a) / sigma) ** 2)) * (-2.0 * (x - a) / sigma**2)
        gm = np.exp(-(((x + a) / sigma) ** 2)) * (-2.0 * (x + a) / sigma**2)
        return height * (gp + gm)

    return Potential(v1=v1, grad_v1=grad, v2=v2 or _zero, rho=2.0,
                     preset_name=f"double_barrier({a},{height},{sigma})+{v2_name}",
                     params={"a": a, "height": height, "sigma": sigma})


def well_centered_damping(amplitude: float = 1.0, sigma: float = 1.0):
    """Gaussian damping profile centered in the well at x = 0."""

    def v2(x):
        x = np.asarray(x, dtype=float)
        return amplitude * np.exp(-((x / sigma) ** 2))

    return v2


def outside_only_damping(a: float = 2.0, amplitude: float = 1.0,
                         gap: float = 2.0, width: float = 1.0):
    """Damping supported exactly outside |x| > a + gap.

    Two compact bumps centered at +-(a + gap + width); zero on the whole
    region |x| <= a + gap, so trapped orbits in the well never meet it.
    """
    center = a + gap + width

    def v2(x):
        x = np.asarray(x, dtype=float)
        return amplitude * (_smooth_bump((x - center) / width)
                            + _smooth_bump((x + center) / width))

    return v2


def constant_damping(c: float = 0.5):
    def v2(x):
        return c * np.ones_like(np.asarray(x, dtype=float))

    return v2


_CALL_RE = re.compile(r"^\s*([a-zA-Z_][a-zA-Z0-9_]*)\s*(?:\((.*)\))?\s*$")


def parse_preset_call(text: str) -> tuple[str, list[float]]:
    """Parse 'name' or 'name(1.0, 2)' into (name, [args])."""
    m = _CALL_RE.match(text)
    if m is None:
        raise ConfigError(f"cannot parse preset expression {text!r}")
    name = m.group(1)
    args = []
    if m.group(2):
        for tok in m.group(2).split(","):
            tok = tok.strip()
            if not tok:
                continue
            try:
                args.append(float(tok))
            except ValueError:
                raise ConfigError(f"non-numeric argument {tok!r} in preset {text!r}")
    return name, args


DAMPING_PRESETS = {
    "none": (lambda: _zero),
    "well_centered": well_centered_damping,
    "outside_only": outside_only_damping,
    "constant": constant_damping,
}

POTENTIAL_PRESETS = {
    "free": free_potential,
    "gaussian_bump": gaussian_bump_potential,
    "double_barrier": double_barrier_potential,
}


def make_damping(expr: str):
    name, args = parse_preset_call(expr)
    if name not in DAMPING_PRESETS:
        raise ConfigError(f"unknown damping preset {name!r}")
    return DAMPING_PRESETS[name](*args), expr.strip()


def make_potential(expr: str, damping_expr: str = "none") -> Potential:
    name, args = parse_preset_call(expr)
    if name not in POTENTIAL_PRESETS:
        raise ConfigError(f"unknown potential preset {name!r}")
    v2, v2_name = make_damping(damping_expr)
    return POTENTIAL_PRESETS[name](*args, v2=v2, v2_name=v2_name)


def validate_potential(pot: Potential, radii=None, rel_tol: float = 1e-6) -> dict:
    """Sampled invariant checks: V2 >= 0, decay of V1, gradient consistency.

    Returns a report dict; raises AssertionError on violation.
    """
    radii = np.linspace(-12.0, 12.0, 241) if radii is None else np.asarray(radii)
    v2 = pot.v2(radii)
    assert np.all(v2 >= 0.0), "V2 must be nonnegative"
    report = {"v2_min": float(np.min(v2))}
    if pot.decays:
        bracket = np.abs(pot.v1(radii)) * (1.0 + radii**2) ** (pot.rho / 2.0)
        report["decay_constant"] = float(np.max(bracket))
        assert np.isfinite(report["decay_constant"])
    # centered finite differences of V1 against the analytic gradient
    eps = 1e-6
    fd = (pot.v1(radii + eps) - pot.v1(radii - eps)) / (2.0 * eps)
    g = pot.grad_v1(radii)
    scale = np.max(np.abs(g)) + 1.0
    err = float(np.max(np.abs(fd - g)) / scale)
    assert err <= rel_tol, f"gradient mismatch {err}"
    report["grad_fd_error"] = err
    return report
