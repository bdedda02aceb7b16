"""Classical Hamiltonian flow of p(x, xi) = xi^2 + V1(x), 1D.

The flow system is xdot = 2 xi, xidot = -V1'(x). Orbits accumulate the
damping factors

    q(t)  = exp(-2 * integral_0^t V2(xbar(s)) ds)
    q1(t) = exp(-  integral_0^t V2(xbar(s)) ds)

along the way. For t < 0 the integral is taken over [t, 0] so that q stays
in (0, 1] on the whole sampled orbit.

Integration uses a symplectic composition: plain leapfrog (order 2) or a
4th-order Yoshida composition of leapfrog substeps. The default is the
4th-order scheme; at dt = 1e-3 plain leapfrog drifts by ~1e-6 on the
barrier presets, which is too coarse for the 1e-8 drift gate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyShell, StepBlowup, ToleranceExceeded
from .potentials import Potential

_YOSHIDA_W1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
_YOSHIDA_W0 = 1.0 - 2.0 * _YOSHIDA_W1


@dataclass(frozen=True)
class PhasePoint:
    """Point (x, xi) in 1D phase space."""

    x: float
    xi: float

    def __post_init__(self):
        if not (np.isfinite(self.x) and np.isfinite(self.xi)):
            raise ValueError("phase point coordinates must be finite")


@dataclass(frozen=True)
class FlowParams:
    dt: float = 1e-3
    t_max: float = 50.0
    r_escape: float = 8.0
    tol_energy: float = 1e-8
    v2_threshold: float = 1e-8
    method: str = "yoshida4"  # or "leapfrog"
    overflow_guard: float = 1e6

    def __post_init__(self):
        if self.dt <= 0 or self.t_max <= 0 or self.r_escape <= 0:
            raise ValueError("dt, t_max and r_escape must be positive")


@dataclass(frozen=True)
class TrajectoryFlags:
    bounded_future: bool
    bounded_past: bool
    meets_O: bool
    status_future: str = "bounded"   # bounded | unbounded | undetermined
    status_past: str = "bounded"


@dataclass
class Trajectory:
    times: np.ndarray
    xs: np.ndarray
    xis: np.ndarray
    energy0: float
    q_values: np.ndarray
    q1_values: np.ndarray
    flags: TrajectoryFlags
    min_v2_along: float
    max_energy_drift: float

    def point(self, k: int) -> PhasePoint:
        return PhasePoint(float(self.xs[k]), float(self.xis[k]))

    @property
    def n_samples(self) -> int:
        return len(self.times)


def energy(w: PhasePoint, pot: Potential) -> float:
    """p(w) = xi^2 + V1(x)."""
    return float(w.xi**2 + pot.v1(np.asarray(w.x)))


def virial_bracket(w: PhasePoint, pot: Potential) -> float:
    """Poisson bracket {p, x.xi} = 2 xi^2 - x V1'(x)."""
    return float(2.0 * w.xi**2 - w.x * pot.grad_v1(np.asarray(w.x)))


def _leapfrog_steps(x, xi, grad, dt, n):
    """n leapfrog steps of xdot = 2 xi, xidot = -grad(x), in place on arrays."""
    half = 0.5 * dt
    for _ in range(n):
        xi = xi - half * grad(x)
        x = x + 2.0 * dt * xi
        xi = xi - half * grad(x)
    return x, xi


def _step_batch(x, xi, grad, dt, method):
    if method == "leapfrog":
        return _leapfrog_steps(x, xi, grad, dt, 1)
    # Yoshida 4th-order composition of three leapfrog substeps
    x, xi = _leapfrog_steps(x, xi, grad, _YOSHIDA_W1 * dt, 1)
    x, xi = _leapfrog_steps(x, xi, grad, _YOSHIDA_W0 * dt, 1)
    x, xi = _leapfrog_steps(x, xi, grad, _YOSHIDA_W1 * dt, 1)
    return x, xi


def _integrate_leg(x0, xi0, pot, dt, n_steps, method, guard):
    """Integrate a batch one leg (signed dt); returns sample arrays (n+1, m)."""
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    xi = np.atleast_1d(np.asarray(xi0, dtype=float)).copy()
    m = x.shape[0]
    xs = np.empty((n_steps + 1, m))
    xis = np.empty((n_steps + 1, m))
    xs[0], xis[0] = x, xi
    grad = pot.grad_v1
    for k in range(1, n_steps + 1):
        x, xi = _step_batch(x, xi, grad, dt, method)
        if np.any(np.abs(x) > guard) or np.any(np.abs(xi) > guard):
            raise StepBlowup(f"orbit left the overflow guard at step {k}")
        xs[k], xis[k] = x, xi
    return xs, xis


def flow_map(w: PhasePoint, t: float, pot: Potential,
             params: FlowParams) -> PhasePoint:
    """phi^t(w) by composed steps; |t| need not be a multiple of dt."""
    if t == 0.0:
        return w
    dt = params.dt if t > 0 else -params.dt
    n_full = int(abs(t) / params.dt)
    rem = t - n_full * dt
    x = np.array([w.x])
    xi = np.array([w.xi])
    for _ in range(n_full):
        x, xi = _step_batch(x, xi, pot.grad_v1, dt, params.method)
    if abs(rem) > 1e-15:
        x, xi = _step_batch(x, xi, pot.grad_v1, rem, params.method)
    return PhasePoint(float(x[0]), float(xi[0]))


def _cumulative_damping(xs_row, pot, dt):
    """Cumulative trapezoid of V2 along one leg (sample axis first)."""
    v2 = pot.v2(xs_row)
    inc = 0.5 * abs(dt) * (v2[1:] + v2[:-1])
    return np.concatenate([[0.0], np.cumsum(inc, axis=0)]), v2


def integrate_flow(w0: PhasePoint, pot: Potential,
                   params: FlowParams) -> Trajectory:
    """Full orbit over [-t_max, t_max] with damping factors on the time grid.

    Raises ToleranceExceeded when the energy drift exceeds params.tol_energy
    (the caller may retry with a smaller dt) and StepBlowup past the
    overflow guard.
    """
    n = int(round(params.t_max / params.dt))
    xs_f, xis_f = _integrate_leg([w0.x], [w0.xi], pot, params.dt, n,
                                 params.method, params.overflow_guard)
    xs_b, xis_b = _integrate_leg([w0.x], [w0.xi], pot, -params.dt, n,
                                 params.method, params.overflow_guard)
    # assemble increasing time axis; backward leg reversed, origin shared
    times = np.concatenate([-params.dt * np.arange(n, 0, -1),
                            params.dt * np.arange(0, n + 1)])
    xs = np.concatenate([xs_b[::-1, 0][:-1], xs_f[:, 0]])
    xis = np.concatenate([xis_b[::-1, 0][:-1], xis_f[:, 0]])

    damp_f, _ = _cumulative_damping(xs_f[:, 0], pot, params.dt)
    damp_b, _ = _cumulative_damping(xs_b[:, 0], pot, params.dt)
    damping = np.concatenate([damp_b[::-1][:-1], damp_f])
    q = np.exp(-2.0 * damping)
    q1 = np.exp(-damping)

    e0 = energy(w0, pot)
    p = xis**2 + pot.v1(xs)
    drift = float(np.max(np.abs(p - e0)))
    if drift > params.tol_energy:
        raise ToleranceExceeded(
            f"energy drift {drift:.3e} > tol {params.tol_energy:.1e}")

    v2_along = pot.v2(xs)
    flags = _flags_from_samples(xs, v2_along, params)
    return Trajectory(times=times, xs=xs, xis=xis, energy0=e0,
                      q_values=q, q1_values=q1, flags=flags,
                      min_v2_along=float(np.min(v2_along)),
                      max_energy_drift=drift)


def _direction_status(abs_x_max: float, abs_x_final: float,
                      params: FlowParams) -> str:
    if abs_x_max > params.r_escape:
        return "unbounded"
    if abs_x_final > 0.5 * params.r_escape:
        return "undetermined"
    return "bounded"


def _flags_from_samples(xs, v2_along, params):
    n_mid = len(xs) // 2
    fut = _direction_status(float(np.max(np.abs(xs[n_mid:]))),
                            float(abs(xs[-1])), params)
    past = _direction_status(float(np.max(np.abs(xs[:n_mid + 1]))),
                             float(abs(xs[0])), params)
    return TrajectoryFlags(
        bounded_future=(fut == "bounded"),
        bounded_past=(past == "bounded"),
        meets_O=bool(np.max(v2_along) > params.v2_threshold),
        status_future=fut,
        status_past=past,
    )


@dataclass
class ClassificationResult:
    bounded_future: bool
    bounded_past: bool
    meets_O: bool
    min_v2_along: float
    status_future: str
    status_past: str
    escape_time_future: float | None
    escape_time_past: float | None
    damping_integral: float  # integral of V2 over the retained orbit


def _classify_leg_batch(x0, xi0, pot, params, sign):
    """Integrate one leg for a batch until escape or t_max, with early exit.

    Returns (escaped mask, escape times, final |x|, max V2, min V2,
    damping integral) per orbit over the retained samples.
    """
    x = np.asarray(x0, dtype=float).copy()
    xi = np.asarray(xi0, dtype=float).copy()
    m = x.shape[0]
    dt = sign * params.dt
    n = int(round(params.t_max / params.dt))
    active = np.ones(m, dtype=bool)
    escaped = np.zeros(m, dtype=bool)
    t_escape = np.full(m, np.nan)
    v2 = pot.v2(x)
    v2_max = v2.copy()
    v2_min = v2.copy()
    damp = np.zeros(m)
    maxabs = np.abs(x)
    grad = pot.grad_v1
    for k in range(1, n + 1):
        if not np.any(active):
            break
        xa, xia = _step_batch(x[active], xi[active], grad, dt, params.method)
        if np.any(np.abs(xa) > params.overflow_guard):
            raise StepBlowup("classification orbit left the overflow guard")
        v2_new = pot.v2(xa)
        idx = np.flatnonzero(active)
        damp[idx] += 0.5 * params.dt * (v2[idx] + v2_new)
        v2[idx] = v2_new
        v2_max[idx] = np.maximum(v2_max[idx], v2_new)
        v2_min[idx] = np.minimum(v2_min[idx], v2_new)
        maxabs[idx] = np.maximum(maxabs[idx], np.abs(xa))
        x[idx], xi[idx] = xa, xia
        out = np.abs(xa) > params.r_escape
        if np.any(out):
            gone = idx[out]
            escaped[gone] = True
            t_escape[gone] = k * params.dt
            active[gone] = False
    return escaped, t_escape, np.abs(x), v2_max, v2_min, damp, maxabs


def classify_trajectory(w0: PhasePoint, pot: Potential,
                        params: FlowParams) -> ClassificationResult:
    """Boundedness flags for one initial condition (see classify_batch)."""
    return classify_batch([w0], pot, params)[0]


def classify_batch(points, pot: Potential, params: FlowParams):
    """Classify a batch of initial conditions.

    Each direction integrates until |x| > r_escape (unbounded there, by the
    no-return property once r_escape is past the interaction region) or
    until t_max. An orbit that ends inside the band (r_escape/2, r_escape]
    at the horizon is reported as undetermined. meets_O compares the max of
    V2 along the retained orbit against v2_threshold.
    """
    x0 = np.array([w.x for w in points], dtype=float)
    xi0 = np.array([w.xi for w in points], dtype=float)
    esc_f, t_f, fin_f, vmax_f, vmin_f, damp_f, _ = _classify_leg_batch(
        x0, xi0, pot, params, +1)
    esc_p, t_p, fin_p, vmax_p, vmin_p, damp_p, _ = _classify_leg_batch(
        x0, xi0, pot, params, -1)

    results = []
    for i in range(len(points)):
        sf = "unbounded" if esc_f[i] else (
            "undetermined" if fin_f[i] > 0.5 * params.r_escape else "bounded")
        sp = "unbounded" if esc_p[i] else (
            "undetermined" if fin_p[i] > 0.5 * params.r_escape else "bounded")
        vmax = max(vmax_f[i], vmax_p[i])
        results.append(ClassificationResult(
            bounded_future=(sf == "bounded"),
            bounded_past=(sp == "bounded"),
            meets_O=bool(vmax > params.v2_threshold),
            min_v2_along=float(min(vmin_f[i], vmin_p[i])),
            status_future=sf,
            status_past=sp,
            escape_time_future=None if np.isnan(t_f[i]) else float(t_f[i]),
            escape_time_past=None if np.isnan(t_p[i]) else float(-t_p[i]),
            damping_integral=float(damp_f[i] + damp_p[i]),
        ))
    return results


def sample_energy_shell(E: float, pot: Potential, r_max: float,
                        n_samples: int) -> list[PhasePoint]:
    """Sample p^-1(E): uniform x grid on |x| <= r_max, both xi branches."""
    xg = np.linspace(-r_max, r_max, n_samples)
    v1 = pot.v1(xg)
    ok = v1 <= E
    if not np.any(ok):
        raise EmptyShell(f"V1 > {E} on the whole sampled interval")
    pts = []
    for x, v in zip(xg[ok], v1[ok]):
        xi = float(np.sqrt(max(E - v, 0.0)))
        pts.append(PhasePoint(float(x), xi))
        if xi > 0.0:
            pts.append(PhasePoint(float(x), -xi))
    return pts


def project_to_shell(x: float, E: float, pot: Potential,
                     xi_sign: float = 1.0) -> PhasePoint:
    """Point on the shell p = E above position x (1D: solve xi^2 = E - V1)."""
    gap = E - float(pot.v1(np.asarray(x)))
    if gap < 0:
        raise EmptyShell(f"V1({x}) > {E}: shell empty above x")
    return PhasePoint(float(x), float(np.sign(xi_sign) * np.sqrt(gap)))


@dataclass
class DampingReport:
    energy: float
    n_shell: int
    n_bounded: int
    n_undetermined: int
    fraction_meeting: float
    min_damping_integral: float
    verdict: str  # covered | uncovered | no bounded orbits
    bounded_points: list


def damping_condition_check(E: float, pot: Potential, params: FlowParams,
                            n_samples: int = 41) -> DampingReport:
    """Sample the shell p = E and test whether bounded orbits meet {V2 > 0}.

    Undetermined orbits are counted with the bounded ones for the coverage
    verdict (conservative).
    """
    if E <= 0:
        raise ValueError("the no-return criterion needs E > 0")
    pts = sample_energy_shell(E, pot, params.r_escape, n_samples)
    results = classify_batch(pts, pot, params)
    bounded = []
    n_und = 0
    for w, r in zip(pts, results):
        fully_bounded = r.bounded_future and r.bounded_past
        und = "undetermined" in (r.status_future, r.status_past) and \
            "unbounded" not in (r.status_future, r.status_past)
        if und:
            n_und += 1
        if fully_bounded or und:
            bounded.append((w, r))
    if not bounded:
        return DampingReport(E, len(pts), 0, n_und, 0.0, np.inf,
                             "no bounded orbits", [])
    meeting = [r for _, r in bounded if r.meets_O]
    frac = len(meeting) / len(bounded)
    min_damp = min(r.damping_integral for _, r in bounded)
    verdict = "covered" if frac == 1.0 else "uncovered"
    return DampingReport(E, len(pts), len(bounded), n_und, frac, min_damp,
                         verdict, bounded)


def escape_correction(w: PhasePoint, pot: Potential, g, T_w: float,
                      params: FlowParams) -> tuple[float, float]:
    """Flow-integral correction f(z) = int_0^T g(phi^-t(z)) dt at z = w.

    Returns (f_value, bracket_residual) where the residual compares the flow
    derivative of f at w against g(w) - g(phi^-T(w)) via central differences
    along the flow.
    """
    if T_w < 0:
        raise ValueError("T_w must be nonnegative")

    def f_at(z: PhasePoint) -> tuple[float, PhasePoint]:
        if T_w == 0.0:
            return 0.0, z
        n = max(1, int(round(T_w / params.dt)))
        dt = T_w / n
        xs, xis = _integrate_leg([z.x], [z.xi], pot, -dt, n,
                                 params.method, params.overflow_guard)
        vals = g(xs[:, 0], xis[:, 0])
        val = float(np.trapezoid(vals, dx=dt))
        return val, PhasePoint(float(xs[-1, 0]), float(xis[-1, 0]))

    f_value, w_back = f_at(w)
    if T_w == 0.0:
        return 0.0, 0.0
    delta = params.dt
    f_plus, _ = f_at(flow_map(w, delta, pot, params))
    f_minus, _ = f_at(flow_map(w, -delta, pot, params))
    lhs = (f_plus - f_minus) / (2.0 * delta)
    rhs = float(g(np.asarray([w.x]), np.asarray([w.xi]))[0]
                - g(np.asarray([w_back.x]), np.asarray([w_back.xi]))[0])
    return f_value, abs(lhs - rhs)


def mourre_symbol_infimum(E: float, eps_window: float, pot: Potential,
                          c_v: float, shell_samples: int = 201,
                          r_max: float | None = None,
                          n_energies: int = 7) -> float:
    """inf over sampled p^-1([E-eps, E+eps]) of {p, x.xi} + c_v V2.

    A positive value certifies the symbol-level positive-commutator bound on
    the sampled shell band (with the escape correction set to zero).
    """
    if c_v < 0:
        raise ValueError("c_v must be nonnegative")
    r = r_max if r_max is not None else estimate_escape_radius(pot, E)
    xg = np.linspace(-r, r, shell_samples)
    v1 = pot.v1(xg)
    dv1 = pot.grad_v1(xg)
    v2 = pot.v2(xg)
    best = np.inf
    found = False
    for Ek in np.linspace(E - eps_window, E + eps_window, n_energies):
        ok = v1 <= Ek
        if not np.any(ok):
            continue
        found = True
        xi2 = Ek - v1[ok]
        vals = 2.0 * xi2 - xg[ok] * dv1[ok] + c_v * v2[ok]
        best = min(best, float(np.min(vals)))
    if not found:
        raise EmptyShell("no shell points in the requested energy window")
    return best


def estimate_escape_radius(pot: Potential, E: float, r_scan: float = 40.0,
                           n: int = 4001) -> float:
    """Smallest sampled radius past which |2 V1 + x V1'| <= E/2, doubled.

    Past that radius the bracket {p, x.xi} stays >= E on the shell band, so
    orbits that leave cannot come back; doubling adds margin.
    """
    xg = np.linspace(0.0, r_scan, n)
    c = np.abs(2.0 * pot.v1(xg) + xg * pot.grad_v1(xg))
    c_neg = np.abs(2.0 * pot.v1(-xg) + (-xg) * pot.grad_v1(-xg))
    worst = np.maximum(c, c_neg)
    suffix = np.maximum.accumulate(worst[::-1])[::-1]
    good = suffix <= E / 2.0
    if not np.any(good):
        raise ValueError("no escape radius found within the scan range")
    r0 = float(xg[np.argmax(good)])
    return 2.0 * max(r0, 1.0)
