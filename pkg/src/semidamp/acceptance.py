"""The acceptance suite: one runner per criterion, pass/fail semantics.

Each criterion returns a CriterionResult with the measured quantities it
was judged on; the CLI prints one line per criterion and exits nonzero on
any failure. Tolerances are pinned here, not configurable.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import besov as besov_mod
from . import dilation as dil
from . import dynamics as dyn
from . import egorov as eg
from . import resolvent as res
from .linalg import hermiticity_defect
from .potentials import make_potential
from .quantize import DiscreteOperator
from .scenarios import (CONSTANT_DAMPING, DOUBLE_BARRIER, DOUBLE_BARRIER_DAMPED,
                        DOUBLE_BARRIER_UNCOVERED, FREE, FREE_BESOV,
                        GAUSSIAN_EGOROV, energy_window, gaussian_phase_symbol,
                        wave_packet)

H_SWEEP = [1 / 8, 1 / 16, 1 / 32, 1 / 64]
ACCEPT_SEED = 20260811


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    runtime: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        parts = ", ".join(f"{k}={v}" for k, v in self.details.items())
        return (f"[{status}] criterion {self.number:2d} ({self.name}): "
                f"{parts} [{self.runtime:.1f}s]")


def _timed(number, name, fn) -> CriterionResult:
    t0 = time.time()
    passed, details = fn()
    return CriterionResult(number=number, name=name, passed=passed,
                           details=details, runtime=time.time() - t0)


def criterion_01_quadratic_estimate() -> CriterionResult:
    def run():
        rng = np.random.default_rng(ACCEPT_SEED)
        ims = [0.05, 0.2, 0.5, 1.0, 2.0]
        worst = np.inf
        count = 0
        t0 = time.time()
        for _ in range(1000):
            n = int(rng.integers(2, 41))
            a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            t_r = (a + a.conj().T) / 2
            g = rng.standard_normal((n, n))
            t_i = g.T @ g / n
            lam, u = np.linalg.eigh(t_i)
            b = (u * np.sqrt(np.clip(lam, 0, None))[None, :]) @ u.conj().T
            q = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            q = (q + q.conj().T) / 2
            zre = float(rng.uniform(-2, 2))
            for im in ims:
                chk = res.quadratic_estimate_check(t_r, t_i, b, q,
                                                   complex(zre, im))
                worst = min(worst, chk.rhs - chk.lhs)
                count += 1
        elapsed = time.time() - t0
        ok = worst >= -1e-10 and elapsed < 30.0
        return ok, {"checks": count, "worst_slack": f"{worst:.3e}",
                    "runtime_ok": elapsed < 30.0}

    return _timed(1, "quadratic estimate", run)


def criterion_02_resolvent_bound() -> CriterionResult:
    def run():
        # no monitor reset: cumulative over every solve this session issued,
        # plus the dedicated battery below
        rng = np.random.default_rng(ACCEPT_SEED + 2)
        # random dissipative instances
        for _ in range(50):
            n = int(rng.integers(2, 41))
            a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            t_r = (a + a.conj().T) / 2
            g = rng.standard_normal((n, n))
            op = DiscreteOperator((t_r - 1j * (g.T @ g / n)).astype(complex),
                                  "H", hermitian=False,
                                  meta={"dissipative": True})
            z = complex(float(rng.uniform(-2, 2)), float(rng.uniform(0.05, 2)))
            f = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            res.solve(op, z, f)
        # scenario operators at sweep-representative queries
        for sc in (FREE, DOUBLE_BARRIER_DAMPED, DOUBLE_BARRIER_UNCOVERED):
            op = sc.build(1 / 16).h
            for z in (1.0 + 1e-4j, 0.95 + 4e-4j, 1.1 + 1e-3j):
                res.weighted_norm(op, z, 1.0)
        mon = res.BOUND_MONITOR
        ok = mon.n_violations == 0 and mon.n_checked > 0
        return ok, {"solves_checked": mon.n_checked,
                    "violations": mon.n_violations,
                    "worst_excess": f"{mon.worst_excess:.2e}"}

    return _timed(2, "contraction bound 1/Im z", run)


def criterion_03_nontrapping_scaling() -> CriterionResult:
    def run():
        t0 = time.time()
        sweep = res.scaling_sweep(FREE.resolvent_provider(), H_SWEEP,
                                  FREE.interval, 1.0, mu_min=FREE.mu_min)
        elapsed = time.time() - t0
        ok = (0.85 <= sweep.fitted_slope <= 1.15
              and sweep.fit_residual < 0.05
              and all(sweep.grid_convergence_flags)
              and elapsed < 300.0)
        return ok, {"slope": f"{sweep.fitted_slope:.4f}",
                    "residual": f"{sweep.fit_residual:.4f}",
                    "converged": all(sweep.grid_convergence_flags),
                    "runtime_ok": elapsed < 300.0}

    return _timed(3, "non-trapping scaling", run)


def criterion_04_damped_trapping() -> CriterionResult:
    def run():
        sweep_h = res.scaling_sweep(
            DOUBLE_BARRIER_DAMPED.resolvent_provider(), H_SWEEP,
            DOUBLE_BARRIER_DAMPED.interval, 1.0,
            mu_min=DOUBLE_BARRIER_DAMPED.mu_min)
        sc2 = DOUBLE_BARRIER_DAMPED.with_nu("quadratic")
        sweep_h2 = res.scaling_sweep(sc2.resolvent_provider(), H_SWEEP,
                                     sc2.interval, 1.0, mu_min=sc2.mu_min)
        ok = (0.8 <= sweep_h.fitted_slope <= 1.2
              and 0.8 <= sweep_h2.fitted_slope <= 1.2
              and all(sweep_h.grid_convergence_flags)
              and all(sweep_h2.grid_convergence_flags))
        return ok, {"slope_nu_h": f"{sweep_h.fitted_slope:.4f}",
                    "slope_nu_h2": f"{sweep_h2.fitted_slope:.4f}",
                    "converged": (all(sweep_h.grid_convergence_flags)
                                  and all(sweep_h2.grid_convergence_flags))}

    return _timed(4, "damped trapping scaling", run)


def criterion_05_necessity() -> CriterionResult:
    def run():
        sweep = res.scaling_sweep(
            DOUBLE_BARRIER_UNCOVERED.resolvent_provider(), H_SWEEP,
            DOUBLE_BARRIER_UNCOVERED.interval, 1.0,
            mu_min=DOUBLE_BARRIER_UNCOVERED.mu_min)
        hsup = [h * v for h, v in zip(sweep.h_values, sweep.sup_norms)]
        ratio = hsup[-1] / hsup[0]
        endpoints_ok = (sweep.grid_convergence_flags[0]
                        and sweep.grid_convergence_flags[-1])
        ok = ratio >= 2.0 and endpoints_ok
        return ok, {"h_sup_ratio": f"{ratio:.2f}",
                    "endpoints_converged": endpoints_ok}

    return _timed(5, "necessity of damping coverage", run)


def criterion_06_limiting_absorption() -> CriterionResult:
    def run():
        mus = [4e-3, 2e-3, 1e-3, 5e-4]
        provider = FREE.resolvent_provider()
        scans = []
        for refine in (2, 4):
            op = provider(1 / 16, refine=refine)
            scans.append(res.limiting_absorption_scan(op, 1.0, 1.0, mus))
        decreasing = all(s.converged for s in scans)
        rel = abs(scans[0].limit_norm - scans[1].limit_norm) \
            / max(scans[1].limit_norm, 1e-300)
        ok = decreasing and rel <= 1e-3
        return ok, {"increments_decreasing": decreasing,
                    "limit_shift_rel": f"{rel:.2e}",
                    "limit_norm": f"{scans[1].limit_norm:.4f}"}

    return _timed(6, "limiting absorption limit", run)


def criterion_07_egorov() -> CriterionResult:
    def run():
        t0 = time.time()
        sc = GAUSSIAN_EGOROV
        n_max = max(sc.n_points_for(h) for h in H_SWEEP)
        table = eg.ClassicalSymbolTable(sc.potential, 1.0,
                                        (sc.x_min, sc.x_max), (-3.8, 3.8))
        out = eg.egorov_compare(sc.ops_provider(), gaussian_phase_symbol(),
                                1.0, H_SWEEP, sc.potential, table=table)
        elapsed = time.time() - t0
        ok = (out.slope >= 0.8 and out.mixed_slope >= 0.8
              and n_max <= 1024 and elapsed < 600.0)
        return ok, {"slope": f"{out.slope:.3f}",
                    "mixed_slope": f"{out.mixed_slope:.3f}",
                    "n_max": n_max, "runtime_ok": elapsed < 600.0}

    return _timed(7, "damped Egorov comparison", run)


def criterion_08_dilation() -> CriterionResult:
    def run():
        details = {}
        # scalar interior: identity against the closed form
        scalar = dil.DilationSystem(h1_matrix=np.array([[0.5]]),
                                    v2=np.array([0.5]), h=1.0,
                                    channel_length=2.0, n_channel=20000)
        rep_scalar = dil.verify_resolvent_identity(scalar, [1.0 + 0.5j],
                                                   n_probes=4, seed=5)
        details["scalar_err"] = f"{rep_scalar.max_error:.2e}"
        ok = rep_scalar.max_error <= 1e-10

        # 64-point interior: 10 probes, monotone refinement
        pot = make_potential("double_barrier(2.0, 2.0, 0.4)",
                             "well_centered(1.0, 1.0)")
        from .quantize import Grid, SemiclassicalParams, build_hamiltonian
        grid = Grid(-6.0, 6.0, 64)
        params = SemiclassicalParams(h=0.25)
        h1, _ = build_hamiltonian(grid, pot, params, sponge=None, e_max=None)
        errs = []
        for m in (500, 1000, 2000):
            sys_m = dil.from_quantized(h1, pot, params, channel_length=2.0,
                                       n_channel=m)
            errs.append(dil.verify_resolvent_identity(
                sys_m, [1.0 + 0.5j], n_probes=10, seed=3).max_error)
        details["err_at_1e-3"] = f"{errs[-1]:.2e}"
        details["monotone"] = bool(errs[0] > errs[1] > errs[2])
        ok = ok and errs[-1] <= 1e-6 and errs[0] > errs[1] > errs[2]

        # hermiticity gate for the central discretization
        sys_c = dil.from_quantized(h1, pot, params, channel_length=2.0,
                                   n_channel=60)
        defect = hermiticity_defect(dil.build_discrete_generator(sys_c,
                                                                 "central"))
        details["K_hermiticity"] = f"{defect:.1e}"
        ok = ok and defect <= 1e-10

        # semigroup dilation at h = 1 (unit channel speed), L = 2
        sg_sys = dil.DilationSystem(h1_matrix=np.array([[1.0]]),
                                    v2=np.array([0.5]), h=1.0,
                                    channel_length=2.0, n_channel=1500)
        rep_sg = dil.verify_semigroup_dilation(sg_sys, [0.25, 0.5, 1.0],
                                               transport="upwind",
                                               psi0=np.array([1.0 + 0j]))
        details["semigroup_err"] = f"{rep_sg.max_error:.2e}"
        ok = ok and rep_sg.max_error <= 1e-6
        return ok, details

    return _timed(8, "selfadjoint dilation identities", run)


def criterion_09_smoothing() -> CriterionResult:
    def run():
        out = eg.smoothing_integral(FREE.ops_provider(), energy_window(), 1.0,
                                    wave_packet(), 24.0, H_SWEEP)
        finite = all(np.isfinite(v) for v in out.values)
        ok = finite and out.max_over_min <= 2.0
        return ok, {"values": "[" + ", ".join(f"{v:.3f}" for v in out.values) + "]",
                    "max_over_min": f"{out.max_over_min:.3f}"}

    return _timed(9, "smoothing time integral", run)


def criterion_10_besov() -> CriterionResult:
    def run():
        rng = np.random.default_rng(ACCEPT_SEED + 10)
        n = 64
        f = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        f = (f + f.conj().T) / 2
        f *= 12.0 / np.max(np.abs(np.linalg.eigvalsh(f)))
        m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        dec = besov_mod.DyadicDecomposition.from_operator(f, s=1.0)
        formula = besov_mod.operator_norm_bs(m, dec, 1.0)
        ev = besov_mod.extremal_vector(m, dec, 1.0)
        attained = besov_mod.dual_norm(m @ ev, dec, 1.0) \
            / besov_mod.besov_norm(ev, dec, 1.0)
        rand_best = attained
        for _ in range(2000):
            u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            rand_best = max(rand_best,
                            besov_mod.dual_norm(m @ u, dec, 1.0)
                            / besov_mod.besov_norm(u, dec, 1.0))
        oracle_ok = (rand_best <= formula * (1 + 1e-10)
                     and rand_best >= 0.99 * formula)
        sweep = besov_mod.resolvent_besov_sweep(
            FREE_BESOV.ops_provider(with_a=True), H_SWEEP,
            FREE_BESOV.interval, 0.5, mu_min=FREE_BESOV.mu_min)
        slope_ok = 0.8 <= sweep.fitted_slope <= 1.2
        return oracle_ok and slope_ok, {
            "oracle_over_formula": f"{rand_best / formula:.4f}",
            "sweep_slope": f"{sweep.fitted_slope:.4f}"}

    return _timed(10, "Besov block norms", run)


def criterion_11_flow() -> CriterionResult:
    def run():
        cases = [
            ("free", "none", dyn.PhasePoint(0.0, 1.0)),
            ("free", "constant(0.5)", dyn.PhasePoint(-1.0, 0.7)),
            ("gaussian_bump(0.5, 1.0)", "well_centered(1.0, 1.0)",
             dyn.PhasePoint(1.0, 0.9)),
            ("double_barrier(2.0, 2.0, 0.4)", "well_centered(1.0, 1.0)",
             dyn.PhasePoint(0.0, 1.0)),
            ("double_barrier(2.0, 1.5, 0.35)", "well_centered(2.0, 0.8)",
             dyn.PhasePoint(0.5, -0.8)),
            ("double_barrier(2.0, 1.3, 0.3)", "outside_only(2.0, 1.0)",
             dyn.PhasePoint(0.0, 0.9)),
        ]
        params = dyn.FlowParams(dt=1e-3, t_max=50.0, r_escape=150.0,
                                tol_energy=1e-8)
        worst_drift = 0.0
        worst_q_sq = 0.0
        q_monotone = True
        for pexpr, dexpr, w0 in cases:
            pot = make_potential(pexpr, dexpr)
            traj = dyn.integrate_flow(w0, pot, params)
            worst_drift = max(worst_drift, traj.max_energy_drift)
            mid = len(traj.times) // 2
            qpos = traj.q_values[mid:]
            q_monotone = q_monotone and bool(np.all(np.diff(qpos) <= 1e-14))
            worst_q_sq = max(worst_q_sq, float(np.max(np.abs(
                traj.q1_values**2 - traj.q_values))))
        ok = worst_drift <= 1e-8 and q_monotone and worst_q_sq <= 1e-10
        return ok, {"worst_drift": f"{worst_drift:.2e}",
                    "q_monotone": q_monotone,
                    "worst_q1sq_minus_q": f"{worst_q_sq:.2e}"}

    return _timed(11, "flow invariants", run)


ALL_CRITERIA = {
    1: criterion_01_quadratic_estimate,
    2: criterion_02_resolvent_bound,
    3: criterion_03_nontrapping_scaling,
    4: criterion_04_damped_trapping,
    5: criterion_05_necessity,
    6: criterion_06_limiting_absorption,
    7: criterion_07_egorov,
    8: criterion_08_dilation,
    9: criterion_09_smoothing,
    10: criterion_10_besov,
    11: criterion_11_flow,
}

# criterion 2 runs last so the monitor has seen the whole suite's solves
RUN_ORDER = [1, 3, 4, 5, 6, 7, 8, 9, 10, 11, 2]


def run_all(numbers=None) -> list[CriterionResult]:
    chosen = RUN_ORDER if numbers is None else \
        [n for n in RUN_ORDER if n in set(numbers)]
    out = []
    for n in chosen:
        out.append(ALL_CRITERIA[n]())
    return sorted(out, key=lambda r: r.number)
