"""Command-line harness: experiments in, CSV artifacts (+ figures) out.

Subcommands: flow, classify, resolvent, sweep, egorov, dilation, besov,
accept, list, run. `run` drives any of them from a config file and writes
a manifest next to the CSVs; --plot renders SVG figures from the CSVs.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import acceptance
from . import besov as besov_mod
from . import dilation as dil
from . import dynamics as dyn
from . import egorov as eg
from . import resolvent as res
from .config import (config_hash, load_config, parse_h_list, parse_z,
                     scenario_from_config, schema_text)
from .errors import ConfigError, GateFailure, SemidampError
from .potentials import make_potential
from .quantize import SemiclassicalParams
from .reporting import RunManifest, write_csv
from .scenarios import (SCENARIOS, Scenario, gaussian_phase_symbol,
                        get_scenario, list_scenarios)

DEFAULT_H_LIST = [1 / 8, 1 / 16, 1 / 32, 1 / 64]

SYMBOLS = {
    "gaussian": gaussian_phase_symbol(),
    "gaussian_left": gaussian_phase_symbol(x0=-1.0, xi0=0.8),
    "position": lambda x, xi: np.broadcast_arrays(
        np.asarray(x, float), np.asarray(xi, float))[0],
}


def _outdir(args) -> Path:
    out = Path(getattr(args, "out_dir", None) or "artifacts")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(args, scenario: Scenario | None = None) -> RunManifest:
    man = RunManifest()
    if scenario is not None:
        man.seeds["scenario"] = scenario.seed
    return man


def _finish(man: RunManifest, outdir: Path, plots: list) -> None:
    for p in plots:
        man.add_output(p)
    man.write(outdir)
    print(f"artifacts in {outdir}")


def cmd_list(args) -> int:
    print(f"{'scenario':28s} description")
    for name, desc in list_scenarios():
        print(f"{name:28s} {desc}")
    return 0


def cmd_flow(args) -> int:
    sc = get_scenario(args.scenario)
    pot = sc.potential
    params = dyn.FlowParams(dt=args.dt, t_max=args.t_max,
                            r_escape=dyn.estimate_escape_radius(pot, args.energy))
    traj = dyn.integrate_flow(dyn.PhasePoint(args.x0, args.xi0), pot, params)
    outdir = _outdir(args)
    man = _manifest(args, sc)
    stride = max(1, len(traj.times) // args.max_rows)
    ok = traj.max_energy_drift <= params.tol_energy
    rows = []
    p_vals = traj.xis**2 + pot.v1(traj.xs)
    for k in range(0, len(traj.times), stride):
        rows.append([traj.times[k], traj.xs[k], traj.xis[k], p_vals[k],
                     traj.q_values[k], traj.q1_values[k], ok])
    path = write_csv(outdir / "orbit.csv",
                     ["t", "x", "xi", "p", "q", "q1", "grid_converged"], rows)
    man.add_output(path)
    man.gates["energy_drift"] = traj.max_energy_drift
    plots = []
    if args.plot:
        from . import plots as plotting
        plots.append(plotting.plot_orbit(path))
    _finish(man, outdir, plots)
    print(f"flags: {traj.flags}")
    return 0


def cmd_classify(args) -> int:
    sc = get_scenario(args.scenario)
    pot = sc.potential
    r_esc = dyn.estimate_escape_radius(pot, args.energy)
    params = dyn.FlowParams(r_escape=r_esc, t_max=args.t_max)
    report = dyn.damping_condition_check(args.energy, pot, params,
                                         n_samples=args.n_samples)
    outdir = _outdir(args)
    man = _manifest(args, sc)
    rows = [[w.x, w.xi, r.status_future, r.status_past, r.meets_O,
             r.damping_integral, True] for w, r in report.bounded_points]
    path = write_csv(outdir / "classify.csv",
                     ["x", "xi", "status_future", "status_past", "meets_O",
                      "damping_integral", "grid_converged"], rows)
    man.add_output(path)
    man.gates["verdict"] = report.verdict
    _finish(man, outdir, [])
    print(f"verdict: {report.verdict} "
          f"({report.n_bounded} bounded / {report.n_shell} shell points, "
          f"fraction meeting damping {report.fraction_meeting:.2f})")
    return 0


def cmd_resolvent(args) -> int:
    sc = get_scenario(args.scenario)
    z = parse_z(args.z)
    op = sc.build(args.h).h
    stats: dict = {}
    norm = res.weighted_norm(op, z, args.s, stats=stats)
    outdir = _outdir(args)
    man = _manifest(args, sc)
    p = op.params
    path = write_csv(outdir / "resolvent.csv",
                     ["h", "nu", "nu_tilde", "re_z", "im_z", "s", "norm",
                      "residual", "grid_converged"],
                     [[args.h, p.nu, p.nu_tilde, z.real, z.imag, args.s,
                       norm, stats.get("residual", 0.0), True]])
    man.add_output(path)
    _finish(man, outdir, [])
    print(f"weighted norm: {norm:.6g}")
    return 0


def cmd_sweep(args) -> int:
    sc = get_scenario(args.scenario)
    interval = tuple(float(v) for v in args.interval.split(","))
    h_list = parse_h_list(args.h_list) if args.h_list else DEFAULT_H_LIST
    sweep = res.scaling_sweep(sc.resolvent_provider(), h_list, interval,
                              args.s, mu_min=sc.mu_min)
    outdir = _outdir(args)
    man = _manifest(args, sc)
    man.z_grid_doc = sweep.z_grid_doc
    rows = [[r.h, r.nu, r.nu_tilde, r.re_z, r.im_z, r.s, r.norm, r.residual,
             r.grid_converged] for r in sweep.rows]
    name = args.out or "sweep.csv"
    path = write_csv(outdir / name,
                     ["h", "nu", "nu_tilde", "re_z", "im_z", "s", "norm",
                      "residual", "grid_converged"], rows)
    man.add_output(path)
    man.gates["fitted_slope"] = sweep.fitted_slope
    man.gates["fit_residual"] = sweep.fit_residual
    man.grid_convergence = {str(h): bool(f) for h, f in
                            zip(sweep.h_values, sweep.grid_convergence_flags)}
    plots = []
    if args.plot:
        from . import plots as plotting
        plots.append(plotting.plot_sweep(path))
    _finish(man, outdir, plots)
    print(f"slope {sweep.fitted_slope:.4f} (residual {sweep.fit_residual:.4f}), "
          f"sups: {['%.4g' % v for v in sweep.sup_norms]}")
    if not all(sweep.grid_convergence_flags):
        raise GateFailure("grid convergence gate failed for some h")
    return 0


def cmd_egorov(args) -> int:
    sc = get_scenario(args.scenario)
    if args.symbol not in SYMBOLS:
        raise ConfigError(f"unknown symbol {args.symbol!r} "
                          f"(have {sorted(SYMBOLS)})")
    h_list = parse_h_list(args.h_list) if args.h_list else DEFAULT_H_LIST
    table = eg.ClassicalSymbolTable(sc.potential, args.t,
                                    (sc.x_min, sc.x_max), (-3.8, 3.8))
    out = eg.egorov_compare(sc.ops_provider(), SYMBOLS[args.symbol], args.t,
                            h_list, sc.potential, table=table)
    outdir = _outdir(args)
    man = _manifest(args, sc)
    rows = [[r.h, r.error, r.mixed_error, r.grid_converged] for r in out.rows]
    path = write_csv(outdir / "egorov.csv",
                     ["h", "error", "mixed_error", "grid_converged"], rows)
    man.add_output(path)
    man.gates["slope"] = out.slope
    man.gates["mixed_slope"] = out.mixed_slope
    plots = []
    if args.plot:
        from . import plots as plotting
        plots.append(plotting.plot_egorov(path))
    _finish(man, outdir, plots)
    print(f"egorov slope {out.slope:.3f}, mixed {out.mixed_slope:.3f}")
    return 0


def cmd_dilation(args) -> int:
    sc = get_scenario(args.scenario)
    pot = sc.potential
    from .quantize import Grid, build_hamiltonian
    grid = Grid(-6.0, 6.0, args.n_interior)
    params = SemiclassicalParams(h=args.h)
    h1, _ = build_hamiltonian(grid, pot, params, sponge=None, e_max=None)
    outdir = _outdir(args)
    man = _manifest(args, sc)
    rows = []
    if args.check == "resolvent":
        z = parse_z(args.z)
        for level, m in enumerate((args.n_channel, 2 * args.n_channel,
                                   4 * args.n_channel)):
            sys_m = dil.from_quantized(h1, pot, params,
                                       channel_length=args.L, n_channel=m)
            rep = dil.verify_resolvent_identity(sys_m, [z], n_probes=8,
                                                seed=sc.seed)
            rows.append([f"level{level}", rep.max_error, args.L,
                         args.L / m, True])
        gate = rows[0][1] >= rows[1][1] >= rows[2][1]
        man.gates["monotone_refinement"] = bool(gate)
    else:
        sys_m = dil.from_quantized(h1, pot, params, channel_length=args.L,
                                   n_channel=args.n_channel)
        rep = dil.verify_semigroup_dilation(sys_m, [0.25 * args.L * args.h,
                                                    0.4 * args.L * args.h],
                                            transport="upwind")
        for t, err in zip(rep.t_values, rep.errors):
            rows.append([f"t={t}", err, args.L, args.L / args.n_channel, True])
        man.gates["max_error"] = rep.max_error
    path = write_csv(outdir / "dilation.csv",
                     ["probe", "error", "L", "spacing", "grid_converged"],
                     rows)
    man.add_output(path)
    plots = []
    if args.plot and args.check == "resolvent":
        from . import plots as plotting
        plots.append(plotting.plot_dilation(path))
    _finish(man, outdir, plots)
    print(f"dilation {args.check} max error: "
          f"{max(r[1] for r in rows):.3e}")
    return 0


def cmd_besov(args) -> int:
    sc = get_scenario(args.scenario)
    ops = sc.build(args.h, with_a=True)
    if args.ref == "ah":
        ref = ops.a.matrix
    elif args.ref == "x":
        ref = np.diag(ops.grid.nodes)
    else:
        raise ConfigError("besov --ref must be ah or x")
    dec = besov_mod.DyadicDecomposition.from_operator(ref, s=args.s)
    z = complex(0.5 * (sc.interval[0] + sc.interval[1]), sc.mu_min)
    solver = res.ShiftedSolver(ops.h, z)
    rmat = solver.solve(np.eye(ops.h.matrix.shape[0], dtype=complex))
    table = besov_mod.block_table(rmat, dec, args.s)
    norm = besov_mod.operator_norm_bs(rmat, dec, args.s)
    outdir = _outdir(args)
    man = _manifest(args, sc)
    rows = [[j, k, bn, wn, True] for j, k, bn, wn in table]
    path = write_csv(outdir / "besov.csv",
                     ["j", "k", "block_norm", "weighted", "grid_converged"],
                     rows)
    man.add_output(path)
    man.gates["besov_norm"] = norm
    plots = []
    if args.plot:
        from . import plots as plotting
        plots.append(plotting.plot_besov_blocks(path))
    _finish(man, outdir, plots)
    print(f"B_s -> B_s* norm: {norm:.6g} (reference {args.ref}, s={args.s})")
    return 0


def cmd_accept(args) -> int:
    numbers = None
    if args.criteria:
        numbers = [int(tok) for tok in args.criteria.split(",") if tok.strip()]
    results = acceptance.run_all(numbers)
    outdir = _outdir(args)
    man = RunManifest()
    rows = []
    for r in results:
        print(r.line())
        rows.append([r.number, r.name, r.passed,
                     "; ".join(f"{k}={v}" for k, v in r.details.items()),
                     True])
    path = write_csv(outdir / "acceptance.csv",
                     ["criterion", "name", "passed", "details",
                      "grid_converged"], rows)
    man.add_output(path)
    man.gates = {f"criterion_{r.number}": bool(r.passed) for r in results}
    man.write(outdir)
    n_fail = sum(not r.passed for r in results)
    print(f"{len(results) - n_fail}/{len(results)} criteria passed")
    return 0 if n_fail == 0 else 1


def cmd_schema(args) -> int:
    print(schema_text())
    return 0


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    sc = scenario_from_config(cfg)
    run_cfg = cfg.get("run", {})
    command = run_cfg["command"]
    params = cfg.get("params", {})
    ns = argparse.Namespace(
        scenario=sc.name if sc.name in SCENARIOS else "free",
        out_dir=run_cfg.get("out_dir", "artifacts"),
        plot=run_cfg.get("plots", False),
        h=params.get("h", 0.125),
        s=params.get("s", sc.s),
        h_list=run_cfg.get("h_list"),
        interval=f"{sc.interval[0]},{sc.interval[1]}",
        z=run_cfg.get("z", "1.0,0.001"),
        t=run_cfg.get("t", 1.0),
        t_max=run_cfg.get("t", 50.0),
        dt=1e-3,
        x0=run_cfg.get("x0", 0.0),
        xi0=run_cfg.get("xi0", 1.0),
        energy=run_cfg.get("energy", 1.0),
        n_samples=41,
        symbol=run_cfg.get("symbol", "gaussian"),
        check=run_cfg.get("check", "resolvent"),
        L=run_cfg.get("channel_length", 2.0),
        n_channel=500,
        n_interior=64,
        max_rows=4000,
        out=None,
        ref=run_cfg.get("ref", "ah"),
        criteria=None,
    )
    # custom scenarios (not in the registry) are injected temporarily
    injected = sc.name not in SCENARIOS
    if injected:
        SCENARIOS[sc.name] = sc
    try:
        handlers = {"flow": cmd_flow, "classify": cmd_classify,
                    "resolvent": cmd_resolvent, "sweep": cmd_sweep,
                    "egorov": cmd_egorov, "dilation": cmd_dilation,
                    "besov": cmd_besov, "accept": cmd_accept}
        if command not in handlers:
            raise ConfigError(f"run.command: unknown command {command!r}")
        # record config provenance in the artifact manifest afterwards
        rc = handlers[command](ns)
        man_path = Path(ns.out_dir) / "manifest.json"
        if man_path.exists():
            import json
            payload = json.loads(man_path.read_text())
            payload["config_hash"] = config_hash(args.config)
            payload["config_path"] = str(args.config)
            man_path.write_text(json.dumps(payload, indent=2, sort_keys=True)
                                + "\n", encoding="utf-8")
        return rc
    finally:
        if injected:
            SCENARIOS.pop(sc.name, None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="semidamp",
        description="numerical workbench for damped semiclassical "
                    "Schrodinger operators (1D)")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("list", help="list registered scenarios")
    p.set_defaults(fn=cmd_list)

    p = sub.add_parser("schema", help="print the config file schema")
    p.set_defaults(fn=cmd_schema)

    p = sub.add_parser("flow", help="integrate one classical orbit")
    p.add_argument("--scenario", default="double_barrier")
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--xi0", type=float, default=1.0)
    p.add_argument("--t-max", dest="t_max", type=float, default=50.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--energy", type=float, default=1.0,
                   help="energy scale for the escape radius")
    p.add_argument("--max-rows", type=int, default=4000)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--plot", action="store_true")
    p.set_defaults(fn=cmd_flow)

    p = sub.add_parser("classify", help="classify an energy shell")
    p.add_argument("--scenario", default="double_barrier")
    p.add_argument("--energy", type=float, default=1.0)
    p.add_argument("--n-samples", dest="n_samples", type=int, default=41)
    p.add_argument("--t-max", dest="t_max", type=float, default=50.0)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(fn=cmd_classify)

    p = sub.add_parser("resolvent", help="one weighted resolvent query")
    p.add_argument("--scenario", default="free")
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--z", required=True, help="re,im")
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(fn=cmd_resolvent)

    p = sub.add_parser("sweep", help="h-scaling sweep of the sup norm")
    p.add_argument("--scenario", default="free")
    p.add_argument("--h-list", dest="h_list", default=None,
                   help="comma-separated, default 1/8..1/64")
    p.add_argument("--interval", default="0.9,1.1")
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--out", default=None, help="CSV filename")
    p.add_argument("--out-dir", default=None)
    p.add_argument("--plot", action="store_true")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("egorov", help="damped Egorov comparison sweep")
    p.add_argument("--scenario", default="gaussian_egorov")
    p.add_argument("--symbol", default="gaussian")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--h-list", dest="h_list", default=None)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--plot", action="store_true")
    p.set_defaults(fn=cmd_egorov)

    p = sub.add_parser("dilation", help="selfadjoint dilation checks")
    p.add_argument("--scenario", default="double_barrier")
    p.add_argument("--L", type=float, default=2.0)
    p.add_argument("--z", default="1.0,0.5")
    p.add_argument("--check", choices=("resolvent", "semigroup"),
                   default="resolvent")
    p.add_argument("--h", type=float, default=0.25)
    p.add_argument("--n-interior", dest="n_interior", type=int, default=64)
    p.add_argument("--n-channel", dest="n_channel", type=int, default=500)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--plot", action="store_true")
    p.set_defaults(fn=cmd_dilation)

    p = sub.add_parser("besov", help="dyadic block norms of the resolvent")
    p.add_argument("--scenario", default="free_besov")
    p.add_argument("--h", type=float, default=0.125)
    p.add_argument("--s", type=float, default=0.5)
    p.add_argument("--ref", choices=("ah", "x"), default="ah")
    p.add_argument("--out-dir", default=None)
    p.add_argument("--plot", action="store_true")
    p.set_defaults(fn=cmd_besov)

    p = sub.add_parser("accept", help="run the acceptance suite")
    p.add_argument("--criteria", default=None,
                   help="comma-separated criterion numbers (default all)")
    p.add_argument("--out-dir", default=None)
    p.set_defaults(fn=cmd_accept)

    p = sub.add_parser("run", help="drive a subcommand from a config file")
    p.add_argument("config")
    p.set_defaults(fn=cmd_run)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except GateFailure as exc:
        print(f"gate failure: {exc}", file=sys.stderr)
        return 1
    except SemidampError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
