import json
from pathlib import Path

import numpy as np
import pytest

from semidamp import cli
from semidamp.config import (load_config, parse_h_list, parse_z,
                             scenario_from_config, schema_text)
from semidamp.errors import ConfigError
from semidamp.scenarios import SCENARIOS, get_scenario, list_scenarios


def run_cli(argv):
    return cli.main(argv)


def test_list_contains_required_names(capsys):
    assert run_cli(["list"]) == 0
    out = capsys.readouterr().out
    assert "free" in out
    assert "double_barrier" in out


def test_every_listed_scenario_resolves():
    for name, _desc in list_scenarios():
        sc = get_scenario(name)
        _ = sc.potential  # presets must resolve
        grid = sc.grid_for(0.125)
        assert grid.n_points >= 8


def test_unknown_scenario_and_preset_errors(tmp_path):
    assert run_cli(["resolvent", "--scenario", "nope", "--h", "0.125",
                    "--z", "1,0.01"]) == 2
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("[scenario]\npotential = not_a_preset(1)\n"
                   "[run]\ncommand = sweep\n")
    assert run_cli(["run", str(cfg)]) == 2


def test_unknown_config_key_named(tmp_path):
    cfg = tmp_path / "bad2.cfg"
    cfg.write_text("[grid]\nn_wiggles = 3\n[run]\ncommand = sweep\n")
    with pytest.raises(ConfigError, match="grid.n_wiggles"):
        load_config(cfg)


def test_flow_subcommand_and_csv_schema(tmp_path, capsys):
    out = tmp_path / "art"
    rc = run_cli(["flow", "--scenario", "double_barrier", "--x0", "0.0",
                  "--xi0", "1.0", "--t-max", "2.0", "--out-dir", str(out),
                  "--plot"])
    assert rc == 0
    header = (out / "orbit.csv").read_text().splitlines()[0]
    assert header == "t,x,xi,p,q,q1,grid_converged"
    assert (out / "orbit.svg").stat().st_size > 0
    man = json.loads((out / "manifest.json").read_text())
    assert "orbit.csv" in man["outputs"]


def test_csv_crlf_line_endings(tmp_path):
    out = tmp_path / "art"
    run_cli(["flow", "--scenario", "free", "--t-max", "1.0",
             "--out-dir", str(out)])
    raw = (out / "orbit.csv").read_bytes()
    assert b"\r\n" in raw


def test_resolvent_subcommand(tmp_path, capsys):
    out = tmp_path / "art"
    rc = run_cli(["resolvent", "--scenario", "free", "--h", "0.125",
                  "--z", "1.0,0.001", "--s", "1.0", "--out-dir", str(out)])
    assert rc == 0
    lines = (out / "resolvent.csv").read_text().splitlines()
    assert lines[0] == "h,nu,nu_tilde,re_z,im_z,s,norm,residual,grid_converged"
    assert len(lines) == 2


def test_run_config_deterministic(tmp_path):
    cfg = tmp_path / "demo.cfg"
    out = tmp_path / "art"
    cfg.write_text(
        "[scenario]\nname = free\n"
        "[params]\ns = 1.0\ninterval = 0.9,1.1\nh = 0.125\n"
        f"[run]\ncommand = resolvent\nz = 1.0,0.001\n"
        f"out_dir = {out}\n")
    assert run_cli(["run", str(cfg)]) == 0
    first = (out / "resolvent.csv").read_bytes()
    assert run_cli(["run", str(cfg)]) == 0
    assert (out / "resolvent.csv").read_bytes() == first
    man = json.loads((out / "manifest.json").read_text())
    assert man["config_hash"]


def test_scenario_config_roundtrip(tmp_path):
    sc = SCENARIOS["double_barrier_damped"]
    cfg_dict = sc.as_config_dict()
    text = []
    for section, keys in cfg_dict.items():
        text.append(f"[{section}]")
        for k, v in keys.items():
            text.append(f"{k} = {v}")
    text += ["[run]", "command = sweep"]
    path = tmp_path / "rt.cfg"
    path.write_text("\n".join(text) + "\n")
    back = scenario_from_config(load_config(path))
    assert back.potential_expr == sc.potential_expr
    assert back.damping_expr == sc.damping_expr
    assert back.interval == sc.interval
    assert back.s == sc.s
    assert back.nu_kind == sc.nu_kind


def test_parse_helpers():
    assert parse_h_list("0.125, 0.0625") == [0.125, 0.0625]
    with pytest.raises(ConfigError):
        parse_h_list("a,b")
    assert parse_z("1.0,0.5") == 1.0 + 0.5j
    with pytest.raises(ConfigError):
        parse_z("1.0")


def test_schema_file_in_sync():
    shipped = (Path(cli.__file__).parent / "config_schema.txt").read_text()
    assert shipped == schema_text()


def test_besov_subcommand(tmp_path):
    out = tmp_path / "art"
    rc = run_cli(["besov", "--scenario", "free_besov", "--h", "0.125",
                  "--s", "0.5", "--ref", "ah", "--out-dir", str(out),
                  "--plot"])
    assert rc == 0
    header = (out / "besov.csv").read_text().splitlines()[0]
    assert header == "j,k,block_norm,weighted,grid_converged"
    assert (out / "besov.svg").stat().st_size > 0


def test_classify_subcommand(tmp_path, capsys):
    out = tmp_path / "art"
    rc = run_cli(["classify", "--scenario", "double_barrier",
                  "--energy", "1.0", "--t-max", "15.0", "--n-samples", "15",
                  "--out-dir", str(out)])
    assert rc == 0
    assert "covered" in capsys.readouterr().out
