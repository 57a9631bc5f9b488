"""End-to-end command-line tests driven through ``saarilab.cli.main``."""

import json
import math

import numpy as np
import pytest

from saarilab.cli import SCHEMA_VERSION, main
from saarilab.mech import (
    BodySystem,
    NewtonianPotential,
    releq_newton,
    releq_trajectory,
)

OSC = {"kind": "oscillator"}
NBODY2 = {
    "kind": "nbody",
    "n_bodies": 2,
    "space_dim": 2,
    "masses": [1.0, 1.0],
    "potential": {"variant": "newtonian"},
}


def write_config(tmp_path, name, cfg):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def circular_state():
    system = BodySystem(2, 2, (1.0, 1.0), NewtonianPotential())
    sol = releq_newton(system, np.array([[-0.5, 0.0], [0.5, 0.0]]))
    state = releq_trajectory(sol, 0.0)
    return ({"q": state.q.tolist(), "p": state.p.tolist()},
            2.0 * math.pi / sol.omega)


# -- tower ---------------------------------------------------------------------------


def test_tower_oscillator_coordinate(tmp_path, capsys):
    cfg = write_config(tmp_path, "t.json", {
        "system": OSC,
        "observable": {"kind": "coordinate", "index": 0},
        "point": [1.0, 0.0],
        "tower_order": 3,
    })
    code, out, _ = run(capsys, ["tower", cfg])
    assert code == 0
    rep = json.loads(out)
    assert rep["schema_version"] == SCHEMA_VERSION
    assert rep["command"] == "tower"
    np.testing.assert_allclose(rep["tower"]["values"], [0.0, -1.0, 0.0],
                               atol=1e-12)
    assert not rep["is_near_equilibrium"]


def test_tower_conserved_energy(tmp_path, capsys):
    cfg = write_config(tmp_path, "t.json", {
        "system": OSC,
        "observable": {"kind": "energy"},
        "point": [0.6, 0.8],
    })
    code, out, _ = run(capsys, ["tower", cfg])
    assert code == 0
    assert json.loads(out)["norm_inf"] < 1e-12


def test_tower_writes_output_file(tmp_path, capsys):
    out_file = tmp_path / "report.json"
    cfg = write_config(tmp_path, "t.json", {
        "system": OSC,
        "observable": {"kind": "energy"},
        "point": [1.0, 0.0],
        "output": str(out_file),
    })
    code, out, _ = run(capsys, ["tower", cfg])
    assert code == 0 and out == ""
    assert json.loads(out_file.read_text())["command"] == "tower"


# -- rank ----------------------------------------------------------------------------


def test_rank_submersion_passes(tmp_path, capsys):
    cfg = write_config(tmp_path, "r.json", {
        "system": OSC,
        "point": [1.0, 0.0],
        "tower_order": 3,
    })
    code, out, _ = run(capsys, ["rank", cfg, "--expect-submersion"])
    assert code == 0
    rep = json.loads(out)
    assert rep["rank"]["submersion"] is True
    assert rep["rank"]["numerical_rank"] == 3


def test_rank_degenerate_field_fails_expectation(tmp_path, capsys):
    # x' = x^2 vanishes to first order at the origin: every tower entry
    # does too, so the Jacobian cannot reach full rank there.
    cfg = write_config(tmp_path, "r.json", {
        "system": {
            "kind": "polynomial_field",
            "dim": 1,
            "degree": 2,
            "components": [[{"alpha": [2], "c": 1.0}]],
        },
        "point": [0.0],
        "tower_order": 2,
    })
    code, out, err = run(capsys, ["rank", cfg, "--expect-submersion"])
    assert code == 1
    assert "rank 0 < 2" in err
    assert json.loads(out)["rank"]["submersion"] is False


def test_rank_wrt_field_needs_observable(tmp_path, capsys):
    base = {"system": OSC, "point": [1.0, 0.0], "jacobian": "X"}
    cfg = write_config(tmp_path, "r.json", base)
    code, _, err = run(capsys, ["rank", cfg])
    assert code == 2 and "observable" in err
    cfg2 = write_config(tmp_path, "r2.json",
                        {**base, "observable": {"kind": "energy"}})
    code2, out2, _ = run(capsys, ["rank", cfg2])
    assert code2 == 0
    assert json.loads(out2)["jacobian"] == "X"


# -- simulate -------------------------------------------------------------------------


def test_simulate_writes_csv_and_summary(tmp_path, capsys):
    csv = tmp_path / "traj.csv"
    cfg = write_config(tmp_path, "s.json", {
        "system": OSC,
        "point": [1.0, 0.0],
        "integrator": {"method": "rk4", "step": 0.1, "max_time": 1.0},
    })
    code, out, _ = run(capsys, ["simulate", cfg, "--out", str(csv)])
    assert code == 0
    rep = json.loads(out)
    assert rep["trajectory"]["status"] == "completed"
    assert rep["csv"] == str(csv)
    lines = csv.read_text().splitlines()
    assert lines[0] == "t,q0,p0,energy,ang_mom,inertia,min_sep"
    assert len(lines) == 1 + 11


def test_simulate_streams_csv_without_out(tmp_path, capsys):
    cfg = write_config(tmp_path, "s.json", {
        "system": OSC,
        "point": [1.0, 0.0],
        "integrator": {"method": "rk4", "step": 0.5, "max_time": 1.0},
    })
    code, out, _ = run(capsys, ["simulate", cfg])
    assert code == 0
    assert out.splitlines()[0].startswith("t,q0,p0,")


def test_simulate_collision_exits_3(tmp_path, capsys):
    cfg = write_config(tmp_path, "s.json", {
        "system": NBODY2,
        "state": {"q": [[-0.5, 0.0], [0.5, 0.0]],
                  "p": [[0.0, 0.0], [0.0, 0.0]]},
        "integrator": {"method": "dop853", "step": [1e-10, 1e-12],
                       "max_time": 10.0},
    })
    # head-on free fall ends in a singular halt, which is still exit 0 ...
    code, out, _ = run(capsys, ["simulate", cfg, "--out",
                                str(tmp_path / "c.csv")])
    assert code == 0
    assert json.loads(out)["trajectory"]["status"] == "singular"
    # ... but starting *at* the collision is an error
    cfg2 = write_config(tmp_path, "s2.json", {
        "system": NBODY2,
        "state": {"q": [[0.0, 0.0], [1e-9, 0.0]],
                  "p": [[0.0, 0.0], [0.0, 0.0]]},
        "integrator": {"method": "rk4", "step": 0.01, "max_time": 1.0},
    })
    code2, _, err2 = run(capsys, ["simulate", cfg2])
    assert code2 == 3 and "collision" in err2


# -- releq ----------------------------------------------------------------------------


def test_releq_lagrange(tmp_path, capsys):
    cfg = write_config(tmp_path, "l.json", {
        "system": {**NBODY2, "n_bodies": 3, "masses": [1.0, 1.0, 1.0]},
        "family": "lagrange",
        "side": 1.0,
    })
    code, out, _ = run(capsys, ["releq", cfg])
    assert code == 0
    sol = json.loads(out)["solution"]
    assert sol["omega_squared"] == pytest.approx(3.0, rel=1e-12)
    assert sol["residual"] < 1e-11


def test_releq_newton_and_euler(tmp_path, capsys):
    cfg = write_config(tmp_path, "n.json", {
        "system": NBODY2,
        "family": "newton",
        "guess": [[-0.5, 0.0], [0.5, 0.0]],
    })
    code, out, _ = run(capsys, ["releq", cfg])
    assert code == 0
    assert json.loads(out)["solution"]["omega_squared"] == pytest.approx(2.0)
    cfg2 = write_config(tmp_path, "e.json", {
        "system": {**NBODY2, "n_bodies": 3, "masses": [1.0, 1.0, 1.0]},
        "family": "euler",
    })
    code2, out2, _ = run(capsys, ["releq", cfg2])
    assert code2 == 0
    assert json.loads(out2)["solution"]["omega_squared"] == pytest.approx(1.25)


def test_releq_unknown_family(tmp_path, capsys):
    cfg = write_config(tmp_path, "x.json", {
        "system": NBODY2, "family": "halo",
    })
    code, _, err = run(capsys, ["releq", cfg])
    assert code == 2 and "family" in err


# -- scan and perturb-experiment --------------------------------------------------------


def test_scan_conserved_energy(tmp_path, capsys):
    cfg = write_config(tmp_path, "scan.json", {
        "system": OSC,
        "observable": {"kind": "energy"},
        "scan": {"box": [0.5, 1.5], "count": 50, "seed": 3},
    })
    code, out, _ = run(capsys, ["scan", cfg])
    assert code == 0
    rep = json.loads(out)
    assert rep["zero_fraction"] == 1.0
    assert rep["report"]["n_samples"] == 50


def test_scan_needs_a_seed(tmp_path, capsys):
    cfg = write_config(tmp_path, "scan.json", {
        "system": OSC,
        "observable": {"kind": "energy"},
        "scan": {"box": [0.5, 1.5], "count": 5},
    })
    code, _, err = run(capsys, ["scan", cfg])
    assert code == 2 and "seed" in err
    code2, out2, _ = run(capsys, ["scan", cfg, "--seed", "11"])
    assert code2 == 0
    assert json.loads(out2)["report"]["seed"] == 11


def test_perturb_experiment_is_byte_deterministic(tmp_path, capsys):
    cfg = write_config(tmp_path, "exp.json", {
        "system": OSC,
        "observable": {"kind": "energy"},
        "perturbation": {"target": "observable", "degree": 3,
                         "epsilon": 0.01, "seed": 5},
        "trials": 2,
        "scan": {"box": [0.5, 1.5], "count": 20, "seed": 7},
    })
    out_a, out_b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(capsys, ["perturb-experiment", cfg, "--out", str(out_a)])[0] == 0
    assert run(capsys, ["perturb-experiment", cfg, "--out", str(out_b)])[0] == 0
    assert out_a.read_bytes() == out_b.read_bytes()
    rep = json.loads(out_a.read_text())["experiment"]
    assert rep["pooled_zero_fraction"] == 0.0
    assert rep["n_nonexcluded_total"] == 40
    assert len(rep["trials"]) == 2


# -- classify and figure-8 ----------------------------------------------------------------


def test_classify_circular_orbit(tmp_path, capsys):
    state, period = circular_state()
    cfg = write_config(tmp_path, "c.json", {
        "system": NBODY2,
        "state": state,
        "integrator": {"method": "dop853", "step": [1e-12, 1e-13],
                       "max_time": period},
    })
    code, out, _ = run(capsys, ["classify", cfg, "--expect",
                                "RelativeEquilibrium"])
    assert code == 0
    assert json.loads(out)["classification"]["verdict"] == "RelativeEquilibrium"
    # a wrong expectation flips only the exit code, not the report
    code2, out2, err2 = run(capsys, ["classify", cfg, "--expect", "Equilibrium"])
    assert code2 == 1
    assert json.loads(out2)["classification"]["verdict"] == "RelativeEquilibrium"
    assert "expected verdict" in err2


def test_figure8_demo_quick_arc(tmp_path, capsys):
    cfg = write_config(tmp_path, "f8.json", {
        "refine": False,
        "integrator": {"method": "dop853", "step": [1e-10, 1e-12],
                       "max_time": 2.0},
    })
    code, out, _ = run(capsys, ["figure8-demo", cfg, "--expect",
                                "NonConstantF"])
    assert code == 0
    rep = json.loads(out)
    assert rep["refined"] is False
    assert rep["period"] == pytest.approx(6.32591398)
    assert rep["classification"]["verdict"] == "NonConstantF"


# -- error handling --------------------------------------------------------------------


def test_missing_and_malformed_configs(tmp_path, capsys):
    code, _, err = run(capsys, ["tower", str(tmp_path / "nope.json")])
    assert code == 2 and "config" in err
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, ["tower", str(bad)])[0] == 2
    lst = tmp_path / "list.json"
    lst.write_text("[1, 2]")
    assert run(capsys, ["tower", str(lst)])[0] == 2


def test_unknown_keys_are_rejected(tmp_path, capsys):
    cfg = write_config(tmp_path, "t.json", {
        "system": OSC,
        "observable": {"kind": "energy"},
        "point": [1.0, 0.0],
        "towr_order": 3,  # typo
    })
    code, _, err = run(capsys, ["tower", cfg])
    assert code == 2 and "towr_order" in err


def test_unknown_system_kind(tmp_path, capsys):
    cfg = write_config(tmp_path, "t.json", {
        "system": {"kind": "pendulum"},
        "observable": {"kind": "energy"},
        "point": [0.0, 0.0],
    })
    assert run(capsys, ["tower", cfg])[0] == 2


def test_point_must_match_dimension(tmp_path, capsys):
    cfg = write_config(tmp_path, "t.json", {
        "system": OSC,
        "observable": {"kind": "energy"},
        "point": [1.0, 0.0, 0.0],
    })
    code, _, err = run(capsys, ["tower", cfg])
    assert code == 2 and "length 2" in err


def test_collision_point_exits_3(tmp_path, capsys):
    cfg = write_config(tmp_path, "t.json", {
        "system": NBODY2,
        "observable": {"kind": "energy"},
        "state": {"q": [[0.0, 0.0], [1e-12, 0.0]],
                  "p": [[0.0, 0.0], [0.0, 0.0]]},
    })
    assert run(capsys, ["tower", cfg])[0] == 3


def test_argparse_errors_surface_as_exit_2(capsys):
    assert main([]) == 2          # no command
    capsys.readouterr()
    assert main(["tower"]) == 2   # missing config path
    capsys.readouterr()
