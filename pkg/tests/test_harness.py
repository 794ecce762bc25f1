"""Sweep harness: presets, config round-trip, output files, CLI."""

import math
from dataclasses import replace

import pytest

from epitrace import cli
from epitrace.epidemic import TRAJECTORY_COLUMNS
from epitrace.errors import ParameterError
from epitrace.harness import (
    GRID_AXES,
    METRIC_COLUMNS,
    PRESETS,
    ExperimentSpec,
    cell_key,
    dump_config,
    load_config,
    load_preset,
    parse_config,
    run_experiment,
)
from epitrace.netgen import load_network

# presets ------------------------------------------------------------------------


@pytest.mark.parametrize(
    "name,model,R0,beta,gamma,kappa,p_H,k",
    [
        ("covid19", "SEIR", 2.5, 1.0, 0.4, 0.2, 0.008372, 0.1),
        ("sars", "SEIR", 1.2, 0.15, 0.125, 0.1, 0.333, 0.16),
        ("h1n1", "SIR", 1.33, 0.19, 0.143, 0.0, 0.294, 8.092),
        ("ebola", "SEIR", 1.4, 0.2, 0.143, 0.2, 0.0, 0.18),
        ("measles", "SIR", 18.0, 4.932, 0.274, 0.0, 0.079, 0.32),
    ],
)
def test_preset_values(name, model, R0, beta, gamma, kappa, p_H, k):
    p = load_preset(name)
    assert (p.model, p.R0, p.beta, p.gamma, p.kappa, p.p_H, p.k) == (
        model,
        R0,
        beta,
        gamma,
        kappa,
        p_H,
        k,
    )


def test_preset_listing_and_unknown():
    assert set(PRESETS) == {"covid19", "sars", "h1n1", "ebola", "measles"}
    with pytest.raises(ParameterError) as err:
        load_preset("influenza")
    assert "covid19, ebola, h1n1, measles, sars" in str(err.value)


# spec ---------------------------------------------------------------------------


def test_profiles():
    desk = ExperimentSpec.desk_profile()
    assert desk.N == (10000,)
    assert (desk.networks_per_cell, desk.replicas_per_network) == (5, 6)
    paper = ExperimentSpec.paper_profile()
    assert paper.N == (100000,)
    assert (paper.networks_per_cell, paper.replicas_per_network) == (15, 30)


def test_cells_cross_in_axis_order():
    spec = ExperimentSpec(N=(100, 200), beta=(0.1, 0.2))
    got = [(c["N"], c["beta"]) for c in spec.cells()]
    assert got == [(100, 0.1), (100, 0.2), (200, 0.1), (200, 0.2)]


def test_cell_key_is_canonical():
    spec = ExperimentSpec(N=(100,))
    key = cell_key(spec.cells()[0])
    parts = key.split(",")
    assert [p.split("=")[0] for p in parts] == list(GRID_AXES)
    assert parts[0] == "N=100"
    assert "beta=0.6" in parts


def test_spec_validation():
    with pytest.raises(ParameterError):
        ExperimentSpec(N=())
    with pytest.raises(ParameterError):
        ExperimentSpec(N=(1,))
    with pytest.raises(ParameterError):
        ExperimentSpec(strategy=("psychic",))
    with pytest.raises(ParameterError):
        ExperimentSpec(p_H=(1.0,))
    with pytest.raises(ParameterError):
        ExperimentSpec(parallel=0)
    with pytest.raises(ParameterError):
        ExperimentSpec(networks_per_cell=0)


def test_spec_coerces_lists_to_tuples():
    spec = ExperimentSpec(N=[500, 600], strategy=["rt"])
    assert spec.N == (500, 600)
    assert spec.strategy == ("rt",)


# config round-trip ----------------------------------------------------------------


def test_config_round_trip():
    spec = ExperimentSpec(
        N=(500, 1000),
        beta=(0.3, 0.6),
        strategy=("fct", "rt"),
        daily_tests=(10,),
        networks_per_cell=2,
        replicas_per_network=3,
        base_seed=99,
        output_dir="out/xyz",
        P_c=0.8,
        P_q=0.9,
        mixed=True,
        emit_trajectories=True,
        parallel=2,
    )
    again = ExperimentSpec(**parse_config(dump_config(spec)))
    assert again == spec


def test_config_comments_and_blanks():
    kwargs = parse_config(
        """
# a comment
N = 500   # trailing comment

strategy = rt, fct
mixed = yes
"""
    )
    assert kwargs == {"N": (500,), "strategy": ("rt", "fct"), "mixed": True}


def test_config_errors_carry_line_numbers():
    with pytest.raises(ParameterError) as err:
        parse_config("N = 500\nwat = 1\n")
    assert "line 2" in str(err.value)
    with pytest.raises(ParameterError) as err:
        parse_config("just words\n")
    assert "line 1" in str(err.value)
    with pytest.raises(ParameterError):
        parse_config("mixed = maybe\n")


def test_load_config_over_base(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("N = 700\nbase_seed = 5\n")
    base = ExperimentSpec.desk_profile()
    spec = load_config(p, base=base)
    assert spec.N == (700,)
    assert spec.base_seed == 5
    assert spec.networks_per_cell == base.networks_per_cell


# running sweeps -------------------------------------------------------------------


def _tiny_spec(outdir, **overrides):
    base = dict(
        N=(300,),
        I0=(5,),
        beta=(0.6,),
        gamma=(0.2,),
        R0=(2.5,),
        k=(0.5,),
        daily_tests=(20,),
        strategy=("fct",),
        networks_per_cell=1,
        replicas_per_network=2,
        base_seed=11,
        output_dir=str(outdir),
    )
    base.update(overrides)
    return ExperimentSpec(**base)


def test_run_experiment_outputs(tmp_path):
    spec = _tiny_spec(tmp_path / "runs", emit_trajectories=True)
    result = run_experiment(spec)
    assert result.failures == []
    assert result.runs_completed == 2

    agg = result.aggregate_path.read_text().splitlines()
    assert agg[0] == ",".join(GRID_AXES + METRIC_COLUMNS)
    assert len(agg) == 2
    row = dict(zip(agg[0].split(","), agg[1].split(",")))
    assert row["strategy"] == "fct"
    assert int(row["replicas"]) == 2
    assert 0.0 < float(row["mean_final_infection_fraction"]) <= 1.0
    for col in METRIC_COLUMNS[:-1]:
        float(row[col])  # parses, possibly nan

    tdir = tmp_path / "runs" / "trajectories"
    manifest = (tdir / "manifest.csv").read_text().splitlines()
    assert manifest[0] == "cell_index," + ",".join(GRID_AXES)
    assert len(manifest) == 2
    t0 = tdir / "cell000_net00_rep00.csv"
    assert t0.exists()
    assert (tdir / "cell000_net00_rep01.csv").exists()
    assert t0.read_text().splitlines()[0] == ",".join(TRAJECTORY_COLUMNS)
    assert (tdir / "cell000_net00_rep00.infections.csv").exists()

    cfg = load_config(tmp_path / "runs" / "config.txt")
    assert cfg == spec


def test_rerun_is_byte_identical(tmp_path):
    a = run_experiment(_tiny_spec(tmp_path / "a"))
    b = run_experiment(_tiny_spec(tmp_path / "b"))
    assert a.aggregate_path.read_bytes() == b.aggregate_path.read_bytes()


def test_replica_files_do_not_depend_on_replica_count(tmp_path):
    run_experiment(_tiny_spec(tmp_path / "one", replicas_per_network=1,
                              emit_trajectories=True))
    run_experiment(_tiny_spec(tmp_path / "two", replicas_per_network=2,
                              emit_trajectories=True))
    f1 = tmp_path / "one" / "trajectories" / "cell000_net00_rep00.csv"
    f2 = tmp_path / "two" / "trajectories" / "cell000_net00_rep00.csv"
    assert f1.read_bytes() == f2.read_bytes()


def test_parallel_matches_serial(tmp_path):
    serial = run_experiment(
        _tiny_spec(tmp_path / "s", N=(200, 250), networks_per_cell=2)
    )
    par = run_experiment(
        _tiny_spec(tmp_path / "p", N=(200, 250), networks_per_cell=2, parallel=2)
    )
    assert serial.aggregate_path.read_bytes() == par.aggregate_path.read_bytes()


def test_failures_are_reported_not_raised(tmp_path):
    # an ER cell whose edge probability saturates fails at network build
    spec = _tiny_spec(
        tmp_path / "f", N=(3,), R0=(2.5,), gamma=(0.0,), network_kind=("erdos_renyi",)
    )
    result = run_experiment(spec)
    assert result.runs_completed == 0
    assert len(result.failures) == 1
    assert math.isnan(result.rows[0]["mean_final_infection_fraction"])
    assert (tmp_path / "f" / "failures.txt").exists()


# CLI ------------------------------------------------------------------------------


def test_cli_dump_config_round_trip(capsys):
    rc = cli.main(
        ["simulate", "--dump-config", "--n", "500", "--seed", "7", "--strategy", "rt"]
    )
    assert rc == 0
    spec = ExperimentSpec(**parse_config(capsys.readouterr().out))
    assert spec.N == (500,)
    assert spec.base_seed == 7
    assert spec.strategy == ("rt",)
    # the rest still carries the desk profile
    assert spec.networks_per_cell == 5


def test_cli_preset_overrides_disease_axes(capsys):
    rc = cli.main(["simulate", "--preset", "sars", "--dump-config"])
    assert rc == 0
    spec = ExperimentSpec(**parse_config(capsys.readouterr().out))
    assert spec.model == ("SEIR",)
    assert spec.R0 == (1.2,)
    assert spec.p_H == (0.333,)


def test_cli_simulate_runs_config(tmp_path, capsys):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text(
        "N = 250\nI0 = 5\ngamma = 0.2\nk = 0.5\ndaily_tests = 10\n"
        "strategy = rt\nnetworks_per_cell = 1\nreplicas_per_network = 1\n"
        f"output_dir = {tmp_path / 'out'}\n"
    )
    rc = cli.main(["simulate", "--config", str(cfg)])
    assert rc == 0
    assert (tmp_path / "out" / "aggregate.csv").exists()
    assert "runs completed: 1" in capsys.readouterr().out


def test_cli_gen_network_and_estimate_k(tmp_path, capsys):
    out = tmp_path / "net.txt"
    rc = cli.main(
        [
            "gen-network",
            "--kind",
            "superspreading",
            "--k",
            "0.5",
            "--r0",
            "2.5",
            "--beta",
            "0.6",
            "--gamma",
            "0.2",
            "--n",
            "400",
            "--seed",
            "3",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    assert load_network(out).node_count == 400

    run_experiment(_tiny_spec(tmp_path / "runs", emit_trajectories=True))
    traj = tmp_path / "runs" / "trajectories" / "cell000_net00_rep00.csv"
    capsys.readouterr()
    rc = cli.main(["estimate-k", "--trajectory", str(traj), "--first-m", "50"])
    assert rc == 0
    out_text = capsys.readouterr().out
    assert "k_hat=" in out_text and "sample_size=" in out_text


def test_cli_error_exit_codes(tmp_path, capsys):
    assert cli.main(["simulate", "--preset", "nope", "--dump-config"]) == 2
    assert (
        cli.main(
            [
                "gen-network",
                "--kind",
                "superspreading",
                "--r0",
                "2.0",
                "--beta",
                "1.0",
                "--gamma",
                "0.5",
                "--n",
                "100",
                "--out",
                str(tmp_path / "x.txt"),
            ]
        )
        == 2
    )
    assert cli.main(["estimate-k", "--trajectory", str(tmp_path / "missing.csv")]) == 2
    capsys.readouterr()
