"""Experiment sweeps: parameter grids, replication, seeding, aggregation.

A sweep is a cartesian product over parameter axes. Each grid cell gets
networks_per_cell independently generated networks and replicas_per_network
runs on each. Seeding is hierarchical and collision-free by construction:

* network seed: base_seed mixed (SHA-256) with the canonical cell key and
  the network index,
* run seed: network seed XOR replica index.

Reruns with the same spec therefore reproduce every run exactly, and the
aggregate CSV byte for byte. Per-network blocks are independent, which is
also the unit of parallelism.
"""

import itertools
import math
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .epidemic import (
    EpidemicParams,
    run_epidemic,
    secondary_infection_counts,
    write_infections_csv,
    write_trajectory_csv,
    infections_csv_path,
)
from .errors import ParameterError
from .interventions import STRATEGIES, InterventionPlan
from .metrics import (
    community_infection,
    daily_correlation,
    estimate_dispersion,
    inferred_threat_levels,
)
from .netgen import (
    NETWORK_KINDS,
    KIND_ER,
    KIND_GAMMA,
    KIND_SUPERSPREADING,
    derive_degree_distribution,
    generate_er_network,
    generate_gamma_infectiousness_network,
    generate_superspreading_network,
)
from .rng import MASK64, mix_seed

FIRST_M_DEFAULT = 100
TOP_COMMUNITIES = 5


@dataclass(frozen=True)
class DiseasePreset:
    name: str
    model: str
    R0: float
    beta: float
    gamma: float
    kappa: float
    p_H: float
    k: float


PRESETS = {
    p.name: p
    for p in (
        DiseasePreset("covid19", "SEIR", 2.5, 1.0, 0.4, 0.2, 0.008372, 0.1),
        DiseasePreset("sars", "SEIR", 1.2, 0.15, 0.125, 0.1, 0.333, 0.16),
        DiseasePreset("h1n1", "SIR", 1.33, 0.19, 0.143, 0.0, 0.294, 8.092),
        DiseasePreset("ebola", "SEIR", 1.4, 0.2, 0.143, 0.2, 0.0, 0.18),
        DiseasePreset("measles", "SIR", 18.0, 4.932, 0.274, 0.0, 0.079, 0.32),
    )
}


def load_preset(name):
    """Named disease parameter set; raises listing the valid names."""
    try:
        return PRESETS[name]
    except KeyError:
        valid = ", ".join(sorted(PRESETS))
        raise ParameterError(f"unknown preset {name!r}; valid presets: {valid}") from None


GRID_AXES = (
    "N",
    "I0",
    "beta",
    "gamma",
    "kappa",
    "R0",
    "k",
    "p_H",
    "daily_tests",
    "strategy",
    "network_kind",
    "model",
)

_AXIS_CAST = {
    "N": int,
    "I0": int,
    "beta": float,
    "gamma": float,
    "kappa": float,
    "R0": float,
    "k": float,
    "p_H": float,
    "daily_tests": int,
    "strategy": str,
    "network_kind": str,
    "model": str,
}

_SCALAR_CAST = {
    "networks_per_cell": int,
    "replicas_per_network": int,
    "base_seed": int,
    "output_dir": str,
    "P_c": float,
    "P_q": float,
    "mixed": bool,
    "emit_trajectories": bool,
    "parallel": int,
}

METRIC_COLUMNS = (
    "mean_final_infection_fraction",
    "mean_top5_community_fraction",
    "mean_days_to_end",
    "mean_daily_correlation",
    "max_threat_actual",
    "max_threat_confirmed",
    "max_threat_posrate",
    "max_threat_rt_only",
    "k_hat_mean",
    "replicas",
)


@dataclass(frozen=True)
class ExperimentSpec:
    """Sweep description. Axis fields hold tuples of values to cross."""

    N: tuple = (100000,)
    I0: tuple = (10,)
    beta: tuple = (0.6,)
    gamma: tuple = (0.05,)
    kappa: tuple = (0.2,)
    R0: tuple = (2.5,)
    k: tuple = (0.1,)
    p_H: tuple = (0.0,)
    daily_tests: tuple = (0,)
    strategy: tuple = ("none",)
    network_kind: tuple = (KIND_SUPERSPREADING,)
    model: tuple = ("SIR",)
    networks_per_cell: int = 15
    replicas_per_network: int = 30
    base_seed: int = 0
    output_dir: str = "runs"
    P_c: float = 1.0
    P_q: float = 1.0
    mixed: bool = False
    emit_trajectories: bool = False
    parallel: int = 1

    def __post_init__(self):
        for name in GRID_AXES:
            vals = getattr(self, name)
            if not isinstance(vals, tuple):
                object.__setattr__(self, name, tuple(vals))
        _validate_spec(self)

    @classmethod
    def desk_profile(cls, **overrides):
        """Small profile sized for a workstation run."""
        base = dict(
            N=(10000,),
            I0=(10,),
            networks_per_cell=5,
            replicas_per_network=6,
        )
        base.update(overrides)
        return cls(**base)

    @classmethod
    def paper_profile(cls, **overrides):
        """Full-scale profile (large networks, heavy replication)."""
        base = dict(
            N=(100000,),
            I0=(10,),
            networks_per_cell=15,
            replicas_per_network=30,
        )
        base.update(overrides)
        return cls(**base)

    def cells(self):
        axes = [getattr(self, name) for name in GRID_AXES]
        return [dict(zip(GRID_AXES, combo)) for combo in itertools.product(*axes)]


def _validate_spec(spec):
    for name in GRID_AXES:
        vals = getattr(spec, name)
        if len(vals) == 0:
            raise ParameterError(f"axis {name} must have at least one value")
    for v in spec.N:
        if v < 2:
            raise ParameterError("N must be at least 2")
    for v in spec.I0:
        if v < 0:
            raise ParameterError("I0 must be non-negative")
    for name in ("beta", "gamma", "kappa", "R0", "k"):
        for v in getattr(spec, name):
            if v < 0:
                raise ParameterError(f"{name} must be non-negative")
    for v in spec.p_H:
        if not 0.0 <= v < 1.0:
            raise ParameterError("p_H must be in [0, 1)")
    for v in spec.daily_tests:
        if v < 0:
            raise ParameterError("daily_tests must be non-negative")
    for v in spec.strategy:
        if v not in STRATEGIES:
            raise ParameterError(f"unknown strategy {v!r}")
    for v in spec.network_kind:
        if v not in NETWORK_KINDS:
            raise ParameterError(f"unknown network kind {v!r}")
    for v in spec.model:
        if v not in ("SIR", "SEIR"):
            raise ParameterError(f"unknown model {v!r}")
    if spec.networks_per_cell < 1 or spec.replicas_per_network < 1:
        raise ParameterError("need at least one network and one replica per cell")
    if not 0.0 <= spec.P_c <= 1.0 or not 0.0 <= spec.P_q <= 1.0:
        raise ParameterError("P_c and P_q must be in [0, 1]")
    if spec.parallel < 1:
        raise ParameterError("parallel must be at least 1")


def cell_key(cell):
    """Canonical cell identity string; feeds the seeding hash, never change."""
    parts = []
    for name in GRID_AXES:
        v = cell[name]
        parts.append(f"{name}={_format_value(v)}")
    return ",".join(parts)


def _format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _build_network(cell, seed):
    kind = cell["network_kind"]
    if kind == KIND_SUPERSPREADING:
        dist = derive_degree_distribution(
            cell["k"], cell["R0"], cell["beta"], cell["gamma"]
        )
        return generate_superspreading_network(dist, cell["N"], seed)
    if kind == KIND_ER:
        return generate_er_network(
            cell["R0"], cell["beta"], cell["gamma"], cell["N"], seed
        )
    if kind == KIND_GAMMA:
        return generate_gamma_infectiousness_network(
            cell["k"], cell["R0"], cell["beta"], cell["gamma"], cell["N"], seed
        )
    raise ParameterError(f"unknown network kind {kind!r}")


def _run_metrics(net, traj, cell):
    n = cell["N"]
    row = {
        "final_fraction": traj.final_infected_total / n,
        "top5": community_infection(net, traj.final_compartments, TOP_COMMUNITIES),
        "days": float(traj.days_to_end),
    }
    rates = [r.positive_rate for r in traj.daily]
    ratios = [r.new_infections / n for r in traj.daily]
    try:
        row["corr"] = daily_correlation(rates, ratios)
    except ParameterError:
        row["corr"] = math.nan
    row["threat_actual"] = float(max(r.threat_level_actual for r in traj.daily))
    row["threat_confirmed"] = float(
        max(inferred_threat_levels(traj, "confirmed_counts", n).daily_level)
    )
    row["threat_posrate"] = float(
        max(inferred_threat_levels(traj, "positive_rate_all", n).daily_level)
    )
    try:
        row["threat_rt_only"] = float(
            max(inferred_threat_levels(traj, "positive_rate_rt_only", n).daily_level)
        )
    except ParameterError:
        row["threat_rt_only"] = math.nan
    counts = secondary_infection_counts(traj, FIRST_M_DEFAULT)
    if len(counts) >= 2:
        k_hat = estimate_dispersion(counts).k_hat
        # Poisson-like runs (+inf sentinel) stay out of the average
        row["k_hat"] = k_hat if math.isfinite(k_hat) else math.nan
    else:
        row["k_hat"] = math.nan
    return row


def _network_task(spec, cell_index, net_index):
    """One network and all its replicas; the parallel work unit."""
    cell = spec.cells()[cell_index]
    key = cell_key(cell)
    try:
        net_seed = mix_seed(spec.base_seed, key, "net", net_index)
        net = _build_network(cell, net_seed)
        plan = InterventionPlan.make(
            cell["strategy"],
            cell["daily_tests"],
            P_c=spec.P_c,
            P_q=spec.P_q,
            mixed=spec.mixed,
        )
        params = EpidemicParams(
            model=cell["model"],
            beta=cell["beta"],
            gamma=cell["gamma"],
            kappa=cell["kappa"] if cell["model"] == "SEIR" else 0.0,
            p_H=cell["p_H"],
            I0=cell["I0"],
        )
        rows = []
        for rep in range(spec.replicas_per_network):
            run_seed = (net_seed ^ rep) & MASK64
            traj = run_epidemic(net, params, plan, run_seed)
            rows.append(_run_metrics(net, traj, cell))
            if spec.emit_trajectories:
                tdir = Path(spec.output_dir) / "trajectories"
                stem = f"cell{cell_index:03d}_net{net_index:02d}_rep{rep:02d}"
                tpath = tdir / f"{stem}.csv"
                write_trajectory_csv(traj, tpath)
                write_infections_csv(traj, infections_csv_path(tpath))
        return cell_index, net_index, rows, None
    except Exception:
        return cell_index, net_index, [], traceback.format_exc()


@dataclass
class ExperimentResult:
    aggregate_path: Path
    rows: list
    failures: list
    runs_completed: int


def _mean(values):
    vals = [v for v in values if not math.isnan(v)]
    return sum(vals) / len(vals) if vals else math.nan


def run_experiment(spec):
    """Execute the sweep and write <output_dir>/aggregate.csv."""
    outdir = Path(spec.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    if spec.emit_trajectories:
        (outdir / "trajectories").mkdir(exist_ok=True)
        _write_trajectory_manifest(spec, outdir / "trajectories" / "manifest.csv")

    cells = spec.cells()
    tasks = [
        (ci, ni)
        for ci in range(len(cells))
        for ni in range(spec.networks_per_cell)
    ]
    results = {}
    if spec.parallel > 1:
        with ProcessPoolExecutor(max_workers=spec.parallel) as pool:
            futures = [pool.submit(_network_task, spec, ci, ni) for ci, ni in tasks]
            for fut in futures:
                ci, ni, rows, err = fut.result()
                results[(ci, ni)] = (rows, err)
    else:
        for ci, ni in tasks:
            ci, ni, rows, err = _network_task(spec, ci, ni)
            results[(ci, ni)] = (rows, err)

    failures = []
    agg_rows = []
    runs_completed = 0
    # rows are emitted sorted by canonical cell key, so the file layout is
    # independent of scheduling order
    cell_order = sorted(range(len(cells)), key=lambda ci: cell_key(cells[ci]))
    for ci in cell_order:
        cell = cells[ci]
        cell_rows = []
        for ni in range(spec.networks_per_cell):
            rows, err = results[(ci, ni)]
            if err is not None:
                failures.append(
                    {"cell": cell_key(cell), "network": ni, "error": err}
                )
            cell_rows.extend(rows)
        runs_completed += len(cell_rows)
        agg = dict(cell)
        agg["mean_final_infection_fraction"] = _mean(
            [r["final_fraction"] for r in cell_rows]
        )
        agg["mean_top5_community_fraction"] = _mean([r["top5"] for r in cell_rows])
        agg["mean_days_to_end"] = _mean([r["days"] for r in cell_rows])
        agg["mean_daily_correlation"] = _mean([r["corr"] for r in cell_rows])
        agg["max_threat_actual"] = _mean([r["threat_actual"] for r in cell_rows])
        agg["max_threat_confirmed"] = _mean([r["threat_confirmed"] for r in cell_rows])
        agg["max_threat_posrate"] = _mean([r["threat_posrate"] for r in cell_rows])
        agg["max_threat_rt_only"] = _mean([r["threat_rt_only"] for r in cell_rows])
        agg["k_hat_mean"] = _mean([r["k_hat"] for r in cell_rows])
        agg["replicas"] = len(cell_rows)
        agg_rows.append(agg)

    agg_path = outdir / "aggregate.csv"
    _write_aggregate_csv(agg_rows, agg_path)
    (outdir / "config.txt").write_text(dump_config(spec), encoding="ascii")
    if failures:
        with open(outdir / "failures.txt", "w", encoding="utf-8") as fh:
            for f in failures:
                fh.write(f"cell: {f['cell']}\nnetwork: {f['network']}\n{f['error']}\n\n")
    return ExperimentResult(
        aggregate_path=agg_path,
        rows=agg_rows,
        failures=failures,
        runs_completed=runs_completed,
    )


def _write_trajectory_manifest(spec, path):
    cells = spec.cells()
    with open(path, "w", encoding="ascii") as fh:
        fh.write("cell_index," + ",".join(GRID_AXES) + "\n")
        for ci, cell in enumerate(cells):
            vals = ",".join(_format_value(cell[a]) for a in GRID_AXES)
            fh.write(f"{ci},{vals}\n")


def _write_aggregate_csv(rows, path):
    header = ",".join(GRID_AXES + METRIC_COLUMNS)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(header + "\n")
        for row in rows:
            vals = [_format_value(row[a]) for a in GRID_AXES]
            for m in METRIC_COLUMNS:
                v = row[m]
                if m == "replicas":
                    vals.append(str(int(v)))
                else:
                    vals.append(repr(float(v)))
            fh.write(",".join(vals) + "\n")
    return path


# config files ---------------------------------------------------------------


def dump_config(spec):
    """Flat key=value text that reproduces the spec exactly via load_config."""
    lines = []
    for f in fields(spec):
        v = getattr(spec, f.name)
        if f.name in GRID_AXES:
            lines.append(f"{f.name} = " + ",".join(_format_value(x) for x in v))
        else:
            lines.append(f"{f.name} = {_format_value(v)}")
    return "\n".join(lines) + "\n"


def _parse_bool(text, key):
    t = text.strip().lower()
    if t in ("true", "1", "yes", "on"):
        return True
    if t in ("false", "0", "no", "off"):
        return False
    raise ParameterError(f"config key {key}: cannot parse boolean from {text!r}")


def parse_config(text):
    """Parse flat key=value config text into an ExperimentSpec kwargs dict."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"config line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key in _AXIS_CAST:
            cast = _AXIS_CAST[key]
            out[key] = tuple(cast(v.strip()) for v in value.split(","))
        elif key in _SCALAR_CAST:
            cast = _SCALAR_CAST[key]
            if cast is bool:
                out[key] = _parse_bool(value, key)
            else:
                out[key] = cast(value)
        else:
            raise ParameterError(f"config line {lineno}: unknown key {key!r}")
    return out


def load_config(path, base=None):
    """Build an ExperimentSpec from a config file, over base or the defaults."""
    text = Path(path).read_text(encoding="utf-8")
    kwargs = parse_config(text)
    if base is None:
        return ExperimentSpec(**kwargs)
    return replace(base, **kwargs)
