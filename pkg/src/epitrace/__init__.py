"""Stochastic epidemic simulation on synthetic contact networks.

The package couples exact continuous-time SIR/SEIR dynamics (with optional
hospitalisation) to daily testing, quarantine and contact-tracing policies,
on networks whose offspring statistics can be tuned from homogeneous to
strongly superspreading. See the README for the command line interface.
"""

from .epidemic import (
    EpidemicParams,
    DailyRecord,
    SimulationState,
    Trajectory,
    hospitalization_rate,
    run_epidemic,
    secondary_infection_counts,
    write_infections_csv,
    write_trajectory_csv,
)
from .errors import ParameterError
from .harness import (
    DiseasePreset,
    ExperimentSpec,
    dump_config,
    load_config,
    load_preset,
    run_experiment,
)
from .interventions import (
    InterventionPlan,
    TestOutcome,
    TracingQueue,
    daily_step,
    got_refill,
    mixed_rt_share,
    order_queue,
    select_random_tests,
)
from .metrics import (
    DispersionEstimate,
    ThreatSeries,
    community_infection,
    daily_correlation,
    days_to_end,
    estimate_dispersion,
    inferred_threat_levels,
    positive_rate,
    threat_levels,
)
from .netgen import (
    ContactNetwork,
    DegreeDistribution,
    NetworkStats,
    derive_degree_distribution,
    expected_clustering_coefficient,
    generate_er_network,
    generate_gamma_infectiousness_network,
    generate_superspreading_network,
    infection_probability,
    load_network,
    network_stats,
    save_network,
)

__version__ = "0.1.0"

__all__ = [
    "ContactNetwork",
    "DailyRecord",
    "DegreeDistribution",
    "DiseasePreset",
    "DispersionEstimate",
    "EpidemicParams",
    "ExperimentSpec",
    "InterventionPlan",
    "NetworkStats",
    "ParameterError",
    "SimulationState",
    "TestOutcome",
    "ThreatSeries",
    "TracingQueue",
    "Trajectory",
    "community_infection",
    "daily_correlation",
    "daily_step",
    "days_to_end",
    "derive_degree_distribution",
    "dump_config",
    "estimate_dispersion",
    "expected_clustering_coefficient",
    "generate_er_network",
    "generate_gamma_infectiousness_network",
    "generate_superspreading_network",
    "got_refill",
    "hospitalization_rate",
    "infection_probability",
    "inferred_threat_levels",
    "load_config",
    "load_network",
    "load_preset",
    "mixed_rt_share",
    "network_stats",
    "order_queue",
    "positive_rate",
    "run_epidemic",
    "run_experiment",
    "save_network",
    "secondary_infection_counts",
    "select_random_tests",
    "threat_levels",
    "write_infections_csv",
    "write_trajectory_csv",
]
