"""Continuous-time stochastic epidemic dynamics on a contact network.

The dynamics are SIR or SEIR with optional hospitalisation, simulated
exactly (every transition is an exponential clock; the next event is drawn
by competing rates). The clock pauses at every integer day so that testing
and tracing can act on a frozen population, then resumes; exponential
memorylessness makes the pause-and-resume exact.

Per-node transmission uses rate[u] * (number of susceptible neighbours),
where rate[u] is the network's per-node infection rate when present and
the global beta otherwise. Quarantined nodes stop transmitting but still
progress to recovery; hospitalised nodes are removed from circulation for
good and count as confirmed cases.
"""

from dataclasses import dataclass, field

import numpy as np

from . import metrics as _metrics
from .engine import (
    ADV_EXTINCT,
    CNT_CTD,
    CNT_E,
    CNT_EV,
    CNT_H,
    CNT_I,
    CNT_INF,
    CNT_ISET,
    CNT_R,
    CNT_S,
    COMP_I,
    COUNTS_LEN,
    EV_HOSP,
    EV_INFECT,
    EV_RECOVER,
    EV_SEED,
    active_backend,
)
from .errors import ParameterError
from .interventions import NO_INTERVENTION, TracingQueue, daily_step
from .rng import RunRng, mix_seed

MODEL_SIR = "SIR"
MODEL_SEIR = "SEIR"
MODELS = (MODEL_SIR, MODEL_SEIR)

EVENT_NAMES = ("seed", "infect", "activate", "recover", "hospitalize")


def hospitalization_rate(p_H, gamma):
    """Hospitalisation hazard eta with eta / (eta + gamma) == p_H.

    An infectious node leaves I through two competing clocks, recovery
    (gamma) and hospitalisation (eta); solving for the target share p_H
    gives eta = gamma * p_H / (1 - p_H).
    """
    if gamma <= 0:
        raise ParameterError("gamma must be positive")
    if not 0.0 <= p_H < 1.0:
        raise ParameterError("p_H must be in [0, 1); every case cannot be hospitalised")
    return gamma * p_H / (1.0 - p_H)


@dataclass(frozen=True)
class EpidemicParams:
    """Disease parameters; eta is derived, never set directly."""

    model: str
    beta: float
    gamma: float
    kappa: float = 0.0
    p_H: float = 0.0
    I0: int = 10

    def __post_init__(self):
        if self.model not in MODELS:
            raise ParameterError(f"model must be one of {MODELS}")
        if self.beta < 0:
            raise ParameterError("beta must be non-negative")
        if self.gamma < 0:
            raise ParameterError("gamma must be non-negative")
        if self.kappa < 0:
            raise ParameterError("kappa must be non-negative")
        if not 0.0 <= self.p_H < 1.0:
            raise ParameterError("p_H must be in [0, 1)")
        if self.I0 < 0:
            raise ParameterError("I0 must be non-negative")

    @property
    def eta(self):
        if self.p_H == 0.0:
            return 0.0
        return hospitalization_rate(self.p_H, self.gamma)


class _IndexedSet:
    """Dense int set with O(1) add/discard and indexable members."""

    __slots__ = ("members", "pos", "size")

    def __init__(self, n, full):
        if full:
            self.members = np.arange(n, dtype=np.int64)
            self.pos = np.arange(n, dtype=np.int64)
            self.size = n
        else:
            self.members = np.empty(n, dtype=np.int64)
            self.pos = np.full(n, -1, dtype=np.int64)
            self.size = 0

    def __contains__(self, node):
        return self.pos[node] >= 0

    def add(self, node):
        if self.pos[node] >= 0:
            return
        self.members[self.size] = node
        self.pos[node] = self.size
        self.size += 1

    def discard(self, node):
        p = self.pos[node]
        if p < 0:
            return
        last = self.size - 1
        moved = self.members[last]
        self.members[p] = moved
        self.pos[moved] = p
        self.pos[node] = -1
        self.size = last


class SimulationState:
    """Mutable state of one run: compartments, activity, testing ledger.

    Two independent random streams are derived from the run seed, one for
    the disease dynamics and one for testing/tracing coins. With the
    intervention coins all failing (P_q = P_c = 0) the dynamics stream is
    untouched by the intervention layer, so the trajectory matches the
    no-intervention run for the same seed draw by draw.
    """

    def __init__(self, net, params, seed, backend=None, initial_infected=None):
        n = net.node_count
        if params.I0 > n:
            raise ParameterError("I0 cannot exceed the node count")
        self.net = net
        self.params = params
        self.n = n
        self.backend = backend if backend is not None else active_backend()
        self.rng_events = RunRng(mix_seed(seed, "events"), self.backend)
        self.rng_tests = RunRng(mix_seed(seed, "tests"), self.backend)

        self.comp = np.zeros(n, dtype=np.int8)
        self.active = np.ones(n, dtype=np.uint8)
        self.confirmed = np.zeros(n, dtype=np.uint8)
        self.s_nbr = net.degrees().astype(np.int32)
        if net.per_node_infection_rate is not None:
            self.rate = np.asarray(net.per_node_infection_rate, dtype=np.float64)
        else:
            self.rate = np.full(n, float(params.beta), dtype=np.float64)

        cap = 1
        while cap < n:
            cap *= 2
        self.cap = cap
        self.tree = np.zeros(2 * cap, dtype=np.float64)

        self.i_members = np.empty(n, dtype=np.int32)
        self.i_pos = np.full(n, -1, dtype=np.int32)
        self.e_members = np.empty(n, dtype=np.int32)
        self.e_pos = np.full(n, -1, dtype=np.int32)

        ev_cap = 3 * n + 8
        self.ev_time = np.empty(ev_cap, dtype=np.float64)
        self.ev_node = np.empty(ev_cap, dtype=np.int32)
        self.ev_code = np.empty(ev_cap, dtype=np.int8)

        self.inf_order = np.empty(n, dtype=np.int32)
        self.sec_count = np.zeros(n, dtype=np.int32)
        self.infector_arr = np.full(n, -1, dtype=np.int32)
        self.infection_day = np.full(n, -1, dtype=np.int32)

        self.counts = np.zeros(COUNTS_LEN, dtype=np.int64)
        self.counts[CNT_S] = n
        self.tnow = np.zeros(1, dtype=np.float64)
        self.day = 0
        self.quarantined_cumulative = 0
        self.quarantine_log = []
        self.queue = TracingQueue()
        self.rt_pool = _IndexedSet(n, full=True)
        self._ev_done = 0

        if initial_infected is None:
            if params.I0 > 0:
                seeds = self.rng_events.sample_distinct(n, params.I0)
            else:
                seeds = np.empty(0, dtype=np.int64)
        else:
            seeds = np.asarray(initial_infected, dtype=np.int64)
            if seeds.size != np.unique(seeds).size:
                raise ParameterError("initial infected nodes must be distinct")
            if seeds.size and (seeds.min() < 0 or seeds.max() >= n):
                raise ParameterError("initial infected nodes out of range")
        self._place_seeds(seeds)

    def _place_seeds(self, seeds):
        # seeds start infectious even under SEIR
        b = self.backend
        for s in seeds:
            s = int(s)
            self.comp[s] = COMP_I
            self.s_nbr[self.net.neighbors(s)] -= 1
        for s in seeds:
            s = int(s)
            self.counts[CNT_S] -= 1
            self.counts[CNT_I] += 1
            b.set_add(self.i_members, self.i_pos, self.counts, CNT_ISET, s)
            b.tree_set(self.tree, self.cap, s, self.rate[s] * self.s_nbr[s])
            k = int(self.counts[CNT_EV])
            self.ev_time[k] = 0.0
            self.ev_node[k] = s
            self.ev_code[k] = EV_SEED
            self.counts[CNT_EV] = k + 1
            self.inf_order[int(self.counts[CNT_INF])] = s
            self.counts[CNT_INF] += 1
            self.infection_day[s] = 0
        self._ev_done = int(self.counts[CNT_EV])

    # spec-facing accessors -------------------------------------------------

    @property
    def compartment(self):
        return self.comp

    @property
    def confirmed_unrecovered_count(self):
        return int(self.counts[CNT_CTD])

    @property
    def infector(self):
        return self.infector_arr

    @property
    def event_log(self):
        end = int(self.counts[CNT_EV])
        return [
            (float(self.ev_time[i]), int(self.ev_node[i]), EVENT_NAMES[self.ev_code[i]])
            for i in range(end)
        ]

    # engine driving --------------------------------------------------------

    def advance(self, t_end):
        p = self.params
        seir = 1 if p.model == MODEL_SEIR else 0
        return self.backend.advance_until(
            self.net.indptr,
            self.net.indices,
            self.comp,
            self.active,
            self.confirmed,
            self.s_nbr,
            self.rate,
            self.tree,
            self.cap,
            self.i_members,
            self.i_pos,
            self.e_members,
            self.e_pos,
            self.ev_time,
            self.ev_node,
            self.ev_code,
            self.inf_order,
            self.sec_count,
            self.infector_arr,
            self.counts,
            self.tnow,
            self.rng_events.state,
            float(p.gamma),
            float(p.eta),
            float(p.kappa if p.model == MODEL_SEIR else 0.0),
            seir,
            float(t_end),
        )

    def process_window(self, plan):
        """Handle events accumulated since the last boundary, in order.

        Counts fresh infections, returns recovered confirmed nodes to the
        random-testing pool, and performs the confirmation bookkeeping for
        hospitalisations (hospital cases are confirmed without spending a
        test and their contacts are notified with the usual P_c coins).
        """
        start = self._ev_done
        end = int(self.counts[CNT_EV])
        new_inf = 0
        hosp_confirms = 0
        reveal_day = self.day + 1
        for i in range(start, end):
            code = self.ev_code[i]
            node = int(self.ev_node[i])
            if code == EV_INFECT:
                new_inf += 1
                self.infection_day[node] = reveal_day
            elif code == EV_RECOVER:
                if self.confirmed[node]:
                    self.rt_pool.add(node)
            elif code == EV_HOSP:
                if not self.confirmed[node]:
                    self.confirmed[node] = 1
                    self.counts[CNT_CTD] += 1
                    self.rt_pool.discard(node)
                    self.queue.discard(node)
                    self.quarantined_cumulative += 1
                    self.quarantine_log.append((reveal_day, node))
                    hosp_confirms += 1
                    for nbr in self.net.neighbors(node):
                        if (
                            self.confirmed[nbr] == 0
                            and self.rng_tests.uniform() < plan.P_c
                        ):
                            self.queue.enqueue_or_touch(int(nbr), reveal_day)
        self._ev_done = end
        return new_inf, hosp_confirms


@dataclass
class DailyRecord:
    day: int
    S: int
    E: int
    I: int
    R: int
    H: int
    new_infections: int
    tests_used: int
    positives_found: int
    positive_rate: float
    quarantined_cumulative: int
    threat_level_actual: int = 1
    tests_rt: int = 0
    positives_rt: int = 0
    ctd: int = 0


@dataclass
class Trajectory:
    """Result of one run.

    daily holds one DailyRecord per simulated day (day 0 is the seeded
    initial condition; a trailing partial day is appended when the
    outbreak dies between boundaries). secondary_counts[i] is the number
    of onward infections caused by the i-th ever-infected node, in order
    of infection, seeds first.
    """

    daily: list
    final_infected_total: int
    days_to_end: int
    secondary_counts: np.ndarray
    infected_nodes: np.ndarray
    infection_days: np.ndarray
    infectors: np.ndarray
    final_compartments: np.ndarray
    n: int
    events: list = field(default_factory=list)


def _counts_row(state):
    c = state.counts
    return (
        int(c[CNT_S]),
        int(c[CNT_E]),
        int(c[CNT_I]),
        int(c[CNT_R]),
        int(c[CNT_H]),
    )


def run_epidemic(
    net,
    params,
    intervention=None,
    seed=0,
    *,
    initial_infected=None,
    backend=None,
    keep_events=False,
    max_days=None,
):
    """Simulate one outbreak to extinction and return its Trajectory."""
    plan = intervention if intervention is not None else NO_INTERVENTION
    state = SimulationState(
        net, params, seed, backend=backend, initial_infected=initial_infected
    )
    n = state.n

    records = []
    s, e, i, r, h = _counts_row(state)
    records.append(
        DailyRecord(
            day=0,
            S=s,
            E=e,
            I=i,
            R=r,
            H=h,
            new_infections=0,
            tests_used=0,
            positives_found=0,
            positive_rate=_metrics.positive_rate(0, 0, 0, n),
            quarantined_cumulative=0,
        )
    )

    while True:
        window_start = state._ev_done
        status = state.advance(state.day + 1)
        new_inf, hosp_confirms = state.process_window(plan)
        if status == ADV_EXTINCT:
            if state._ev_done > window_start:
                # events happened between the last boundary and extinction;
                # report them on a final partial day without any testing
                s, e, i, r, h = _counts_row(state)
                ctd_now = state.confirmed_unrecovered_count
                records.append(
                    DailyRecord(
                        day=state.day + 1,
                        S=s,
                        E=e,
                        I=i,
                        R=r,
                        H=h,
                        new_infections=new_inf,
                        tests_used=0,
                        positives_found=hosp_confirms,
                        positive_rate=_metrics.positive_rate(0, 0, ctd_now, n),
                        quarantined_cumulative=state.quarantined_cumulative,
                        ctd=ctd_now,
                    )
                )
            break
        state.day += 1
        ctd_start = state.confirmed_unrecovered_count
        outcome = daily_step(state, net, plan, state.rng_tests)
        s, e, i, r, h = _counts_row(state)
        records.append(
            DailyRecord(
                day=state.day,
                S=s,
                E=e,
                I=i,
                R=r,
                H=h,
                new_infections=new_inf,
                tests_used=outcome.tests_used,
                positives_found=outcome.positives + hosp_confirms,
                positive_rate=_metrics.positive_rate(
                    outcome.positives, outcome.tests_used, ctd_start, n
                ),
                quarantined_cumulative=state.quarantined_cumulative,
                tests_rt=outcome.tests_by_rt,
                positives_rt=outcome.positives_by_rt,
                ctd=ctd_start,
            )
        )
        if max_days is not None and state.day >= max_days:
            break

    return _finalize(state, records, keep_events)


def _finalize(state, records, keep_events):
    n = state.n
    total = int(state.counts[CNT_INF])
    order = state.inf_order[:total].astype(np.int64)
    traj = Trajectory(
        daily=records,
        final_infected_total=total,
        days_to_end=0,
        secondary_counts=state.sec_count[order].copy(),
        infected_nodes=order,
        infection_days=state.infection_day[order].copy(),
        infectors=state.infector_arr[order].copy(),
        final_compartments=state.comp.copy(),
        n=n,
        events=state.event_log if keep_events else [],
    )
    new_inf_series = [r.new_infections for r in records]
    levels = _metrics.threat_levels(new_inf_series, n).daily_level
    for rec, lev in zip(records, levels):
        rec.threat_level_actual = lev
    traj.days_to_end = _metrics.days_to_end(traj)
    return traj


def secondary_infection_counts(traj, first_m):
    """Onward-infection counts of the first first_m ever-infected nodes."""
    if first_m <= 0:
        raise ParameterError("first_m must be positive")
    m = min(first_m, traj.secondary_counts.shape[0])
    return [int(v) for v in traj.secondary_counts[:m]]


TRAJECTORY_COLUMNS = (
    "day",
    "S",
    "E",
    "I",
    "R",
    "H",
    "new_infections",
    "tests_used",
    "positives_found",
    "positive_rate",
    "quarantined_cumulative",
    "threat_level_actual",
    "tests_rt",
    "positives_rt",
)

INFECTION_COLUMNS = ("order", "node", "infection_day", "infector", "secondary_count")


def write_trajectory_csv(traj, path):
    """One row per day; see TRAJECTORY_COLUMNS for the layout."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(",".join(TRAJECTORY_COLUMNS) + "\n")
        for r in traj.daily:
            fh.write(
                f"{r.day},{r.S},{r.E},{r.I},{r.R},{r.H},{r.new_infections},"
                f"{r.tests_used},{r.positives_found},{r.positive_rate!r},"
                f"{r.quarantined_cumulative},{r.threat_level_actual},"
                f"{r.tests_rt},{r.positives_rt}\n"
            )
    return path


def infections_csv_path(trajectory_path):
    from pathlib import Path

    return Path(trajectory_path).with_suffix(".infections.csv")


def write_infections_csv(traj, path):
    """Per-node infection records in infection order, seeds first."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(",".join(INFECTION_COLUMNS) + "\n")
        for i in range(traj.infected_nodes.shape[0]):
            fh.write(
                f"{i},{int(traj.infected_nodes[i])},{int(traj.infection_days[i])},"
                f"{int(traj.infectors[i])},{int(traj.secondary_counts[i])}\n"
            )
    return path


def read_secondary_counts(path):
    """Secondary-infection counts from an infections CSV (or its sibling).

    Accepts either the per-node infections file or the daily trajectory
    file; in the latter case the sibling <stem>.infections.csv is read.
    """
    from pathlib import Path

    p = Path(path)
    if not p.name.endswith(".infections.csv"):
        sibling = infections_csv_path(p)
        if sibling.exists():
            p = sibling
    with open(p, "r", encoding="ascii") as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != INFECTION_COLUMNS:
            raise ParameterError(
                f"{p} does not look like an infections CSV (header {header})"
            )
        counts = [int(line.rsplit(",", 1)[1]) for line in fh if line.strip()]
    return counts
