"""Daily testing and contact-tracing strategies.

All testing happens at integer day boundaries while the continuous-time
dynamics are paused. A test reveals the true state of a node: exposed and
infectious nodes test positive, susceptible and recovered ones negative.
A positive test confirms the node (it is counted and excluded from random
testing until recovery), quarantines it with probability P_q, and notifies
each not-yet-confirmed neighbour independently with probability P_c, which
puts the neighbour on the tracing queue.

Strategies:

* ``none``: no tests at all.
* ``rt``: the whole budget goes to uniform random tests.
* ``fct``: queue processed oldest entry first.
* ``bct``: queue processed newest source-positive day first.
* ``cto``: like fct, but entries that truly carry the disease are moved to
  the front (an oracle peeks at the queued nodes' states).
* ``got``: the queue is rebuilt each day as exactly the currently infected,
  unconfirmed nodes, lowest id first.

Queue-based strategies cascade within a day: tests triggered by fresh
positives join the queue and can be consumed the same day while budget
remains. Leftover budget falls through to random testing.
"""

from dataclasses import dataclass

from .engine import CNT_CTD, COMP_E, COMP_I
from .errors import ParameterError

STRATEGY_NONE = "none"
STRATEGY_RT = "rt"
STRATEGY_FCT = "fct"
STRATEGY_BCT = "bct"
STRATEGY_CTO = "cto"
STRATEGY_GOT = "got"
STRATEGIES = (
    STRATEGY_NONE,
    STRATEGY_RT,
    STRATEGY_FCT,
    STRATEGY_BCT,
    STRATEGY_CTO,
    STRATEGY_GOT,
)
QUEUE_STRATEGIES = (STRATEGY_FCT, STRATEGY_BCT, STRATEGY_CTO, STRATEGY_GOT)
ORDERABLE_STRATEGIES = (STRATEGY_FCT, STRATEGY_BCT, STRATEGY_CTO)


def mixed_rt_share(daily_tests):
    """Random-testing slice of a mixed budget.

    Zero below 10 daily tests, then half the budget, capped at 100.
    """
    if daily_tests < 0:
        raise ParameterError("daily_tests must be non-negative")
    if daily_tests < 10:
        return 0
    return min(daily_tests // 2, 100)


@dataclass(frozen=True)
class InterventionPlan:
    """Immutable description of the daily testing policy.

    mixed_rt_share is a test count carved out of daily_tests and spent on
    random tests before the strategy runs; 0 disables mixing.
    """

    strategy: str = STRATEGY_NONE
    daily_tests: int = 0
    P_c: float = 1.0
    P_q: float = 1.0
    mixed_rt_share: int = 0

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ParameterError(
                f"unknown strategy {self.strategy!r}, expected one of {STRATEGIES}"
            )
        if self.daily_tests < 0:
            raise ParameterError("daily_tests must be non-negative")
        if not 0.0 <= self.P_c <= 1.0:
            raise ParameterError("P_c must be in [0, 1]")
        if not 0.0 <= self.P_q <= 1.0:
            raise ParameterError("P_q must be in [0, 1]")
        if not 0 <= self.mixed_rt_share <= max(self.daily_tests, 0):
            raise ParameterError("mixed_rt_share must be in [0, daily_tests]")

    @classmethod
    def make(cls, strategy, daily_tests, P_c=1.0, P_q=1.0, mixed=False):
        share = mixed_rt_share(daily_tests) if mixed else 0
        return cls(
            strategy=strategy,
            daily_tests=daily_tests,
            P_c=P_c,
            P_q=P_q,
            mixed_rt_share=share,
        )


NO_INTERVENTION = InterventionPlan()


@dataclass(slots=True)
class QueueEntry:
    node: int
    seq: int
    enqueue_day: int
    source_positive_day: int


class TracingQueue:
    """Pending contact notifications, at most one entry per node.

    Re-notifying a queued node refreshes its source_positive_day to the
    newest source day; its arrival order (seq) is kept.
    """

    def __init__(self):
        self._entries = {}
        self._seq = 0

    def __len__(self):
        return len(self._entries)

    def __contains__(self, node):
        return node in self._entries

    def entries(self):
        """Entries in arrival order."""
        return sorted(self._entries.values(), key=lambda e: e.seq)

    def nodes(self):
        return set(self._entries)

    def enqueue_or_touch(self, node, day):
        e = self._entries.get(node)
        if e is None:
            self._entries[node] = QueueEntry(node, self._seq, day, day)
            self._seq += 1
        elif day > e.source_positive_day:
            e.source_positive_day = day

    def discard(self, node):
        self._entries.pop(node, None)

    def clear(self):
        self._entries.clear()


def order_queue(queue, strategy, state):
    """Node test order for one pass over the queue.

    fct: arrival order. bct: newest source-positive day first, arrival
    order within a day. cto: entries that truly carry the disease first
    (the per-queue oracle), each group in arrival order.
    """
    if strategy not in ORDERABLE_STRATEGIES:
        raise ParameterError(f"strategy {strategy!r} has no queue ordering")
    entries = list(queue._entries.values())
    if strategy == STRATEGY_FCT:
        entries.sort(key=lambda e: e.seq)
    elif strategy == STRATEGY_BCT:
        entries.sort(key=lambda e: (-e.source_positive_day, e.seq))
    else:
        comp = state.comp
        entries.sort(
            key=lambda e: (
                0 if (comp[e.node] == COMP_E or comp[e.node] == COMP_I) else 1,
                e.seq,
            )
        )
    return [e.node for e in entries]


def got_refill(state):
    """Replace the queue with every currently infected unconfirmed node.

    Models an oracle that already knows who carries the disease; nodes are
    enqueued in ascending id order.
    """
    queue = state.queue
    queue.clear()
    comp = state.comp
    confirmed = state.confirmed
    for node in range(state.n):
        if confirmed[node] == 0 and (comp[node] == COMP_E or comp[node] == COMP_I):
            queue.enqueue_or_touch(node, state.day)
    return queue.entries()


def select_random_tests(state, budget, rng):
    """Distinct uniform picks from the random-testing pool.

    The pool holds everyone except confirmed not-yet-recovered nodes
    (hospitalised nodes never return). If the pool is smaller than the
    budget the whole pool is returned.
    """
    if budget <= 0:
        return []
    pool = state.rt_pool
    size = pool.size
    if size == 0:
        return []
    if size <= budget:
        return [int(x) for x in pool.members[:size]]
    idx = rng.sample_distinct(size, budget)
    return [int(pool.members[i]) for i in idx]


@dataclass
class TestOutcome:
    """Tally of one day of testing."""

    tests_used: int = 0
    positives: int = 0
    positives_by_rt: int = 0
    newly_quarantined: int = 0
    tests_by_rt: int = 0


def _confirm(state, node, plan, rng, outcome, enqueue_contacts=True):
    # order of the draws is part of the reproducibility contract:
    # quarantine coin first, then one contact coin per unconfirmed
    # neighbour in ascending id order
    state.confirmed[node] = 1
    state.counts[CNT_CTD] += 1
    state.rt_pool.discard(node)
    state.queue.discard(node)
    if rng.uniform() < plan.P_q:
        state.backend.deactivate_node(
            state.tree, state.cap, state.comp, state.active, node
        )
        state.quarantined_cumulative += 1
        state.quarantine_log.append((state.day, node))
        outcome.newly_quarantined += 1
    if not enqueue_contacts:
        return
    day = state.day
    for nbr in state.net.neighbors(node):
        if state.confirmed[nbr] == 0 and rng.uniform() < plan.P_c:
            state.queue.enqueue_or_touch(int(nbr), day)


def _test_node(state, node, plan, rng, outcome, via_rt, enqueue_contacts=True):
    outcome.tests_used += 1
    if via_rt:
        outcome.tests_by_rt += 1
    c = state.comp[node]
    if c == COMP_E or c == COMP_I:
        outcome.positives += 1
        if via_rt:
            outcome.positives_by_rt += 1
        _confirm(state, node, plan, rng, outcome, enqueue_contacts)


def _spend_random(state, plan, rng, outcome, budget, enqueue_contacts=True):
    for node in select_random_tests(state, budget, rng):
        _test_node(state, node, plan, rng, outcome, via_rt=True,
                   enqueue_contacts=enqueue_contacts)


def daily_step(state, net, plan, rng):
    """Spend one day's test budget against the paused epidemic state."""
    outcome = TestOutcome()
    if plan.strategy == STRATEGY_NONE or plan.daily_tests <= 0:
        return outcome

    budget = plan.daily_tests

    if plan.strategy == STRATEGY_RT:
        _spend_random(state, plan, rng, outcome, budget)
        return outcome

    got = plan.strategy == STRATEGY_GOT
    share = min(plan.mixed_rt_share, budget)
    if share > 0:
        _spend_random(state, plan, rng, outcome, share, enqueue_contacts=not got)
        budget -= outcome.tests_used

    queue = state.queue
    if got:
        # the global oracle already knows every carrier, so positives do
        # not enqueue their contacts; the queue is rebuilt from the truth
        got_refill(state)
    order_strategy = STRATEGY_FCT if got else plan.strategy

    # pass loop: each pass walks a snapshot of the queue order; positives
    # found mid-pass enqueue contacts, which the next pass picks up
    while budget > 0 and len(queue) > 0:
        progressed = False
        for node in order_queue(queue, order_strategy, state):
            if budget == 0:
                break
            if node not in queue:
                continue
            queue.discard(node)
            _test_node(
                state, node, plan, rng, outcome,
                via_rt=False, enqueue_contacts=not got,
            )
            budget -= 1
            progressed = True
        if not progressed:
            break

    if budget > 0:
        _spend_random(state, plan, rng, outcome, budget, enqueue_contacts=not got)
    return outcome
