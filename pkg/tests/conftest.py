"""Shared builders, backend fixtures, and the acceptance summary hook."""

import numpy as np
import pytest
from hypothesis import settings

from epitrace.engine import get_backend
from epitrace.netgen import KIND_SUPERSPREADING, ContactNetwork, _csr_from_edges

# numba compilation inside a @given body would trip the default deadline
settings.register_profile("suite", deadline=None)
settings.load_profile("suite")


def make_net(n, edges, kind=KIND_SUPERSPREADING, rates=None):
    """Network from an explicit edge list, bypassing the generators."""
    if edges:
        u = np.array([e[0] for e in edges], dtype=np.int64)
        v = np.array([e[1] for e in edges], dtype=np.int64)
    else:
        u = v = np.empty(0, dtype=np.int64)
    indptr, indices = _csr_from_edges(n, u, v)
    r = None if rates is None else np.asarray(rates, dtype=np.float64)
    return ContactNetwork(
        node_count=n, indptr=indptr, indices=indices, kind=kind,
        per_node_infection_rate=r,
    )


def complete_net(n):
    return make_net(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def star_net(leaves):
    # hub is node 0
    return make_net(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


@pytest.fixture(params=["numpy", "numba"])
def backend(request):
    return get_backend(request.param)


# acceptance reporting --------------------------------------------------------
#
# Acceptance tests call record_criterion once per criterion; the hook below
# prints one line per criterion after the normal pytest summary, so the
# verdicts stay visible even though test output is captured.

_CRITERIA = []


def record_criterion(name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    _CRITERIA.append((name, status, detail))


def record_criterion_skip(name, detail=""):
    _CRITERIA.append((name, "SKIP", detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, status, detail in _CRITERIA:
        line = f"[{status}] {name}"
        if detail:
            line += f" :: {detail}"
        terminalreporter.write_line(line)
