"""Synthetic contact network construction.

Three network kinds are supported:

* ``superspreading``: degrees are drawn so that the epidemic offspring
  counts follow a negative binomial with dispersion ``k``, then wired with
  a configuration model (stub matching, self-loops and parallel edges
  erased).
* ``erdos_renyi``: homogeneous random graph matched to the same mean
  offspring count.
* ``gamma_infectiousness``: Erdos-Renyi topology plus a per-node
  transmission rate drawn from a Gamma distribution with shape ``k``, i.e.
  heterogeneity lives on nodes instead of edges.

Networks are immutable once built; quarantine state lives in the epidemic
layer, not here.
"""

import logging
from dataclasses import dataclass
from io import StringIO
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.stats import nbinom

from .errors import ParameterError

log = logging.getLogger(__name__)

KIND_SUPERSPREADING = "superspreading"
KIND_ER = "erdos_renyi"
KIND_GAMMA = "gamma_infectiousness"
NETWORK_KINDS = (KIND_SUPERSPREADING, KIND_ER, KIND_GAMMA)

DEFAULT_TAIL_MASS = 1e-10


def infection_probability(beta, gamma):
    """Probability that an infectious contact transmits before recovery.

    Both the transmission clock (rate beta) and the recovery clock (rate
    gamma) are exponential, so the transmission wins with probability
    beta / (beta + gamma).
    """
    if beta <= 0:
        raise ParameterError("beta must be positive")
    if gamma < 0:
        raise ParameterError("gamma must be non-negative")
    return beta / (beta + gamma)


@dataclass(frozen=True, eq=False)
class DegreeDistribution:
    """Degree law for superspreading networks.

    support[i] holds a degree value (starting at 1), pmf[i] its
    probability. params records the (k, R0, beta, gamma) the law was
    derived from; truncation_degree is the largest degree kept.
    """

    support: np.ndarray
    pmf: np.ndarray
    mean_degree: float
    params: dict
    truncation_degree: int

    @property
    def probabilities(self):
        """Mapping degree -> probability."""
        return {int(d): float(p) for d, p in zip(self.support, self.pmf)}


def derive_degree_distribution(k, R0, beta, gamma, tail_mass=DEFAULT_TAIL_MASS):
    """Degree distribution whose offspring counts are NB(k, mean R0/T).

    A node of degree i was reached through one of its i edges, so the
    chance of drawing degree i is proportional to q(i-1)/i where q is the
    negative binomial pmf of the remaining-contact count. The q tail is
    truncated once it falls below tail_mass and the law renormalised.
    """
    if k <= 0:
        raise ParameterError("dispersion k must be positive")
    if R0 <= 0:
        raise ParameterError("R0 must be positive")
    if not 0 < tail_mass <= 1e-6:
        raise ParameterError("tail_mass must be in (0, 1e-6]")
    T = infection_probability(beta, gamma)
    mean_offspring = R0 / T
    p = k / (k + mean_offspring)

    jmax = int(nbinom.isf(tail_mass, k, p))
    while nbinom.sf(jmax, k, p) >= tail_mass:
        jmax += 1
    while jmax > 0 and nbinom.sf(jmax - 1, k, p) < tail_mass:
        jmax -= 1

    q = nbinom.pmf(np.arange(jmax + 1), k, p)
    support = np.arange(1, jmax + 2, dtype=np.int64)
    weights = q / support
    z = weights.sum()
    pmf = weights / z
    mean_degree = float(support @ pmf)
    return DegreeDistribution(
        support=support,
        pmf=pmf,
        mean_degree=mean_degree,
        params={"k": k, "R0": R0, "beta": beta, "gamma": gamma},
        truncation_degree=int(jmax + 1),
    )


def expected_clustering_coefficient(dist, N):
    """Expected clustering of a configuration-model graph on N nodes."""
    if N < 2:
        raise ParameterError("N must be at least 2")
    m1 = float(dist.support @ dist.pmf)
    m2 = float((dist.support.astype(np.float64) ** 2) @ dist.pmf)
    return _clustering_from_moments(m1, m2, N)


def _clustering_from_moments(m1, m2, N):
    if m1 <= 0:
        return 0.0
    return (m2 - m1) ** 2 / (N * m1**3)


@dataclass(eq=False)
class ContactNetwork:
    """Immutable simple undirected graph in CSR form.

    indices holds the concatenated neighbour lists, each sorted
    ascending; indptr[i]:indptr[i+1] delimits node i's slice.
    per_node_infection_rate is only set for gamma_infectiousness networks.
    degree_clamp_count records how many sampled degrees were cut to N-1.
    """

    node_count: int
    indptr: np.ndarray
    indices: np.ndarray
    kind: str
    per_node_infection_rate: np.ndarray = None
    degree_clamp_count: int = 0

    def neighbors(self, node):
        return self.indices[self.indptr[node] : self.indptr[node + 1]]

    @property
    def adjacency(self):
        return [self.neighbors(i) for i in range(self.node_count)]

    @property
    def edge_count(self):
        return self.indices.shape[0] // 2

    def degrees(self):
        return np.diff(self.indptr)


def _csr_from_edges(n, u, v):
    # symmetrise, then sort rows (and neighbours within each row)
    src = np.concatenate([u, v])
    dst = np.concatenate([v, u])
    order = np.lexsort((dst, src))
    src = src[order]
    dst = dst[order]
    counts = np.bincount(src, minlength=n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return indptr, dst.astype(np.int32)


def _sample_degrees(dist, n, rng):
    cum = np.cumsum(dist.pmf)
    u = rng.random(n)
    idx = np.searchsorted(cum, u, side="right")
    idx = np.minimum(idx, dist.support.shape[0] - 1)
    return dist.support[idx].copy()


def generate_superspreading_network(dist, N, seed):
    """Configuration-model graph with degrees drawn from dist."""
    if N < 2:
        raise ParameterError("N must be at least 2")
    rng = np.random.default_rng(int(seed))
    degrees = _sample_degrees(dist, N, rng)

    over = degrees > N - 1
    clamp_count = int(over.sum())
    if clamp_count:
        degrees[over] = N - 1
        log.info("clamped %d sampled degrees to N-1=%d", clamp_count, N - 1)

    if int(degrees.sum()) % 2 == 1:
        # stub count must be even; bump a uniformly chosen node that has room
        while True:
            i = int(rng.integers(N))
            if degrees[i] < N - 1:
                degrees[i] += 1
                break

    stubs = np.repeat(np.arange(N, dtype=np.int64), degrees)
    rng.shuffle(stubs)
    a = stubs[0::2]
    b = stubs[1::2]
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    keep = lo != hi
    codes = np.unique(lo[keep] * np.int64(N) + hi[keep])
    u = codes // N
    v = codes % N
    indptr, indices = _csr_from_edges(N, u, v)
    return ContactNetwork(
        node_count=N,
        indptr=indptr,
        indices=indices,
        kind=KIND_SUPERSPREADING,
        degree_clamp_count=clamp_count,
    )


def _sample_er_edges(rng, N, mean_degree):
    # edge count is Binomial(N choose 2, p); edges are then a uniform
    # subset of the pair lattice, drawn via rank unranking
    p = mean_degree / (N - 1)
    if p >= 1:
        raise ParameterError("requested mean degree must be below N-1")
    total_pairs = N * (N - 1) // 2
    m = int(rng.binomial(total_pairs, p)) if p > 0 else 0
    if m == 0:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty

    chosen = np.empty(0, dtype=np.int64)
    need = m
    while chosen.shape[0] < m:
        batch = rng.integers(0, total_pairs, size=need + need // 20 + 16)
        both = np.concatenate([chosen, batch])
        _, first_idx = np.unique(both, return_index=True)
        chosen = both[np.sort(first_idx)]
        need = m - chosen.shape[0]
    t = np.sort(chosen[:m])

    # base[i] = number of pairs (u, v) with u < i; exact integer arithmetic
    i_arr = np.arange(N, dtype=np.int64)
    base = i_arr * (2 * N - i_arr - 1) // 2
    u = np.searchsorted(base, t, side="right") - 1
    v = t - base[u] + u + 1
    return u, v


def generate_er_network(R0, beta, gamma, N, seed):
    """Erdos-Renyi graph with mean degree R0 / infection_probability.

    R0 = 0 degenerates to the empty graph.
    """
    if N < 2:
        raise ParameterError("N must be at least 2")
    if R0 < 0:
        raise ParameterError("R0 must be non-negative")
    T = infection_probability(beta, gamma)
    rng = np.random.default_rng(int(seed))
    u, v = _sample_er_edges(rng, N, R0 / T)
    indptr, indices = _csr_from_edges(N, u, v)
    return ContactNetwork(
        node_count=N, indptr=indptr, indices=indices, kind=KIND_ER
    )


def generate_gamma_infectiousness_network(k, R0, beta, gamma, N, seed):
    """Erdos-Renyi topology plus Gamma(k, beta/k) per-node transmission rates."""
    if N < 2:
        raise ParameterError("N must be at least 2")
    if k <= 0:
        raise ParameterError("shape k must be positive")
    if R0 < 0:
        raise ParameterError("R0 must be non-negative")
    T = infection_probability(beta, gamma)
    rng = np.random.default_rng(int(seed))
    u, v = _sample_er_edges(rng, N, R0 / T)
    indptr, indices = _csr_from_edges(N, u, v)
    rates = rng.gamma(shape=k, scale=beta / k, size=N)
    return ContactNetwork(
        node_count=N,
        indptr=indptr,
        indices=indices,
        kind=KIND_GAMMA,
        per_node_infection_rate=rates,
    )


@dataclass(eq=False)
class NetworkStats:
    empirical_mean_degree: float
    degree_histogram: dict
    clustering_coefficient_expected: float
    component_sizes: list


def connected_component_labels(net):
    """Per-node component label array (arbitrary but deterministic labels)."""
    n = net.node_count
    mat = sparse.csr_matrix(
        (np.ones(net.indices.shape[0], dtype=np.int8), net.indices, net.indptr),
        shape=(n, n),
    )
    _, labels = csgraph.connected_components(mat, directed=False)
    return labels


def network_stats(net):
    """Summary statistics computed from the realised graph."""
    degrees = net.degrees()
    n = net.node_count
    mean_deg = float(degrees.mean()) if n else 0.0
    hist_counts = np.bincount(degrees)
    histogram = {int(d): int(c) for d, c in enumerate(hist_counts) if c > 0}
    m1 = mean_deg
    m2 = float((degrees.astype(np.float64) ** 2).mean()) if n else 0.0
    clustering = _clustering_from_moments(m1, m2, n)
    labels = connected_component_labels(net)
    sizes = np.bincount(labels)
    component_sizes = sorted((int(s) for s in sizes), reverse=True)
    return NetworkStats(
        empirical_mean_degree=mean_deg,
        degree_histogram=histogram,
        clustering_coefficient_expected=clustering,
        component_sizes=component_sizes,
    )


def save_network(net, path):
    """Write the edge list; gamma rates go to a sibling .rates file.

    Format: header line "N <node_count> kind=<kind>", then one "u v" line
    per edge with u < v, ordered by (u, v). Loading and saving again
    reproduces the file byte for byte.
    """
    path = Path(path)
    degrees = net.degrees()
    rows = np.repeat(np.arange(net.node_count, dtype=np.int64), degrees)
    cols = net.indices.astype(np.int64)
    mask = rows < cols
    u = rows[mask]
    v = cols[mask]
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"N {net.node_count} kind={net.kind}\n")
        fh.writelines(f"{a} {b}\n" for a, b in zip(u.tolist(), v.tolist()))
    if net.per_node_infection_rate is not None:
        rates_path = path.with_suffix(".rates")
        with open(rates_path, "w", encoding="ascii") as fh:
            fh.writelines(repr(float(r)) + "\n" for r in net.per_node_infection_rate)
    return path


def load_network(path):
    """Read a network written by save_network."""
    path = Path(path)
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 3 or header[0] != "N" or not header[2].startswith("kind="):
            raise ParameterError(f"malformed network header in {path}")
        n = int(header[1])
        kind = header[2][len("kind=") :]
        if kind not in NETWORK_KINDS:
            raise ParameterError(f"unknown network kind {kind!r}")
        body = fh.read()
    if body.strip():
        pairs = np.loadtxt(StringIO(body), dtype=np.int64, ndmin=2)
        u, v = pairs[:, 0], pairs[:, 1]
    else:
        u = v = np.empty(0, dtype=np.int64)
    indptr, indices = _csr_from_edges(n, u, v)
    rates = None
    rates_path = path.with_suffix(".rates")
    if rates_path.exists():
        rates = np.loadtxt(rates_path, dtype=np.float64, ndmin=1)
        if rates.shape[0] != n:
            raise ParameterError("rates file length does not match node count")
    if kind == KIND_GAMMA and rates is None:
        raise ParameterError(f"missing rates file {rates_path} for {kind} network")
    return ContactNetwork(
        node_count=n,
        indptr=indptr,
        indices=indices,
        kind=kind,
        per_node_infection_rate=rates,
    )
