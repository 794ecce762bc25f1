"""Event-loop kernels shared by both execution backends.

Everything in this module is written against the numba nopython subset but
also runs unmodified under plain CPython + numpy. The numba backend compiles
a fresh copy of this module; the numpy backend calls these definitions
directly. Both paths then produce bit-identical event streams for the same
seed, which is what the cross-backend equivalence tests rely on.

Unsigned 64-bit arithmetic wraps. The explicit `& _MASK` keeps CPython
integer arithmetic in agreement with the machine semantics numba lowers to;
under numpy the operands stay np.uint64 throughout (callers suppress the
overflow warnings numpy emits on wrap).
"""

import math

# compartment codes
COMP_S = 0
COMP_E = 1
COMP_I = 2
COMP_R = 3
COMP_H = 4

# event codes
EV_SEED = 0
EV_INFECT = 1
EV_ACTIVATE = 2
EV_RECOVER = 3
EV_HOSP = 4

# slots of the shared int64 counts array
CNT_S = 0
CNT_E = 1
CNT_I = 2
CNT_R = 3
CNT_H = 4
CNT_ISET = 5
CNT_ESET = 6
CNT_INF = 7
CNT_CTD = 8
CNT_EV = 9
COUNTS_LEN = 10

# return codes of advance_until
ADV_BOUNDARY = 0
ADV_EXTINCT = 1

_MASK = 0xFFFFFFFFFFFFFFFF
_INV53 = 1.0 / 9007199254740992.0  # 2**-53


def seed_stream(state, seed):
    # splitmix64 expands one 64-bit seed into the four xoshiro256++ words
    z = seed
    for i in range(4):
        z = (z + 0x9E3779B97F4A7C15) & _MASK
        w = z
        w = ((w ^ (w >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        w = ((w ^ (w >> 27)) * 0x94D049BB133111EB) & _MASK
        state[i] = (w ^ (w >> 31)) & _MASK


def next_u64(state):
    # xoshiro256++
    s0 = state[0]
    s1 = state[1]
    s2 = state[2]
    s3 = state[3]
    x = (s0 + s3) & _MASK
    out = (((x << 23) | (x >> 41)) + s0) & _MASK
    t = (s1 << 17) & _MASK
    s2 = s2 ^ s0
    s3 = s3 ^ s1
    s1 = s1 ^ s2
    s0 = s0 ^ s3
    s2 = s2 ^ t
    s3 = ((s3 << 45) | (s3 >> 19)) & _MASK
    state[0] = s0
    state[1] = s1
    state[2] = s2
    state[3] = s3
    return out


def uniform01(state):
    # 53-bit mantissa draw in [0, 1)
    return float(next_u64(state) >> 11) * _INV53


def fill_uniforms(state, out):
    for i in range(out.shape[0]):
        out[i] = uniform01(state)


def rand_below(state, n):
    # uniform int in [0, n); the clamp guards the u == 1-ulp edge
    j = int(uniform01(state) * n)
    if j >= n:
        j = n - 1
    return j


def sample_distinct(state, n, k, out, scratch):
    # rejection sampling of k distinct values from [0, n), in draw order;
    # scratch must arrive zeroed and is zeroed again before returning
    c = 0
    while c < k:
        j = rand_below(state, n)
        if scratch[j] == 0:
            scratch[j] = 1
            out[c] = j
            c += 1
    for i in range(k):
        scratch[out[i]] = 0


def tree_set(tree, cap, i, w):
    # leaf write plus recompute of the ancestor path; parents are rebuilt
    # from their children, so repeated updates cannot accumulate drift
    node = cap + i
    tree[node] = w
    node >>= 1
    while node >= 1:
        tree[node] = tree[2 * node] + tree[2 * node + 1]
        node >>= 1


def tree_sample(tree, cap, r):
    # weighted leaf pick, requires 0 <= r < tree[1]
    node = 1
    while node < cap:
        left = node + node
        if r < tree[left]:
            node = left
        else:
            r = r - tree[left]
            node = left + 1
    if tree[node] <= 0.0:
        # float roundoff can land r past the last positive leaf
        for i in range(cap):
            if tree[cap + i] > 0.0:
                return i
    return node - cap


def set_add(members, pos, counts, slot, node):
    idx = counts[slot]
    members[idx] = node
    pos[node] = idx
    counts[slot] = idx + 1


def set_remove(members, pos, counts, slot, node):
    # swap-with-last removal; order of the two pos writes matters when the
    # removed element is the last one
    idx = counts[slot] - 1
    p = pos[node]
    moved = members[idx]
    members[p] = moved
    pos[moved] = p
    pos[node] = -1
    counts[slot] = idx


def deactivate_node(tree, cap, comp, active, node):
    # quarantine: the node stops transmitting but its own recovery clock
    # keeps running (it stays in the infectious set)
    active[node] = 0
    if comp[node] == COMP_I:
        tree_set(tree, cap, node, 0.0)


def advance_until(indptr, indices, comp, active, confirmed, s_nbr, rate,
                  tree, cap,
                  i_members, i_pos, e_members, e_pos,
                  ev_time, ev_node, ev_code,
                  inf_order, sec_count, infector,
                  counts, tnow, state,
                  gamma, eta, kappa, seir, t_end):
    """Run the continuous-time event loop from tnow[0] up to t_end.

    Returns ADV_BOUNDARY when t_end is reached (exponential clocks are
    memoryless, so resampling the waiting time on the next call is exact)
    or ADV_EXTINCT when the total event rate hits zero. Events are appended
    to the ev_* arrays; all bookkeeping arrays are updated in place.
    """
    t = tnow[0]
    while True:
        w_inf = tree[1]
        ni = counts[CNT_ISET]
        ne = counts[CNT_ESET]
        r_rec = gamma * ni
        r_hosp = eta * ni
        r_act = kappa * ne
        total = w_inf + r_rec + r_hosp + r_act
        if total <= 0.0:
            tnow[0] = t
            return ADV_EXTINCT
        u = uniform01(state)
        dt = -math.log(1.0 - u) / total
        if t + dt >= t_end:
            tnow[0] = t_end
            return ADV_BOUNDARY
        t = t + dt
        r = uniform01(state) * total
        if r < w_inf:
            # transmission: source by weight, target uniform among the
            # source's susceptible neighbours
            src = tree_sample(tree, cap, r)
            s = s_nbr[src]
            if s <= 0:
                tree_set(tree, cap, src, 0.0)
                continue
            pick = rand_below(state, s)
            tgt = -1
            c = 0
            for e in range(indptr[src], indptr[src + 1]):
                x = indices[e]
                if comp[x] == COMP_S:
                    if c == pick:
                        tgt = x
                        break
                    c += 1
            if tgt < 0:
                tree_set(tree, cap, src, rate[src] * s_nbr[src])
                continue
            if seir == 1:
                comp[tgt] = COMP_E
                counts[CNT_E] += 1
                set_add(e_members, e_pos, counts, CNT_ESET, tgt)
            else:
                comp[tgt] = COMP_I
                counts[CNT_I] += 1
            counts[CNT_S] -= 1
            infector[tgt] = src
            sec_count[src] += 1
            inf_order[counts[CNT_INF]] = tgt
            counts[CNT_INF] += 1
            for e in range(indptr[tgt], indptr[tgt + 1]):
                x = indices[e]
                s_nbr[x] -= 1
                if comp[x] == COMP_I and active[x] == 1:
                    tree_set(tree, cap, x, rate[x] * s_nbr[x])
            if seir == 0:
                set_add(i_members, i_pos, counts, CNT_ISET, tgt)
                if active[tgt] == 1:
                    tree_set(tree, cap, tgt, rate[tgt] * s_nbr[tgt])
            k = counts[CNT_EV]
            ev_time[k] = t
            ev_node[k] = tgt
            ev_code[k] = EV_INFECT
            counts[CNT_EV] = k + 1
        elif r < w_inf + r_rec:
            idx = rand_below(state, ni)
            node = i_members[idx]
            set_remove(i_members, i_pos, counts, CNT_ISET, node)
            comp[node] = COMP_R
            counts[CNT_I] -= 1
            counts[CNT_R] += 1
            tree_set(tree, cap, node, 0.0)
            if confirmed[node] == 1:
                counts[CNT_CTD] -= 1
            k = counts[CNT_EV]
            ev_time[k] = t
            ev_node[k] = node
            ev_code[k] = EV_RECOVER
            counts[CNT_EV] = k + 1
        elif r < w_inf + r_rec + r_hosp:
            # hospitalisation removes the node from circulation; the caller
            # handles confirmation and contact notification at the next
            # day boundary, in event order
            idx = rand_below(state, ni)
            node = i_members[idx]
            set_remove(i_members, i_pos, counts, CNT_ISET, node)
            comp[node] = COMP_H
            active[node] = 0
            counts[CNT_I] -= 1
            counts[CNT_H] += 1
            tree_set(tree, cap, node, 0.0)
            k = counts[CNT_EV]
            ev_time[k] = t
            ev_node[k] = node
            ev_code[k] = EV_HOSP
            counts[CNT_EV] = k + 1
        else:
            # latent period ends; the node starts transmitting unless it
            # was quarantined while exposed
            idx = rand_below(state, ne)
            node = e_members[idx]
            set_remove(e_members, e_pos, counts, CNT_ESET, node)
            comp[node] = COMP_I
            counts[CNT_E] -= 1
            counts[CNT_I] += 1
            set_add(i_members, i_pos, counts, CNT_ISET, node)
            if active[node] == 1:
                tree_set(tree, cap, node, rate[node] * s_nbr[node])
            k = counts[CNT_EV]
            ev_time[k] = t
            ev_node[k] = node
            ev_code[k] = EV_ACTIVATE
            counts[CNT_EV] = k + 1
