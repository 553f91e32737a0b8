# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled simulation kernels.

Mirrors chasescape._engine._pure operation for operation; see that module
for the semantics contract.  RNG draws go through numpy's C distribution
functions on the generator's bit-generator state, so compiled and pure runs
consume identical streams and produce bit-identical trajectories.
"""

import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.stdlib cimport free, malloc, realloc
from libc.string cimport memcpy, memset
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport (random_standard_exponential,
                                           random_standard_uniform)

cnp.import_array()

BACKEND_NAME = "compiled"

cdef enum:
    S = 0
    I = 1
    W = 2

STOP_ABSORBED = 0
STOP_BOUNDARY = 1
STOP_CAP = 2
KIND_INFECT = 0
KIND_PATCH = 1

cdef bitgen_t *_bitgen(object rng) except NULL:
    capsule = rng.bit_generator.capsule
    return <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")


cdef class GillespieEngine:
    """Chase-escape jump process on a fixed CSR graph; see the pure twin."""

    cdef const long long[::1] indptr
    cdef const int[::1] indices
    cdef const signed char[::1] state0
    cdef const unsigned char[::1] censor
    cdef const double[::1] displacement
    cdef const int[::1] inf0
    cdef const int[::1] kn0
    cdef const int[::1] active_s0
    cdef const int[::1] active_i0
    cdef signed char[::1] state
    cdef int[::1] inf_nbr
    cdef int[::1] kn_nbr
    cdef int[::1] active_s
    cdef int[::1] active_i
    cdef int[::1] pos_s
    cdef int[::1] pos_i
    cdef Py_ssize_t n_nodes
    cdef long long ever0
    cdef double max_disp0
    cdef bint censored0

    def __init__(self, indptr, indices, init_states, censor, displacement):
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int32)
        self.n_nodes = self.indptr.shape[0] - 1
        self.state0 = np.ascontiguousarray(init_states, dtype=np.int8)
        self.censor = np.ascontiguousarray(censor, dtype=np.uint8)
        self.displacement = np.ascontiguousarray(displacement, dtype=np.float64)

        cdef Py_ssize_t n = self.n_nodes
        inf0 = np.zeros(n, dtype=np.int32)
        kn0 = np.zeros(n, dtype=np.int32)
        cdef int[::1] inf0v = inf0
        cdef int[::1] kn0v = kn0
        cdef Py_ssize_t v, u, e
        cdef long long ever = 0
        cdef double md = 0.0
        cdef bint cens = False
        for v in range(n):
            if self.state0[v] == S:
                continue
            if self.state0[v] == I:
                ever += 1
                if self.displacement[v] > md:
                    md = self.displacement[v]
                if self.censor[v]:
                    cens = True
                for e in range(self.indptr[v], self.indptr[v + 1]):
                    u = self.indices[e]
                    if self.state0[u] == S:
                        inf0v[u] += 1
            else:
                for e in range(self.indptr[v], self.indptr[v + 1]):
                    u = self.indices[e]
                    if self.state0[u] == I:
                        kn0v[u] += 1
        self.inf0 = inf0
        self.kn0 = kn0
        self.ever0 = ever
        self.max_disp0 = md
        self.censored0 = cens

        active_s0 = np.flatnonzero(
            (np.asarray(self.state0) == S) & (np.asarray(inf0) > 0)).astype(np.int32)
        active_i0 = np.flatnonzero(
            (np.asarray(self.state0) == I) & (np.asarray(kn0) > 0)).astype(np.int32)
        self.active_s0 = active_s0
        self.active_i0 = active_i0

        self.state = np.empty(n, dtype=np.int8)
        self.inf_nbr = np.empty(n, dtype=np.int32)
        self.kn_nbr = np.empty(n, dtype=np.int32)
        self.active_s = np.empty(n, dtype=np.int32)
        self.active_i = np.empty(n, dtype=np.int32)
        self.pos_s = np.empty(n, dtype=np.int32)
        self.pos_i = np.empty(n, dtype=np.int32)

    def run(self, lambda_i, lambda_w, max_events, max_infected, max_time, rng,
            record=False):
        """Same contract and result tuple as the pure twin."""
        cdef double lam_i = lambda_i
        cdef double lam_w = lambda_w
        cdef long long cap_events = max_events
        cdef long long cap_infected = max_infected
        cdef double cap_time = max_time
        cdef bint rec = record
        cdef bitgen_t *bg = _bitgen(rng)

        cdef Py_ssize_t n = self.n_nodes
        if n > 0:
            memcpy(&self.state[0], &self.state0[0], n * sizeof(signed char))
            memcpy(&self.inf_nbr[0], &self.inf0[0], n * sizeof(int))
            memcpy(&self.kn_nbr[0], &self.kn0[0], n * sizeof(int))
            memset(&self.pos_s[0], 0xFF, n * sizeof(int))
            memset(&self.pos_i[0], 0xFF, n * sizeof(int))
        cdef Py_ssize_t len_s = self.active_s0.shape[0]
        cdef Py_ssize_t len_i = self.active_i0.shape[0]
        cdef Py_ssize_t kk, v, u, e, idx, pos
        cdef long long sum_inf = 0
        cdef long long sum_kn = 0
        for kk in range(len_s):
            v = self.active_s0[kk]
            self.active_s[kk] = v
            self.pos_s[v] = kk
            sum_inf += self.inf0[v]
        for kk in range(len_i):
            v = self.active_i0[kk]
            self.active_i[kk] = v
            self.pos_i[v] = kk
            sum_kn += self.kn0[v]

        cdef long long infected = 0
        for kk in range(n):
            if self.state0[kk] == I:
                infected += 1
        cdef long long ever = self.ever0
        cdef double max_disp = self.max_disp0
        cdef double clock = 0.0
        cdef long long events = 0
        cdef double extinction_time = float("nan")

        cdef long long traj_cap = 0
        cdef double[::1] times_rec = None
        cdef int[::1] nodes_rec = None
        cdef signed char[::1] kinds_rec = None
        times_arr = nodes_arr = kinds_arr = None
        if rec:
            traj_cap = cap_events if cap_events < 2 * n else 2 * n
            times_arr = np.empty(traj_cap, dtype=np.float64)
            nodes_arr = np.empty(traj_cap, dtype=np.int32)
            kinds_arr = np.empty(traj_cap, dtype=np.int8)
            times_rec = times_arr
            nodes_rec = nodes_arr
            kinds_rec = kinds_arr

        cdef int stop = STOP_CAP
        cdef double inf_total, total, ex, u_cat, u_node, t_next, target
        cdef long long acc
        cdef int kcnt, last
        cdef signed char su
        cdef int kind

        if self.censored0:
            stop = STOP_BOUNDARY
        else:
            while True:
                inf_total = lam_i * <double> sum_inf
                total = inf_total + lam_w * <double> sum_kn
                if total == 0.0:
                    stop = STOP_ABSORBED
                    break
                if events >= cap_events or ever >= cap_infected:
                    stop = STOP_CAP
                    break
                ex = random_standard_exponential(bg)
                u_cat = random_standard_uniform(bg)
                u_node = random_standard_uniform(bg)
                t_next = clock + ex / total
                if t_next > cap_time:
                    stop = STOP_CAP
                    break
                clock = t_next
                if u_cat * total < inf_total:
                    # select S node to infect
                    target = u_node * <double> sum_inf
                    acc = 0
                    idx = 0
                    while idx < len_s - 1:
                        acc += self.inf_nbr[self.active_s[idx]]
                        if target < <double> acc:
                            break
                        idx += 1
                    v = self.active_s[idx]
                    pos = self.pos_s[v]
                    last = self.active_s[len_s - 1]
                    self.active_s[pos] = last
                    self.pos_s[last] = <int> pos
                    self.pos_s[v] = -1
                    len_s -= 1
                    sum_inf -= self.inf_nbr[v]
                    self.state[v] = I
                    infected += 1
                    ever += 1
                    if self.displacement[v] > max_disp:
                        max_disp = self.displacement[v]
                    kcnt = 0
                    for e in range(self.indptr[v], self.indptr[v + 1]):
                        u = self.indices[e]
                        su = self.state[u]
                        if su == S:
                            self.inf_nbr[u] += 1
                            sum_inf += 1
                            if self.inf_nbr[u] == 1:
                                self.active_s[len_s] = <int> u
                                self.pos_s[u] = <int> len_s
                                len_s += 1
                        elif su == W:
                            kcnt += 1
                    self.kn_nbr[v] = kcnt
                    if kcnt > 0:
                        self.active_i[len_i] = <int> v
                        self.pos_i[v] = <int> len_i
                        len_i += 1
                        sum_kn += kcnt
                    kind = KIND_INFECT
                else:
                    # select I node to patch
                    target = u_node * <double> sum_kn
                    acc = 0
                    idx = 0
                    while idx < len_i - 1:
                        acc += self.kn_nbr[self.active_i[idx]]
                        if target < <double> acc:
                            break
                        idx += 1
                    v = self.active_i[idx]
                    pos = self.pos_i[v]
                    last = self.active_i[len_i - 1]
                    self.active_i[pos] = last
                    self.pos_i[last] = <int> pos
                    self.pos_i[v] = -1
                    len_i -= 1
                    sum_kn -= self.kn_nbr[v]
                    self.state[v] = W
                    infected -= 1
                    for e in range(self.indptr[v], self.indptr[v + 1]):
                        u = self.indices[e]
                        su = self.state[u]
                        if su == S:
                            self.inf_nbr[u] -= 1
                            sum_inf -= 1
                            if self.inf_nbr[u] == 0:
                                pos = self.pos_s[u]
                                last = self.active_s[len_s - 1]
                                self.active_s[pos] = last
                                self.pos_s[last] = <int> pos
                                self.pos_s[u] = -1
                                len_s -= 1
                        elif su == I:
                            self.kn_nbr[u] += 1
                            sum_kn += 1
                            if self.kn_nbr[u] == 1:
                                self.active_i[len_i] = <int> u
                                self.pos_i[u] = <int> len_i
                                len_i += 1
                    kind = KIND_PATCH
                events += 1
                if rec:
                    times_rec[events - 1] = t_next
                    nodes_rec[events - 1] = <int> v
                    kinds_rec[events - 1] = <signed char> kind
                if kind == KIND_PATCH:
                    if infected == 0:
                        extinction_time = clock
                elif self.censor[v]:
                    stop = STOP_BOUNDARY
                    break

        traj = None
        if rec:
            traj = (times_arr[:events].copy(), nodes_arr[:events].copy(),
                    kinds_arr[:events].copy())
        return (stop, int(events), clock, extinction_time, int(ever),
                max_disp, int(infected), traj)


cdef struct TreeBuf:
    signed char *state
    long long *parent
    int *depth
    long long *child0
    int *inf_nbr
    int *kn_nbr
    long long *active_s
    long long *active_i
    long long *pos_s
    long long *pos_i
    Py_ssize_t cap


cdef bint _tree_grow(TreeBuf *b, Py_ssize_t needed):
    cdef Py_ssize_t cap = b.cap
    while cap < needed:
        cap *= 2
    if cap == b.cap:
        return True
    b.state = <signed char *> realloc(b.state, cap * sizeof(signed char))
    b.parent = <long long *> realloc(b.parent, cap * sizeof(long long))
    b.depth = <int *> realloc(b.depth, cap * sizeof(int))
    b.child0 = <long long *> realloc(b.child0, cap * sizeof(long long))
    b.inf_nbr = <int *> realloc(b.inf_nbr, cap * sizeof(int))
    b.kn_nbr = <int *> realloc(b.kn_nbr, cap * sizeof(int))
    b.active_s = <long long *> realloc(b.active_s, cap * sizeof(long long))
    b.active_i = <long long *> realloc(b.active_i, cap * sizeof(long long))
    b.pos_s = <long long *> realloc(b.pos_s, cap * sizeof(long long))
    b.pos_i = <long long *> realloc(b.pos_i, cap * sizeof(long long))
    b.cap = cap
    if (b.state == NULL or b.parent == NULL or b.depth == NULL
            or b.child0 == NULL or b.inf_nbr == NULL or b.kn_nbr == NULL
            or b.active_s == NULL or b.active_i == NULL or b.pos_s == NULL
            or b.pos_i == NULL):
        return False
    return True


cdef class TreeEngine:
    """Chase-escape on the rooted k-ary tree; see the pure twin for rules."""

    cdef public int k
    cdef public int depth_cap
    cdef public long long node_budget
    cdef public bint root_knight

    def __init__(self, k, depth_cap, node_budget, root_knight):
        self.k = k
        self.depth_cap = depth_cap
        self.node_budget = node_budget
        self.root_knight = root_knight

    def run(self, lambda_i, lambda_w, max_events, max_time, rng, record=False):
        cdef double lam_i = lambda_i
        cdef double lam_w = lambda_w
        cdef long long cap_events = max_events
        cdef double cap_time = max_time
        cdef bint rec = record
        cdef bitgen_t *bg = _bitgen(rng)
        cdef int k = self.k

        cdef TreeBuf b
        b.cap = 1024
        while b.cap < 1 + k:
            b.cap *= 2
        b.state = <signed char *> malloc(b.cap * sizeof(signed char))
        b.parent = <long long *> malloc(b.cap * sizeof(long long))
        b.depth = <int *> malloc(b.cap * sizeof(int))
        b.child0 = <long long *> malloc(b.cap * sizeof(long long))
        b.inf_nbr = <int *> malloc(b.cap * sizeof(int))
        b.kn_nbr = <int *> malloc(b.cap * sizeof(int))
        b.active_s = <long long *> malloc(b.cap * sizeof(long long))
        b.active_i = <long long *> malloc(b.cap * sizeof(long long))
        b.pos_s = <long long *> malloc(b.cap * sizeof(long long))
        b.pos_i = <long long *> malloc(b.cap * sizeof(long long))
        if (b.state == NULL or b.parent == NULL or b.depth == NULL
                or b.child0 == NULL or b.inf_nbr == NULL or b.kn_nbr == NULL
                or b.active_s == NULL or b.active_i == NULL or b.pos_s == NULL
                or b.pos_i == NULL):
            free(b.state); free(b.parent); free(b.depth); free(b.child0)
            free(b.inf_nbr); free(b.kn_nbr); free(b.active_s); free(b.active_i)
            free(b.pos_s); free(b.pos_i)
            raise MemoryError()

        times_rec = [] if rec else None
        nodes_rec = [] if rec else None
        kinds_rec = [] if rec else None

        cdef Py_ssize_t n_slots, len_s, len_i, idx, pos
        cdef long long sum_inf, sum_kn, infected, ever, events
        cdef long long v, u, last, c, c0, p, first
        cdef int j
        cdef double max_depth, clock, extinction_time
        cdef double inf_total, total, ex, u_cat, u_node, t_next, target
        cdef long long acc
        cdef int kcnt, kind
        cdef signed char sc
        cdef int stop = STOP_CAP

        try:
            b.state[0] = I
            b.parent[0] = -1
            b.depth[0] = 0
            b.child0[0] = -1
            b.inf_nbr[0] = 0
            b.kn_nbr[0] = 1 if self.root_knight else 0
            b.pos_s[0] = -1
            b.pos_i[0] = -1
            n_slots = 1
            len_s = 0
            len_i = 0
            sum_inf = 0
            sum_kn = 0
            if self.root_knight:
                b.active_i[0] = 0
                b.pos_i[0] = 0
                len_i = 1
                sum_kn = 1
            infected = 1
            ever = 1
            max_depth = 0.0
            clock = 0.0
            events = 0
            extinction_time = float("nan")

            # materialize root's children
            if n_slots + k > self.node_budget:
                stop = STOP_CAP
            else:
                first = n_slots
                for j in range(k):
                    c = first + j
                    b.state[c] = S
                    b.parent[c] = 0
                    b.depth[c] = 1
                    b.child0[c] = -1
                    b.inf_nbr[c] = 1
                    b.kn_nbr[c] = 0
                    b.pos_s[c] = len_s
                    b.pos_i[c] = -1
                    b.active_s[len_s] = c
                    len_s += 1
                    sum_inf += 1
                b.child0[0] = first
                n_slots += k

                while True:
                    inf_total = lam_i * <double> sum_inf
                    total = inf_total + lam_w * <double> sum_kn
                    if total == 0.0:
                        stop = STOP_ABSORBED
                        break
                    if events >= cap_events:
                        stop = STOP_CAP
                        break
                    ex = random_standard_exponential(bg)
                    u_cat = random_standard_uniform(bg)
                    u_node = random_standard_uniform(bg)
                    t_next = clock + ex / total
                    if t_next > cap_time:
                        stop = STOP_CAP
                        break
                    clock = t_next
                    if u_cat * total < inf_total:
                        target = u_node * <double> sum_inf
                        acc = 0
                        idx = 0
                        while idx < len_s - 1:
                            acc += b.inf_nbr[b.active_s[idx]]
                            if target < <double> acc:
                                break
                            idx += 1
                        v = b.active_s[idx]
                        pos = b.pos_s[v]
                        last = b.active_s[len_s - 1]
                        b.active_s[pos] = last
                        b.pos_s[last] = pos
                        b.pos_s[v] = -1
                        len_s -= 1
                        sum_inf -= b.inf_nbr[v]
                        b.state[v] = I
                        infected += 1
                        ever += 1
                        if b.depth[v] > max_depth:
                            max_depth = <double> b.depth[v]
                        p = b.parent[v]
                        kcnt = 1 if (p >= 0 and b.state[p] == W) else 0
                        b.kn_nbr[v] = kcnt
                        if kcnt > 0:
                            b.active_i[len_i] = v
                            b.pos_i[v] = len_i
                            len_i += 1
                            sum_kn += kcnt
                        events += 1
                        if rec:
                            times_rec.append(t_next)
                            nodes_rec.append(v)
                            kinds_rec.append(KIND_INFECT)
                        if b.depth[v] >= self.depth_cap:
                            stop = STOP_BOUNDARY
                            break
                        # materialize children of v
                        if n_slots + k > self.node_budget:
                            stop = STOP_CAP
                            break
                        if not _tree_grow(&b, n_slots + k):
                            raise MemoryError()
                        first = n_slots
                        for j in range(k):
                            c = first + j
                            b.state[c] = S
                            b.parent[c] = v
                            b.depth[c] = b.depth[v] + 1
                            b.child0[c] = -1
                            b.inf_nbr[c] = 1
                            b.kn_nbr[c] = 0
                            b.pos_s[c] = len_s
                            b.pos_i[c] = -1
                            b.active_s[len_s] = c
                            len_s += 1
                            sum_inf += 1
                        b.child0[v] = first
                        n_slots += k
                    else:
                        target = u_node * <double> sum_kn
                        acc = 0
                        idx = 0
                        while idx < len_i - 1:
                            acc += b.kn_nbr[b.active_i[idx]]
                            if target < <double> acc:
                                break
                            idx += 1
                        v = b.active_i[idx]
                        pos = b.pos_i[v]
                        last = b.active_i[len_i - 1]
                        b.active_i[pos] = last
                        b.pos_i[last] = pos
                        b.pos_i[v] = -1
                        len_i -= 1
                        sum_kn -= b.kn_nbr[v]
                        b.state[v] = W
                        infected -= 1
                        c0 = b.child0[v]
                        if c0 >= 0:
                            for j in range(k):
                                c = c0 + j
                                sc = b.state[c]
                                if sc == S:
                                    b.inf_nbr[c] -= 1
                                    sum_inf -= 1
                                    if b.inf_nbr[c] == 0:
                                        pos = b.pos_s[c]
                                        last = b.active_s[len_s - 1]
                                        b.active_s[pos] = last
                                        b.pos_s[last] = pos
                                        b.pos_s[c] = -1
                                        len_s -= 1
                                elif sc == I:
                                    b.kn_nbr[c] += 1
                                    sum_kn += 1
                                    if b.kn_nbr[c] == 1:
                                        b.active_i[len_i] = c
                                        b.pos_i[c] = len_i
                                        len_i += 1
                        events += 1
                        if rec:
                            times_rec.append(t_next)
                            nodes_rec.append(v)
                            kinds_rec.append(KIND_PATCH)
                        if infected == 0:
                            extinction_time = clock
        finally:
            free(b.state)
            free(b.parent)
            free(b.depth)
            free(b.child0)
            free(b.inf_nbr)
            free(b.kn_nbr)
            free(b.active_s)
            free(b.active_i)
            free(b.pos_s)
            free(b.pos_i)

        traj = None
        if rec:
            traj = (np.asarray(times_rec, dtype=np.float64),
                    np.asarray(nodes_rec, dtype=np.int32),
                    np.asarray(kinds_rec, dtype=np.int8))
        return (stop, int(events), clock, extinction_time, int(ever),
                max_depth, int(infected), traj)


def gilbert_pairs(positions, side, radius, torus):
    """Edge list (i < j) at connection radius; uniform-grid cell list."""
    pos_arr = np.ascontiguousarray(positions, dtype=np.float64)
    cdef const double[:, ::1] pos = pos_arr
    cdef Py_ssize_t n = pos.shape[0]
    cdef int d = <int> pos.shape[1]
    cdef double L = side
    cdef double r = radius
    cdef bint wrap = torus
    if n == 0:
        return (np.empty(0, dtype=np.int32), np.empty(0, dtype=np.int32))
    if d > 8:
        raise ValueError("grid neighbor search supports dim <= 8")

    cdef long long ncell = <long long> (L / r)
    if ncell < 1:
        ncell = 1
    cdef long long total_cells = 1
    cdef int ax
    while True:
        total_cells = 1
        for ax in range(d):
            total_cells *= ncell
            if total_cells > 4_000_000:
                break
        if total_cells <= 4_000_000 or ncell == 1:
            break
        ncell //= 2
        if ncell < 1:
            ncell = 1
    cdef double cell_side = L / ncell

    # cell coordinates and flat ids
    flat_arr = np.empty(n, dtype=np.int64)
    cdef long long[::1] flat = flat_arr
    cdef Py_ssize_t i2, jdx
    cdef long long cc, fid
    for i2 in range(n):
        fid = 0
        for ax in range(d):
            cc = <long long> ((pos[i2, ax] + L / 2.0) / cell_side)
            if cc < 0:
                cc = 0
            elif cc >= ncell:
                cc = ncell - 1
            fid = fid * ncell + cc
        flat[i2] = fid

    # counting sort of points by cell (dict-free: sort indices by flat id)
    order_arr = np.argsort(flat_arr, kind="stable").astype(np.int64)
    sorted_flat_arr = flat_arr[order_arr]
    cdef long long[::1] order = order_arr
    cdef long long[::1] sorted_flat = sorted_flat_arr

    # pair output buffers
    cdef Py_ssize_t cap_pairs = 4 * n + 16
    cdef int *pi = <int *> malloc(cap_pairs * sizeof(int))
    cdef int *pj = <int *> malloc(cap_pairs * sizeof(int))
    cdef Py_ssize_t n_pairs = 0

    cdef long long base[8]
    cdef long long nb[8]
    cdef long long cand_ids[6561]  # 3^8
    cdef int off[8]
    cdef Py_ssize_t n_cand, ci, lo, hi, mid, t
    cdef long long nid, rem, i_pt, j_pt
    cdef double d2, r2 = r * r, delta
    cdef bint skip, dup
    cdef int *pi_new
    cdef int *pj_new

    try:
        for i_pt in range(n):
            # reconstruct cell coords of i_pt
            rem = flat[i_pt]
            for ax in range(d - 1, -1, -1):
                base[ax] = rem % ncell
                rem //= ncell
            # enumerate neighbor cells (odometer over {-1,0,1}^d)
            for ax in range(d):
                off[ax] = -1
            n_cand = 0
            while True:
                skip = False
                for ax in range(d):
                    nb[ax] = base[ax] + off[ax]
                    if wrap:
                        if nb[ax] < 0:
                            nb[ax] += ncell
                        elif nb[ax] >= ncell:
                            nb[ax] -= ncell
                    elif nb[ax] < 0 or nb[ax] >= ncell:
                        skip = True
                        break
                if not skip:
                    nid = 0
                    for ax in range(d):
                        nid = nid * ncell + nb[ax]
                    dup = False
                    for ci in range(n_cand):
                        if cand_ids[ci] == nid:
                            dup = True
                            break
                    if not dup:
                        cand_ids[n_cand] = nid
                        n_cand += 1
                # odometer increment
                ax = d - 1
                while ax >= 0:
                    off[ax] += 1
                    if off[ax] <= 1:
                        break
                    off[ax] = -1
                    ax -= 1
                if ax < 0:
                    break
            # scan candidate cells
            for ci in range(n_cand):
                nid = cand_ids[ci]
                # binary search for the cell's slice in sorted_flat
                lo = 0
                hi = n
                while lo < hi:
                    mid = (lo + hi) // 2
                    if sorted_flat[mid] < nid:
                        lo = mid + 1
                    else:
                        hi = mid
                t = lo
                while t < n and sorted_flat[t] == nid:
                    j_pt = order[t]
                    t += 1
                    if j_pt <= i_pt:
                        continue
                    d2 = 0.0
                    for ax in range(d):
                        delta = pos[i_pt, ax] - pos[j_pt, ax]
                        if wrap:
                            if delta > L / 2.0:
                                delta -= L
                            elif delta < -L / 2.0:
                                delta += L
                        d2 += delta * delta
                    if d2 <= r2:
                        if n_pairs == cap_pairs:
                            cap_pairs *= 2
                            pi_new = <int *> realloc(pi, cap_pairs * sizeof(int))
                            pj_new = <int *> realloc(pj, cap_pairs * sizeof(int))
                            if pi_new == NULL or pj_new == NULL:
                                raise MemoryError()
                            pi = pi_new
                            pj = pj_new
                        pi[n_pairs] = <int> i_pt
                        pj[n_pairs] = <int> j_pt
                        n_pairs += 1
        out_i = np.empty(n_pairs, dtype=np.int32)
        out_j = np.empty(n_pairs, dtype=np.int32)
        cdef_view_copy(out_i, pi, n_pairs)
        cdef_view_copy(out_j, pj, n_pairs)
    finally:
        free(pi)
        free(pj)
    return (out_i, out_j)


cdef void cdef_view_copy(object arr, int *src, Py_ssize_t count):
    cdef int[::1] view = arr
    if count > 0:
        memcpy(&view[0], src, count * sizeof(int))


def component_bfs(indptr, indices, start, allowed):
    """Nodes reachable from start through allowed nodes, in BFS order."""
    cdef const long long[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef const int[::1] idx = np.ascontiguousarray(indices, dtype=np.int32)
    cdef const unsigned char[::1] ok = np.ascontiguousarray(allowed, dtype=np.uint8)
    cdef Py_ssize_t n = ip.shape[0] - 1
    visited_arr = np.zeros(n, dtype=np.uint8)
    queue_arr = np.empty(n, dtype=np.int32)
    cdef unsigned char[::1] visited = visited_arr
    cdef int[::1] queue = queue_arr
    cdef Py_ssize_t head = 0, tail = 1
    cdef Py_ssize_t v, u, e
    queue[0] = start
    visited[start] = 1
    while head < tail:
        v = queue[head]
        head += 1
        for e in range(ip[v], ip[v + 1]):
            u = idx[e]
            if visited[u] == 0 and ok[u] != 0:
                visited[u] = 1
                queue[tail] = <int> u
                tail += 1
    return queue_arr[:tail].copy()
