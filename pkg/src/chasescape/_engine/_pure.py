"""Pure-Python reference implementation of the simulation kernels.

This module mirrors ``chasescape._engine._speedups`` operation for
operation.  Both backends consume the same draw sequence from a numpy
Generator (one standard exponential plus two uniforms per attempted event),
perform float arithmetic in the same order, and walk active-node lists with
the same swap-remove bookkeeping.  A run is therefore bit-for-bit
reproducible across backends given equal generator states; the test suite
asserts this on recorded trajectories.

Kept deliberately loop-explicit: this is the readable semantics reference
and the fallback when the compiled extension is unavailable.
"""

import numpy as np

BACKEND_NAME = "pure"

# Node states.
S, I, W = 0, 1, 2

# Stop reasons.
STOP_ABSORBED, STOP_BOUNDARY, STOP_CAP = 0, 1, 2

# Event kinds.
KIND_INFECT, KIND_PATCH = 0, 1


def _initial_counts(indptr, indices, states):
    """Per-node reaction counts implied by an initial state vector.

    inf_nbr[v] = number of infected neighbors, maintained for S nodes;
    kn_nbr[v] = number of white-knight neighbors, maintained for I nodes.
    """
    n = len(states)
    inf_nbr = np.zeros(n, dtype=np.int32)
    kn_nbr = np.zeros(n, dtype=np.int32)
    for v in range(n):
        if states[v] == S:
            continue
        lo, hi = indptr[v], indptr[v + 1]
        if states[v] == I:
            for u in indices[lo:hi]:
                if states[u] == S:
                    inf_nbr[u] += 1
        else:  # W
            for u in indices[lo:hi]:
                if states[u] == I:
                    kn_nbr[u] += 1
    return inf_nbr, kn_nbr


class GillespieEngine:
    """Chase-escape jump process on a fixed graph in CSR form.

    Construction precomputes the pristine state (reaction counts, active
    lists); each ``run`` works on fresh copies, so one engine instance can
    execute many replications of the same initial condition.

    Rates: an S node becomes I at lambda_i times its infected-neighbor
    count; an I node becomes W at lambda_w times its knight-neighbor count.
    Event selection is the direct method: first infect-vs-patch by aggregate
    rate, then the node by a cumulative walk over the active list.
    """

    def __init__(self, indptr, indices, init_states, censor, displacement):
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int32)
        self.n_nodes = len(self.indptr) - 1
        self.state0 = np.ascontiguousarray(init_states, dtype=np.int8)
        self.censor = np.ascontiguousarray(censor, dtype=np.uint8)
        self.displacement = np.ascontiguousarray(displacement, dtype=np.float64)
        self.inf0, self.kn0 = _initial_counts(self.indptr, self.indices, self.state0)
        self.active_s0 = np.flatnonzero((self.state0 == S) & (self.inf0 > 0)).astype(np.int32)
        self.active_i0 = np.flatnonzero((self.state0 == I) & (self.kn0 > 0)).astype(np.int32)
        self.ever0 = int(np.count_nonzero(self.state0 == I))
        infected = self.state0 == I
        self.max_disp0 = float(self.displacement[infected].max()) if infected.any() else 0.0
        self.censored0 = bool((self.censor[infected] != 0).any())

    def run(self, lambda_i, lambda_w, max_events, max_infected, max_time, rng,
            record=False):
        """Run to absorption, boundary hit, or cap.

        Returns (stop_code, events, clock, extinction_time, ever_infected,
        max_displacement, final_infected, trajectory); extinction_time is
        nan unless the infected count hit zero, trajectory is None unless
        ``record`` (then a (times, nodes, kinds) triple).
        """
        run = _RunState(self, lambda_i, lambda_w)
        cap_traj = min(int(max_events), 2 * self.n_nodes) if record else 0
        times = np.empty(cap_traj, dtype=np.float64) if record else None
        nodes = np.empty(cap_traj, dtype=np.int32) if record else None
        kinds = np.empty(cap_traj, dtype=np.int8) if record else None

        stop = STOP_CAP
        if self.censored0:
            stop = STOP_BOUNDARY
        else:
            while True:
                total = run.total_rate()
                if total == 0.0:
                    stop = STOP_ABSORBED
                    break
                if run.events >= max_events or run.ever >= max_infected:
                    stop = STOP_CAP
                    break
                event = run.attempt(rng, max_time)
                if event is None:
                    stop = STOP_CAP
                    break
                if record:
                    k = run.events - 1
                    times[k] = event[0]
                    nodes[k] = event[1]
                    kinds[k] = event[2]
                if event[2] == KIND_INFECT and self.censor[event[1]]:
                    stop = STOP_BOUNDARY
                    break

        traj = None
        if record:
            traj = (times[:run.events].copy(), nodes[:run.events].copy(),
                    kinds[:run.events].copy())
        return (stop, run.events, run.clock, run.extinction_time, run.ever,
                run.max_disp, run.infected, traj)


class _RunState:
    """Mutable per-run state; also the backing store for stepping."""

    def __init__(self, engine, lambda_i, lambda_w):
        self.engine = engine
        self.lambda_i = float(lambda_i)
        self.lambda_w = float(lambda_w)
        self.state = engine.state0.copy()
        self.inf_nbr = engine.inf0.copy()
        self.kn_nbr = engine.kn0.copy()
        n = engine.n_nodes
        self.active_s = np.empty(n, dtype=np.int32)
        self.active_i = np.empty(n, dtype=np.int32)
        self.pos_s = np.full(n, -1, dtype=np.int32)
        self.pos_i = np.full(n, -1, dtype=np.int32)
        self.len_s = len(engine.active_s0)
        self.len_i = len(engine.active_i0)
        self.active_s[:self.len_s] = engine.active_s0
        self.active_i[:self.len_i] = engine.active_i0
        for k in range(self.len_s):
            self.pos_s[self.active_s[k]] = k
        for k in range(self.len_i):
            self.pos_i[self.active_i[k]] = k
        self.sum_inf = int(self.inf_nbr[engine.active_s0].sum())
        self.sum_kn = int(self.kn_nbr[engine.active_i0].sum())
        self.infected = int(np.count_nonzero(self.state == I))
        self.ever = engine.ever0
        self.max_disp = engine.max_disp0
        self.clock = 0.0
        self.events = 0
        self.extinction_time = float("nan")

    def total_rate(self):
        return self.lambda_i * float(self.sum_inf) + self.lambda_w * float(self.sum_kn)

    def attempt(self, rng, max_time):
        """Draw one event; apply it unless its time exceeds max_time.

        Returns (time, node, kind) or None when the time horizon was hit
        (draws consumed, state untouched).  Caller guarantees a positive
        total rate.
        """
        inf_total = self.lambda_i * float(self.sum_inf)
        total = inf_total + self.lambda_w * float(self.sum_kn)
        e = float(rng.standard_exponential())
        u_cat = float(rng.random())
        u_node = float(rng.random())
        t_next = self.clock + e / total
        if t_next > max_time:
            return None
        self.clock = t_next
        if u_cat * total < inf_total:
            v = self._select(self.active_s, self.len_s, self.inf_nbr,
                             float(self.sum_inf), u_node)
            self._apply_infect(v)
            kind = KIND_INFECT
        else:
            v = self._select(self.active_i, self.len_i, self.kn_nbr,
                             float(self.sum_kn), u_node)
            self._apply_patch(v)
            kind = KIND_PATCH
        self.events += 1
        return (t_next, v, kind)

    @staticmethod
    def _select(active, length, counts, total, u):
        # Cumulative walk; clamps to the last element on float roundoff.
        target = u * total
        acc = 0
        idx = 0
        while idx < length - 1:
            acc += counts[active[idx]]
            if target < acc:
                break
            idx += 1
        return int(active[idx])

    def _remove_s(self, v):
        pos = self.pos_s[v]
        last = self.active_s[self.len_s - 1]
        self.active_s[pos] = last
        self.pos_s[last] = pos
        self.pos_s[v] = -1
        self.len_s -= 1

    def _remove_i(self, v):
        pos = self.pos_i[v]
        last = self.active_i[self.len_i - 1]
        self.active_i[pos] = last
        self.pos_i[last] = pos
        self.pos_i[v] = -1
        self.len_i -= 1

    def _add_s(self, v):
        self.active_s[self.len_s] = v
        self.pos_s[v] = self.len_s
        self.len_s += 1

    def _add_i(self, v):
        self.active_i[self.len_i] = v
        self.pos_i[v] = self.len_i
        self.len_i += 1

    def _apply_infect(self, v):
        eng = self.engine
        self._remove_s(v)
        self.sum_inf -= int(self.inf_nbr[v])
        self.state[v] = I
        self.infected += 1
        self.ever += 1
        if eng.displacement[v] > self.max_disp:
            self.max_disp = float(eng.displacement[v])
        kcnt = 0
        lo, hi = eng.indptr[v], eng.indptr[v + 1]
        for u in eng.indices[lo:hi]:
            su = self.state[u]
            if su == S:
                self.inf_nbr[u] += 1
                self.sum_inf += 1
                if self.inf_nbr[u] == 1:
                    self._add_s(u)
            elif su == W:
                kcnt += 1
        self.kn_nbr[v] = kcnt
        if kcnt > 0:
            self._add_i(v)
            self.sum_kn += kcnt

    def _apply_patch(self, v):
        eng = self.engine
        self._remove_i(v)
        self.sum_kn -= int(self.kn_nbr[v])
        self.state[v] = W
        self.infected -= 1
        lo, hi = eng.indptr[v], eng.indptr[v + 1]
        for u in eng.indices[lo:hi]:
            su = self.state[u]
            if su == S:
                self.inf_nbr[u] -= 1
                self.sum_inf -= 1
                if self.inf_nbr[u] == 0:
                    self._remove_s(u)
            elif su == I:
                self.kn_nbr[u] += 1
                self.sum_kn += 1
                if self.kn_nbr[u] == 1:
                    self._add_i(u)
        if self.infected == 0:
            self.extinction_time = self.clock


def make_stepper(engine, lambda_i, lambda_w):
    """Expose the per-event run state for instrumented stepping.

    Only the pure backend supports stepping; the compiled backend executes
    whole runs.
    """
    return _RunState(engine, lambda_i, lambda_w)


class TreeEngine:
    """Chase-escape on the rooted k-ary tree with lazy materialization.

    Slot 0 is the root, initially infected.  With ``root_knight`` a white
    knight sits above the root on a single extra edge; it never transitions,
    so it is represented only through the root's knight-neighbor count.
    Children spring into existence (as S, with one infected neighbor) when
    their parent becomes infected, except at depth_cap, which acts as the
    censoring boundary.  Exceeding node_budget stops the run with a cap.
    """

    def __init__(self, k, depth_cap, node_budget, root_knight):
        self.k = int(k)
        self.depth_cap = int(depth_cap)
        self.node_budget = int(node_budget)
        self.root_knight = bool(root_knight)

    def run(self, lambda_i, lambda_w, max_events, max_time, rng, record=False):
        """Same result tuple as GillespieEngine.run (displacement = depth)."""
        k = self.k
        lambda_i = float(lambda_i)
        lambda_w = float(lambda_w)

        # Growable per-slot storage; plain lists keep the fallback simple.
        state = [I]
        parent = [-1]
        depth = [0]
        child0 = [-1]
        inf_nbr = [0]
        kn_nbr = [1 if self.root_knight else 0]
        pos_s = [-1]
        pos_i = [-1]
        active_s = []
        active_i = []
        sum_inf = 0
        sum_kn = 0
        if self.root_knight:
            active_i.append(0)
            pos_i[0] = 0
            sum_kn = 1

        infected = 1
        ever = 1
        max_depth = 0.0
        clock = 0.0
        events = 0
        extinction_time = float("nan")

        times_rec = [] if record else None
        nodes_rec = [] if record else None
        kinds_rec = [] if record else None

        def materialize(v):
            """Create the k children of v; returns False on budget overrun."""
            nonlocal sum_inf
            if len(state) + k > self.node_budget:
                return False
            first = len(state)
            child_depth = depth[v] + 1
            for j in range(k):
                c = first + j
                state.append(S)
                parent.append(v)
                depth.append(child_depth)
                child0.append(-1)
                inf_nbr.append(1)
                kn_nbr.append(0)
                pos_s.append(len(active_s))
                pos_i.append(-1)
                active_s.append(c)
                sum_inf += 1
            child0[v] = first
            return True

        def drop_s(v):
            p = pos_s[v]
            last = active_s[-1]
            active_s[p] = last
            pos_s[last] = p
            active_s.pop()
            pos_s[v] = -1

        def drop_i(v):
            p = pos_i[v]
            last = active_i[-1]
            active_i[p] = last
            pos_i[last] = p
            active_i.pop()
            pos_i[v] = -1

        stop = STOP_CAP
        if materialize(0):
            while True:
                inf_total = lambda_i * float(sum_inf)
                total = inf_total + lambda_w * float(sum_kn)
                if total == 0.0:
                    stop = STOP_ABSORBED
                    break
                if events >= max_events:
                    stop = STOP_CAP
                    break
                e = float(rng.standard_exponential())
                u_cat = float(rng.random())
                u_node = float(rng.random())
                t_next = clock + e / total
                if t_next > max_time:
                    stop = STOP_CAP
                    break
                clock = t_next
                if u_cat * total < inf_total:
                    # infect: cumulative walk over active_s
                    target = u_node * float(sum_inf)
                    acc = 0
                    idx = 0
                    while idx < len(active_s) - 1:
                        acc += inf_nbr[active_s[idx]]
                        if target < acc:
                            break
                        idx += 1
                    v = active_s[idx]
                    drop_s(v)
                    sum_inf -= inf_nbr[v]
                    state[v] = I
                    infected += 1
                    ever += 1
                    if depth[v] > max_depth:
                        max_depth = float(depth[v])
                    # children are still unmaterialized, so the only
                    # possibly-white neighbor is the parent
                    p = parent[v]
                    kcnt = 1 if (p >= 0 and state[p] == W) else 0
                    kn_nbr[v] = kcnt
                    if kcnt > 0:
                        pos_i[v] = len(active_i)
                        active_i.append(v)
                        sum_kn += kcnt
                    events += 1
                    if record:
                        times_rec.append(t_next)
                        nodes_rec.append(v)
                        kinds_rec.append(KIND_INFECT)
                    if depth[v] >= self.depth_cap:
                        stop = STOP_BOUNDARY
                        break
                    if not materialize(v):
                        stop = STOP_CAP
                        break
                else:
                    # patch: cumulative walk over active_i
                    target = u_node * float(sum_kn)
                    acc = 0
                    idx = 0
                    while idx < len(active_i) - 1:
                        acc += kn_nbr[active_i[idx]]
                        if target < acc:
                            break
                        idx += 1
                    v = active_i[idx]
                    drop_i(v)
                    sum_kn -= kn_nbr[v]
                    state[v] = W
                    infected -= 1
                    c0 = child0[v]
                    if c0 >= 0:
                        for c in range(c0, c0 + k):
                            sc = state[c]
                            if sc == S:
                                inf_nbr[c] -= 1
                                sum_inf -= 1
                                if inf_nbr[c] == 0:
                                    drop_s(c)
                            elif sc == I:
                                kn_nbr[c] += 1
                                sum_kn += 1
                                if kn_nbr[c] == 1:
                                    pos_i[c] = len(active_i)
                                    active_i.append(c)
                    events += 1
                    if record:
                        times_rec.append(t_next)
                        nodes_rec.append(v)
                        kinds_rec.append(KIND_PATCH)
                    if infected == 0:
                        extinction_time = clock

        traj = None
        if record:
            traj = (np.asarray(times_rec, dtype=np.float64),
                    np.asarray(nodes_rec, dtype=np.int32),
                    np.asarray(kinds_rec, dtype=np.int8))
        return (stop, events, clock, extinction_time, ever, max_depth,
                infected, traj)


def gilbert_pairs(positions, side, radius, torus):
    """Edge list (i < j) of the Gilbert graph at connection radius ``radius``.

    Uniform-grid cell list with cell side >= radius, so candidate neighbors
    live in the 3^d adjacent cells (wrapping on the torus).  Returns a pair
    of int32 arrays; order is unspecified, callers canonicalize.
    """
    pos = np.asarray(positions, dtype=np.float64)
    n, d = pos.shape
    if n == 0:
        return (np.empty(0, dtype=np.int32), np.empty(0, dtype=np.int32))
    ncell = max(1, int(side / radius))
    # keep the flat cell table small for very large side/radius ratios
    while ncell**d > 4_000_000:
        ncell //= 2
    ncell = max(1, ncell)
    cell_side = side / ncell
    coords = np.floor((pos + side / 2.0) / cell_side).astype(np.int64)
    np.clip(coords, 0, ncell - 1, out=coords)
    flat = coords[:, 0].copy()
    for axis in range(1, d):
        flat *= ncell
        flat += coords[:, axis]
    order = np.argsort(flat, kind="stable").astype(np.int64)
    sorted_flat = flat[order]
    starts = {}
    uniq, first, counts = np.unique(sorted_flat, return_index=True, return_counts=True)
    for cid, f, c in zip(uniq.tolist(), first.tolist(), counts.tolist()):
        starts[cid] = (f, f + c)

    offsets = np.array(np.meshgrid(*([np.arange(-1, 2)] * d), indexing="ij"))
    offsets = offsets.reshape(d, -1).T
    r2 = radius * radius
    out_i = []
    out_j = []
    for cid, (f, t) in starts.items():
        # reconstruct the cell's coordinates from its flat id
        base = np.empty(d, dtype=np.int64)
        rem = cid
        for axis in range(d - 1, -1, -1):
            base[axis] = rem % ncell
            rem //= ncell
        members = order[f:t]
        cand_slices = []
        seen = set()
        for off in offsets:
            nb = base + off
            if torus:
                nb = nb % ncell
            elif (nb < 0).any() or (nb >= ncell).any():
                continue
            nid = 0
            for axis in range(d):
                nid = nid * ncell + nb[axis]
            nid = int(nid)
            if nid in seen:
                continue
            seen.add(nid)
            if nid in starts:
                cf, ct = starts[nid]
                cand_slices.append(order[cf:ct])
        cand = np.concatenate(cand_slices)
        delta = pos[members][:, None, :] - pos[cand][None, :, :]
        if torus:
            delta -= side * np.round(delta / side)
        d2 = np.einsum("ijk,ijk->ij", delta, delta)
        mask = (d2 <= r2) & (cand[None, :] > members[:, None])
        ii, jj = np.nonzero(mask)
        out_i.append(members[ii])
        out_j.append(cand[jj])
    if not out_i:
        return (np.empty(0, dtype=np.int32), np.empty(0, dtype=np.int32))
    return (np.concatenate(out_i).astype(np.int32),
            np.concatenate(out_j).astype(np.int32))


def component_bfs(indptr, indices, start, allowed):
    """Nodes reachable from ``start`` through allowed nodes, in BFS order.

    ``allowed`` is a uint8 mask; ``start`` must itself be allowed.
    """
    n = len(indptr) - 1
    visited = np.zeros(n, dtype=np.uint8)
    queue = np.empty(n, dtype=np.int32)
    queue[0] = start
    visited[start] = 1
    head, tail = 0, 1
    while head < tail:
        v = queue[head]
        head += 1
        for u in indices[indptr[v]:indptr[v + 1]]:
            if not visited[u] and allowed[u]:
                visited[u] = 1
                queue[tail] = u
                tail += 1
    return queue[:tail].copy()
