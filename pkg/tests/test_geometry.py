import itertools
import json
import math

import numpy as np
import pytest
import scipy.stats

import chasescape as cs
from chasescape import _engine
from chasescape.errors import ParameterError, UnsupportedTopologyError

from conftest import make_graph


def brute_force_adjacency(positions, side, radius, torus):
    n = len(positions)
    delta = positions[:, None, :] - positions[None, :, :]
    if torus:
        delta = delta - side * np.round(delta / side)
    d2 = (delta**2).sum(axis=-1)
    adj = (d2 <= radius * radius)
    np.fill_diagonal(adj, False)
    return adj


class TestBallVolume:
    def test_low_dimensions(self):
        assert cs.ball_volume(1, 1.0) == pytest.approx(2.0)
        assert cs.ball_volume(2, 1.0) == pytest.approx(math.pi)
        assert cs.ball_volume(3, 1.0) == pytest.approx(4.0 * math.pi / 3.0)
        assert cs.ball_volume(4, 1.0) == pytest.approx(math.pi**2 / 2.0)
        assert cs.ball_volume(5, 1.0) == pytest.approx(8.0 * math.pi**2 / 15.0)

    def test_radius_scaling(self):
        assert cs.ball_volume(2, 2.0) == pytest.approx(4.0 * math.pi)
        assert cs.ball_volume(3, 0.5) == pytest.approx(0.5**3 * 4.0 * math.pi / 3.0)

    def test_invalid(self):
        with pytest.raises(ParameterError):
            cs.ball_volume(0, 1.0)


class TestSamplePPP:
    def test_zero_intensity_empty(self, rng):
        box = cs.BoxSpec(dim=2, side=10.0)
        assert len(cs.sample_ppp(0.0, box, rng)) == 0

    def test_mean_count(self):
        # intensity 3, d=2, L=10: mean 300 within 3 SE over 10^4 seeds
        box = cs.BoxSpec(dim=2, side=10.0)
        seeds = 10_000
        total = sum(len(cs.sample_ppp(3.0, box, cs.derive_stream(101, i)))
                    for i in range(seeds))
        mean = total / seeds
        se = math.sqrt(300.0 / seeds)
        assert abs(mean - 300.0) <= 3 * se

    def test_count_distribution_chi_square(self):
        # intensity 1, d=1, L=2: counts ~ Poisson(2) at the 1% level
        box = cs.BoxSpec(dim=1, side=2.0)
        counts = np.array([len(cs.sample_ppp(1.0, box, cs.derive_stream(102, i)))
                           for i in range(10_000)])
        kmax = 8  # lump the tail
        observed = np.bincount(np.minimum(counts, kmax), minlength=kmax + 1)
        pmf = np.array([math.exp(-2.0) * 2.0**k / math.factorial(k) for k in range(kmax)])
        expected = np.append(pmf, 1.0 - pmf.sum()) * len(counts)
        stat, pvalue = scipy.stats.chisquare(observed, expected)
        assert pvalue >= 0.01

    def test_variance_over_mean(self):
        box = cs.BoxSpec(dim=2, side=10.0)
        counts = np.array([len(cs.sample_ppp(1.0, box, cs.derive_stream(103, i)))
                           for i in range(10_000)])
        ratio = counts.var() / counts.mean()
        assert 0.9 <= ratio <= 1.1

    def test_positions_inside_box(self, rng):
        box = cs.BoxSpec(dim=3, side=4.0)
        pts = cs.sample_ppp(2.0, box, rng)
        assert np.abs(pts).max() <= 2.0

    def test_deterministic_given_stream(self):
        box = cs.BoxSpec(dim=2, side=5.0)
        a = cs.sample_ppp(1.5, box, np.random.default_rng(5))
        b = cs.sample_ppp(1.5, box, np.random.default_rng(5))
        assert (a == b).all()

    def test_invalid_intensity(self, rng):
        box = cs.BoxSpec(dim=2, side=5.0)
        for bad in (-1.0, math.inf, math.nan):
            with pytest.raises(ParameterError):
                cs.sample_ppp(bad, box, rng)

    def test_invalid_box(self):
        with pytest.raises(ParameterError):
            cs.BoxSpec(dim=2, side=-1.0)
        with pytest.raises(ParameterError):
            cs.BoxSpec(dim=0, side=1.0)
        with pytest.raises(ParameterError):
            cs.BoxSpec(dim=2, side=math.inf)


class TestThinMarks:
    def test_p_zero_no_knights(self, rng):
        box = cs.BoxSpec(dim=2, side=10.0)
        config = cs.thin_marks(box, cs.sample_ppp(1.0, box, rng), 0.0, rng)
        assert len(config.knight_indices) == 0

    def test_p_one_only_origin_susceptible(self, rng):
        box = cs.BoxSpec(dim=2, side=10.0)
        config = cs.thin_marks(box, cs.sample_ppp(1.0, box, rng), 1.0, rng)
        assert list(config.susceptible_indices) == [config.origin_index]

    def test_binomial_mean(self):
        box = cs.BoxSpec(dim=2, side=10.0)
        points = np.zeros((1000, 2))
        seeds = 1000
        total = sum(len(cs.thin_marks(box, points, 0.3, cs.derive_stream(104, i)).knight_indices)
                    for i in range(seeds))
        mean = total / seeds
        se = math.sqrt(1000 * 0.3 * 0.7 / seeds)
        assert abs(mean - 300.0) <= 3 * se

    def test_invalid_probability(self, rng):
        box = cs.BoxSpec(dim=2, side=10.0)
        with pytest.raises(ParameterError):
            cs.thin_marks(box, np.zeros((3, 2)), 1.5, rng)

    def test_origin_always_susceptible(self, rng):
        box = cs.BoxSpec(dim=2, side=10.0)
        config = cs.thin_marks(box, cs.sample_ppp(2.0, box, rng), 1.0, rng)
        assert config.marks[config.origin_index] == cs.Mark.SUSCEPTIBLE.value
        assert (config.positions[config.origin_index] == 0).all()


class TestBuildGilbert:
    def test_two_nodes_below_radius(self):
        g = make_graph([[0.0, 0.0], [0.9, 0.0]],
                       [cs.Mark.SUSCEPTIBLE] * 2, radius=1.0)
        assert g.n_edges == 1

    def test_two_nodes_above_radius(self):
        g = make_graph([[0.0, 0.0], [1.1, 0.0]],
                       [cs.Mark.SUSCEPTIBLE] * 2, radius=1.0)
        assert g.n_edges == 0

    def test_closed_ball_at_exact_distance(self):
        g = make_graph([[0.0, 0.0], [1.0, 0.0]],
                       [cs.Mark.SUSCEPTIBLE] * 2, radius=1.0)
        assert g.n_edges == 1

    @pytest.mark.parametrize("seed,n,dim,torus", [
        (0, 500, 2, False), (1, 500, 2, True), (2, 200, 3, False),
        (3, 200, 3, True), (4, 80, 1, False), (5, 1000, 2, False),
    ])
    def test_matches_brute_force(self, seed, n, dim, torus):
        r = np.random.default_rng(seed)
        side = 10.0
        radius = 1.0
        pts = r.uniform(-side / 2, side / 2, (n - 1, dim))
        box = cs.BoxSpec(dim=dim, side=side,
                         topology=cs.Topology.TORUS if torus else cs.Topology.BOUNDED)
        config = cs.thin_marks(box, pts, 0.3, r)
        g = cs.build_gilbert(config, radius)
        adj = brute_force_adjacency(config.positions, side, radius, torus)
        for v in range(n):
            assert sorted(g.neighbors(v).tolist()) == sorted(np.flatnonzero(adj[v]).tolist())

    def test_degenerate_small_box_full_scan(self):
        # side < radius collapses the grid to one cell
        r = np.random.default_rng(7)
        pts = r.uniform(-0.4, 0.4, (30, 2))
        box = cs.BoxSpec(dim=2, side=0.8)
        config = cs.thin_marks(box, pts, 0.0, r)
        g = cs.build_gilbert(config, 1.5)
        assert g.n_edges == 31 * 30 // 2  # complete graph

    def test_torus_translation_invariant_degrees(self):
        side = 8.0
        r = np.random.default_rng(11)
        pts = r.uniform(-side / 2, side / 2, (300, 2))
        shift = np.array([1.7, -2.9])
        shifted = (pts + shift + side / 2) % side - side / 2
        for backend in (_engine.gilbert_pairs, _engine.pure.gilbert_pairs):
            base = backend(pts, side, 1.0, True)
            moved = backend(shifted, side, 1.0, True)
            deg0 = np.bincount(np.concatenate([base[0], base[1]]), minlength=300)
            deg1 = np.bincount(np.concatenate([moved[0], moved[1]]), minlength=300)
            assert (deg0 == deg1).all()

    def test_torus_radius_limit(self, rng):
        box = cs.BoxSpec(dim=2, side=4.0, topology=cs.Topology.TORUS)
        config = cs.thin_marks(box, cs.sample_ppp(0.5, box, rng), 0.0, rng)
        with pytest.raises(ParameterError):
            cs.build_gilbert(config, 2.5)

    def test_invalid_radius(self, rng):
        box = cs.BoxSpec(dim=2, side=4.0)
        config = cs.thin_marks(box, cs.sample_ppp(0.5, box, rng), 0.0, rng)
        for bad in (0.0, -1.0, math.nan):
            with pytest.raises(ParameterError):
                cs.build_gilbert(config, bad)

    def test_adjacency_immutable(self, rng):
        box = cs.BoxSpec(dim=2, side=6.0)
        config = cs.thin_marks(box, cs.sample_ppp(1.0, box, rng), 0.0, rng)
        g = cs.build_gilbert(config, 1.0)
        with pytest.raises(ValueError):
            g.indices[0] = 0


class TestClusterOf:
    def test_isolated_origin(self):
        g = make_graph([[0.0, 0.0], [5.0, 5.0]], [cs.Mark.SUSCEPTIBLE] * 2, 1.0)
        report = cs.cluster_of(g, 0)
        assert report.size == 1 and list(report.member_indices) == [0]

    def test_chain_of_three(self):
        g = make_graph([[0.0, 0.0], [0.9, 0.0], [1.8, 0.0]],
                       [cs.Mark.SUSCEPTIBLE] * 3, 1.0)
        for start in range(3):
            assert cs.cluster_of(g, start).size == 3

    def test_susceptible_cluster_contained_in_full(self):
        for seed in range(100):
            r = np.random.default_rng(seed)
            box = cs.BoxSpec(dim=2, side=10.0)
            config = cs.thin_marks(box, cs.sample_ppp(1.0, box, r), 0.4, r)
            g = cs.build_gilbert(config, 1.0)
            full = set(cs.cluster_of(g, 0).member_indices.tolist())
            restricted = set(cs.cluster_of(g, 0, restrict_to_susceptible=True)
                             .member_indices.tolist())
            assert restricted <= full

    def test_restricted_blocks_knights(self):
        # o - w - s: the knight cuts the susceptible cluster
        g = make_graph([[0.0, 0.0], [0.9, 0.0], [1.8, 0.0]],
                       [cs.Mark.SUSCEPTIBLE, cs.Mark.WHITE_KNIGHT, cs.Mark.SUSCEPTIBLE],
                       1.0)
        assert cs.cluster_of(g, 0).size == 3
        assert cs.cluster_of(g, 0, restrict_to_susceptible=True).size == 1

    def test_touches_boundary(self):
        g = make_graph([[0.0, 0.0], [4.5, 0.0]], [cs.Mark.SUSCEPTIBLE] * 2,
                       radius=1.0, side=10.0)
        assert not cs.cluster_of(g, 0).touches_boundary  # origin alone, interior
        assert cs.cluster_of(g, 1).touches_boundary      # within r of the face

    def test_torus_never_touches(self, rng):
        box = cs.BoxSpec(dim=2, side=6.0, topology=cs.Topology.TORUS)
        config = cs.thin_marks(box, cs.sample_ppp(2.0, box, rng), 0.0, rng)
        g = cs.build_gilbert(config, 1.0)
        assert not cs.cluster_of(g, 0).touches_boundary

    def test_insertion_order_independent(self):
        r = np.random.default_rng(3)
        pts = r.uniform(-5, 5, (60, 2))
        box = cs.BoxSpec(dim=2, side=10.0)
        base = cs.thin_marks(box, pts, 0.0, np.random.default_rng(0))
        perm = np.concatenate([[0], 1 + np.random.default_rng(1).permutation(60)])
        permuted = cs.PointConfiguration(box=box, positions=base.positions[perm],
                                         marks=base.marks[perm], origin_index=0)
        g1 = cs.build_gilbert(base, 1.2)
        g2 = cs.build_gilbert(permuted, 1.2)
        m1 = {tuple(base.positions[i]) for i in cs.cluster_of(g1, 0).member_indices}
        m2 = {tuple(permuted.positions[i]) for i in cs.cluster_of(g2, 0).member_indices}
        assert m1 == m2

    def test_invalid_start(self):
        g = make_graph([[0.0, 0.0]], [cs.Mark.SUSCEPTIBLE], 1.0)
        with pytest.raises(ParameterError):
            cs.cluster_of(g, 5)


class TestCountSaws:
    def test_star_counts(self):
        g = make_graph([[0.0, 0.0], [0.9, 0.0], [-0.45, 0.78], [-0.45, -0.78]],
                       [cs.Mark.SUSCEPTIBLE] * 4, 1.0)
        assert g.n_edges == 3  # leaves are pairwise farther than r
        assert cs.count_saws(g, 0, 1).count == 3
        assert cs.count_saws(g, 0, 2).count == 0

    def test_triangle(self):
        g = make_graph([[0.0, 0.0], [0.5, 0.0], [0.25, 0.4]],
                       [cs.Mark.SUSCEPTIBLE] * 3, 0.6)
        assert g.n_edges == 3
        assert cs.count_saws(g, 0, 2).count == 2  # o->a->b and o->b->a

    def test_length_zero(self, rng):
        box = cs.BoxSpec(dim=2, side=6.0)
        config = cs.thin_marks(box, cs.sample_ppp(1.0, box, rng), 0.0, rng)
        g = cs.build_gilbert(config, 1.0)
        assert cs.count_saws(g, 0, 0) == cs.SawCount(1, False)

    def test_against_exhaustive_enumeration(self):
        # itertools-based oracle on graphs with <= 12 nodes
        for seed in range(40):
            r = np.random.default_rng(seed)
            n = int(r.integers(2, 12))
            box = cs.BoxSpec(dim=2, side=4.0)
            pts = r.uniform(-2, 2, (n, 2))
            config = cs.thin_marks(box, pts, 0.3, r)
            g = cs.build_gilbert(config, 1.3)
            adj = brute_force_adjacency(config.positions, 4.0, 1.3, False)
            allowed = config.marks == cs.Mark.SUSCEPTIBLE.value
            allowed[0] = True
            for length in range(4):
                expected = 0
                for path in itertools.permutations(range(1, n + 1), length):
                    nodes = (0,) + path
                    if all(allowed[v] for v in nodes) and \
                       all(adj[nodes[i], nodes[i + 1]] for i in range(length)):
                        expected += 1
                assert cs.count_saws(g, 0, length).count == expected

    def test_cap_flags_result(self):
        g = make_graph([[0.0, 0.0], [0.5, 0.0], [0.25, 0.4]],
                       [cs.Mark.SUSCEPTIBLE] * 3, 0.6)
        res = cs.count_saws(g, 0, 2, max_paths=1)
        assert res.capped and res.count == 1

    def test_restriction_excludes_knight_paths(self):
        g = make_graph([[0.0, 0.0], [0.9, 0.0], [1.8, 0.0]],
                       [cs.Mark.SUSCEPTIBLE, cs.Mark.WHITE_KNIGHT, cs.Mark.SUSCEPTIBLE],
                       1.0)
        assert cs.count_saws(g, 0, 1).count == 0
        assert cs.count_saws(g, 0, 1, restrict_to_susceptible=False).count == 1


class TestEstimateTheta:
    def test_zero_intensity(self):
        box = cs.BoxSpec(dim=2, side=10.0)
        theta, stderr = cs.estimate_theta(0.0, 1.0, box, 50, np.random.default_rng(0))
        assert theta == 0.0 and stderr == 0.0

    def test_supercritical_positive(self):
        # operating point of the phase diagram: deep in the percolating phase
        box = cs.BoxSpec(dim=2, side=40.0)
        theta, _ = cs.estimate_theta(3.0, 1.0, box, 200, np.random.default_rng(1))
        assert theta > 0.5

    def test_torus_unsupported(self):
        box = cs.BoxSpec(dim=2, side=10.0, topology=cs.Topology.TORUS)
        with pytest.raises(UnsupportedTopologyError):
            cs.estimate_theta(1.0, 1.0, box, 10, np.random.default_rng(0))

    def test_deterministic(self):
        box = cs.BoxSpec(dim=2, side=15.0)
        a = cs.estimate_theta(1.2, 1.0, box, 60, np.random.default_rng(9))
        b = cs.estimate_theta(1.2, 1.0, box, 60, np.random.default_rng(9))
        assert a == b


class TestJsonRoundTrip:
    def test_schema_and_rebuild(self, rng, tmp_path):
        box = cs.BoxSpec(dim=2, side=8.0)
        config = cs.thin_marks(box, cs.sample_ppp(1.0, box, rng), 0.4, rng)
        doc = cs.config_to_json(config, 1.25)
        assert set(doc) == {"box", "radius", "points", "origin_index"}
        assert doc["points"][0]["mark"] == "S"
        text = json.dumps(doc)
        restored, radius = cs.config_from_json(json.loads(text))
        assert radius == 1.25
        assert (restored.positions == config.positions).all()
        assert (restored.marks == config.marks).all()
        g1 = cs.build_gilbert(config, radius)
        g2 = cs.build_gilbert(restored, radius)
        assert (g1.indptr == g2.indptr).all() and (g1.indices == g2.indices).all()

    def test_file_round_trip(self, rng, tmp_path):
        box = cs.BoxSpec(dim=1, side=4.0, topology=cs.Topology.TORUS)
        config = cs.thin_marks(box, cs.sample_ppp(2.0, box, rng), 0.5, rng)
        path = tmp_path / "config.json"
        cs.save_configuration(config, 0.8, path)
        restored, radius = cs.load_configuration(path)
        assert radius == 0.8
        assert restored.box == box
        assert (restored.positions == config.positions).all()
