import numpy as np
import pytest

from tadsampler.model import (CartesianParams, ModelShape, build_qubo,
                              index_map, qubo_to_ising)
from tadsampler.topology import (Graph, HardwareGraph, apply_blocklist,
                                 build_hardware, cartesian_product, metrics,
                                 marker_intersection_graph,
                                 nucleosome_intersection_graph,
                                 objective_graph, read_edge_list,
                                 write_edge_list)


class TestGraph:
    def test_canonical_edges(self):
        g = Graph(4, [(2, 1), (0, 3)])
        assert g.edges == [(0, 3), (1, 2)]

    def test_rejects_self_loop(self):
        with pytest.raises(ValueError):
            Graph(3, [(1, 1)])

    def test_rejects_duplicate(self):
        with pytest.raises(ValueError):
            Graph(3, [(0, 1), (1, 0)])

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            Graph(3, [(0, 3)])

    def test_degrees_and_adjacency(self):
        g = Graph(4, [(0, 1), (0, 2), (0, 3)])
        assert g.degrees().tolist() == [3, 1, 1, 1]
        assert g.adjacency()[0] == {1, 2, 3}

    def test_to_csr_symmetric(self):
        g = Graph(3, [(0, 1), (1, 2)])
        a = g.to_csr().toarray()
        assert np.array_equal(a, a.T)
        assert a.sum() == 4


class TestChimera:
    def test_unit_cell(self):
        g = build_hardware("chimera", 1)
        assert g.num_nodes == 8
        assert g.num_edges == 16  # one K_{4,4}
        assert g.degrees().max() == 4

    def test_counts(self):
        # 8 m^2 qubits; edges: 16 m^2 internal + 8 m (m-1) external
        for m in (2, 3, 4):
            g = build_hardware("chimera", m)
            assert g.num_nodes == 8 * m * m
            assert g.num_edges == 16 * m * m + 8 * m * (m - 1)
            assert g.degrees().max() <= 6

    def test_full_size(self):
        g = build_hardware("chimera", 16)
        assert g.num_nodes == 2048
        assert g.num_edges == 16 * 256 + 8 * 16 * 15


class TestPegasus:
    def test_node_count_formula(self):
        # fabric qubit count 8 (3m - 1)(m - 1)
        for m in (2, 3, 4, 6):
            g = build_hardware("pegasus", m)
            assert g.num_nodes == 8 * (3 * m - 1) * (m - 1)
            assert g.degrees().max() <= 15

    def test_p16_published_counts(self):
        g = build_hardware("pegasus", 16)
        assert g.num_nodes == 5640
        assert g.num_edges == 40484

    def test_interior_degree(self):
        g = build_hardware("pegasus", 6)
        # interior qubits reach the full degree: 12 internal + 2 external + 1 odd
        assert g.degrees().max() == 15

    def test_m1_rejected(self):
        with pytest.raises(ValueError):
            build_hardware("pegasus", 1)


class TestZephyr:
    def test_node_count_formula(self):
        # 16 m (2m + 1) qubits at t = 4
        for m in (1, 2, 3, 6):
            g = build_hardware("zephyr", m)
            assert g.num_nodes == 16 * m * (2 * m + 1)
            assert g.degrees().max() <= 20

    def test_interior_degree(self):
        g = build_hardware("zephyr", 4)
        # 16 internal + 2 external + 2 odd
        assert g.degrees().max() == 20


class TestBuildHardware:
    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            build_hardware("kagome", 4)

    def test_bad_m(self):
        with pytest.raises(ValueError):
            build_hardware("chimera", 0)

    def test_degree_cap_enforced(self):
        with pytest.raises(ValueError):
            HardwareGraph(num_nodes=8, kind="chimera", m=1,
                          edges=[(0, k) for k in range(1, 8)])

    def test_blocklist(self):
        g = build_hardware("chimera", 2)
        trimmed = apply_blocklist(g, bad_nodes=[0], bad_edges=[(8, 12)])
        assert trimmed.num_nodes == g.num_nodes
        assert all(0 not in e for e in trimmed.edges)
        assert (8, 12) not in trimmed.edge_set()
        assert (8, 12) in g.edge_set()


class TestObjectiveGraphs:
    def test_marker_graph_complete(self):
        g = marker_intersection_graph(12)
        assert g.num_nodes == 12
        assert g.num_edges == 66
        assert np.all(g.degrees() == 11)

    def test_nucleosome_graph_regular(self):
        # N = 25, L = 5 periodic: 10-regular circulant, 125 edges
        g = nucleosome_intersection_graph(25, 5, "periodic")
        assert g.num_nodes == 25
        assert g.num_edges == 125
        assert np.all(g.degrees() == 10)

    def test_nucleosome_graph_open(self):
        g = nucleosome_intersection_graph(6, 2, "open")
        # path band: (N-1) + (N-2) edges
        assert g.num_edges == 5 + 4
        assert g.degrees().tolist() == [2, 3, 4, 4, 3, 2]

    def test_wrap_warning(self):
        with pytest.warns(UserWarning):
            nucleosome_intersection_graph(4, 2, "periodic")

    def test_cartesian_product_counts(self):
        g1 = marker_intersection_graph(3)
        g2 = nucleosome_intersection_graph(5, 1, "periodic")
        prod = cartesian_product(g1, g2)
        # |V| = |V1||V2|; |E| = |E1||V2| + |E2||V1|
        assert prod.num_nodes == 15
        assert prod.num_edges == 3 * 5 + 5 * 3

    def test_product_matches_qubo_structure(self):
        # the objective graph of a dense model is exactly K_M box C_N^L
        shape = ModelShape(3, 7, 2)
        rng = np.random.default_rng(0)
        params = CartesianParams.random(3, 2, rng)
        # avoid accidental zeros: couplings all nonzero by construction here
        ising = qubo_to_ising(build_qubo(shape, params))
        obj = objective_graph(ising)
        prod = cartesian_product(marker_intersection_graph(3),
                                 nucleosome_intersection_graph(7, 2,
                                                               "periodic"))
        assert obj.edge_set() == prod.edge_set()

    def test_target_scale_objective(self):
        prod = cartesian_product(marker_intersection_graph(12),
                                 nucleosome_intersection_graph(25, 5,
                                                               "periodic"))
        assert prod.num_nodes == 300
        assert prod.num_edges == 66 * 25 + 125 * 12  # 3150
        m = metrics(prod)
        assert abs(m.gamma - 0.0702) < 0.0005

    def test_objective_graph_weights(self):
        shape = ModelShape(2, 3, 1)
        params = CartesianParams.random(2, 1, np.random.default_rng(1))
        ising = qubo_to_ising(build_qubo(shape, params))
        g = objective_graph(ising)
        assert np.allclose(g.node_weights, ising.h)
        assert g.edge_weights == ising.J


class TestMetrics:
    def test_complete_graph(self):
        m = metrics(marker_intersection_graph(4))
        assert m.avg_degree == 3.0
        assert m.gamma == 1.0

    def test_cycle(self):
        m = metrics(nucleosome_intersection_graph(10, 1, "periodic"))
        assert m.avg_degree == 2.0
        assert np.isclose(m.gamma, 2.0 / 9.0)

    def test_single_node_rejected(self):
        with pytest.raises(ValueError):
            metrics(Graph(1, []))


class TestDeterminismAndIO:
    def test_generators_deterministic(self):
        a = build_hardware("pegasus", 4)
        b = build_hardware("pegasus", 4)
        assert a.edges == b.edges

    def test_edge_list_round_trip(self, tmp_path):
        g = build_hardware("zephyr", 2)
        p = tmp_path / "z2.txt"
        write_edge_list(g, p)
        back = read_edge_list(p)
        assert isinstance(back, HardwareGraph)
        assert back.kind == "zephyr" and back.m == 2
        assert back.edges == g.edges

    def test_plain_graph_round_trip(self, tmp_path):
        g = marker_intersection_graph(5)
        p = tmp_path / "k5.txt"
        write_edge_list(g, p)
        back = read_edge_list(p)
        assert not isinstance(back, HardwareGraph)
        assert back.edges == g.edges

    def test_edge_count_mismatch_rejected(self, tmp_path):
        p = tmp_path / "bad.txt"
        p.write_text("graph 0 3 2\n0 1\n")
        with pytest.raises(ValueError):
            read_edge_list(p)
