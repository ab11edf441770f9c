import numpy as np
import pytest

from tadsampler.embed import (ChainMetrics, Embedding, EmbeddingError,
                              chain_metrics, embed_ising, find_embedding,
                              replicate_cluster, unembed, validate)
from tadsampler.model import IsingModel, ising_energy
from tadsampler.topology import (Graph, build_hardware, cartesian_product,
                                 marker_intersection_graph,
                                 nucleosome_intersection_graph)


def cycle(n):
    return Graph(n, [(i, (i + 1) % n) for i in range(n)])


class TestValidate:
    def test_identity_embedding(self):
        g = cycle(4)
        e = Embedding(chains=[[i] for i in range(4)])
        assert validate(e, g, g) == []

    def test_chain_count_mismatch(self):
        g = cycle(4)
        e = Embedding(chains=[[0], [1]])
        assert validate(e, g, g)

    def test_shared_qubit(self):
        g = cycle(4)
        e = Embedding(chains=[[0], [0], [2], [3]])
        assert any("shared" in msg for msg in validate(e, g, g))

    def test_empty_chain(self):
        g = cycle(4)
        e = Embedding(chains=[[0], [], [2], [3]])
        assert any("empty" in msg for msg in validate(e, g, g))

    def test_disconnected_chain(self):
        hw = cycle(6)
        src = Graph(2, [(0, 1)])
        e = Embedding(chains=[[0, 3], [1, 2]])
        assert any("not connected" in msg for msg in validate(e, src, hw))

    def test_missing_logical_edge(self):
        hw = Graph(4, [(0, 1), (2, 3)])
        src = Graph(2, [(0, 1)])
        e = Embedding(chains=[[0], [3]])
        assert any("no hardware edge" in msg for msg in validate(e, src, hw))


class TestFindEmbedding:
    def test_triangle_into_cycle(self):
        # K3 is a minor of C4: one chain must span two qubits
        src = marker_intersection_graph(3)
        hw = cycle(4)
        e = find_embedding(src, hw, seed=0)
        assert validate(e, src, hw) == []
        assert e.total_qubits() == 4

    def test_impossible_raises(self):
        # K5 needs 5 chains but C4 has only 4 qubits
        with pytest.raises(EmbeddingError):
            find_embedding(marker_intersection_graph(5), cycle(4), seed=0)

    def test_small_objective_into_chimera(self):
        src = cartesian_product(marker_intersection_graph(3),
                                nucleosome_intersection_graph(5, 1,
                                                              "periodic"))
        hw = build_hardware("chimera", 4)
        e = find_embedding(src, hw, seed=0)
        assert validate(e, src, hw) == []

    def test_deterministic(self):
        src = marker_intersection_graph(4)
        hw = build_hardware("chimera", 2)
        a = find_embedding(src, hw, seed=7)
        b = find_embedding(src, hw, seed=7)
        assert a.chains == b.chains

    def test_json_round_trip(self, tmp_path):
        src = marker_intersection_graph(3)
        hw = build_hardware("chimera", 2)
        e = find_embedding(src, hw, seed=1)
        p = tmp_path / "emb.json"
        e.to_json(p)
        back = Embedding.from_json(p)
        assert back.chains == [list(c) for c in e.chains]


class TestChainMetrics:
    def test_path_chain(self):
        # a 4-qubit path chain has diameter 4 (node count of longest path)
        hw = cycle(8)
        e = Embedding(chains=[[0, 1, 2, 3]])
        m = chain_metrics(e, hw)
        assert m.lengths.tolist() == [4]
        assert m.diameters.tolist() == [4]

    def test_star_chain_diameter_below_length(self):
        # star with 4 leaves: length 5, diameter 3 (leaf-center-leaf)
        hw = Graph(5, [(0, k) for k in range(1, 5)])
        e = Embedding(chains=[[0, 1, 2, 3, 4]])
        m = chain_metrics(e, hw)
        assert m.max_length() == 5
        assert m.diameters.tolist() == [3]

    def test_diameter_never_exceeds_length(self):
        rng = np.random.default_rng(0)
        hw = build_hardware("chimera", 4)
        adj = hw.adjacency()
        for _ in range(200):
            # grow a random connected chain
            chain = {int(rng.integers(hw.num_nodes))}
            for _ in range(int(rng.integers(1, 8))):
                frontier = sorted(set().union(*(adj[q] for q in chain)) - chain)
                if not frontier:
                    break
                chain.add(int(rng.choice(frontier)))
            m = chain_metrics(Embedding(chains=[sorted(chain)]), hw)
            assert m.diameters[0] <= m.lengths[0]

    def test_unit_chain_filter(self):
        hw = cycle(6)
        e = Embedding(chains=[[0], [1, 2]])
        m = chain_metrics(e, hw)
        assert m.mean_length(include_unit=True) == 1.5
        assert m.mean_length(include_unit=False) == 2.0


class TestEmbedIsing:
    def test_field_split_and_chain_coupling(self):
        hw = cycle(4)
        src = Graph(2, [(0, 1)])
        e = Embedding(chains=[[0, 1], [2]])
        model = IsingModel(h=np.array([1.0, -0.5]), J={(1, 0): 0.25})
        phys = embed_ising(model, e, hw, chain_strength=2.0)
        h = phys.model.h
        assert np.isclose(h[0], 0.5) and np.isclose(h[1], 0.5)
        assert np.isclose(h[2], -0.5)
        assert phys.model.J[(1, 0)] == -2.0          # intra-chain ferro bond
        assert np.isclose(phys.model.J[(2, 1)], 0.25)  # logical coupling

    def test_invalid_chain_strength(self):
        hw = cycle(4)
        e = Embedding(chains=[[0], [1]])
        model = IsingModel(h=np.zeros(2), J={(1, 0): 1.0})
        with pytest.raises(ValueError):
            embed_ising(model, e, hw, chain_strength=0.0)

    def test_strong_chains_reproduce_logical_spectrum(self):
        # with unbroken chains, physical energy at the chain-consistent state
        # equals logical energy plus a constant from the ferro bonds
        hw = build_hardware("chimera", 1)
        src = marker_intersection_graph(3)
        e = find_embedding(src, hw, seed=0)
        rng = np.random.default_rng(1)
        model = IsingModel(h=rng.normal(size=3),
                           J={(1, 0): 0.3, (2, 0): -0.4, (2, 1): 0.2})
        jc = 5.0
        phys = embed_ising(model, e, hw, chain_strength=jc)
        n_chain_bonds = sum(1 for v in phys.model.J.values() if v == -jc)
        shift = -jc * n_chain_bonds
        for bits in range(8):
            s = np.array([1.0 if bits >> k & 1 else -1.0 for k in range(3)])
            full = np.zeros(hw.num_nodes)
            for u, chain in enumerate(e.chains):
                full[list(chain)] = s[u]
            # unused qubits stay at -1; they carry no field or coupling
            used = set().union(*(set(c) for c in e.chains))
            for q in range(hw.num_nodes):
                if q not in used:
                    full[q] = -1.0
            e_log = ising_energy(model, s)
            e_phys = ising_energy(phys.model, full)
            assert np.isclose(e_phys - shift, e_log)


class TestUnembed:
    def test_intact_chain_passthrough(self):
        e = Embedding(chains=[[0, 1], [2]])
        logical, broken = unembed(np.array([1.0, 1.0, -1.0]), e)
        assert logical.tolist() == [1.0, -1.0]
        assert not broken.any()

    def test_majority_vote(self):
        e = Embedding(chains=[[0, 1, 2]])
        logical, broken = unembed(np.array([1.0, 1.0, -1.0]), e)
        assert logical[0] == 1.0
        assert broken[0]

    def test_tie_break_seeded(self):
        e = Embedding(chains=[[0, 1]])
        sample = np.array([1.0, -1.0])
        a, _ = unembed(sample, e, rng=np.random.default_rng(5))
        b, _ = unembed(sample, e, rng=np.random.default_rng(5))
        assert a[0] == b[0]
        flips = [unembed(sample, e, rng=np.random.default_rng(k))[0][0]
                 for k in range(50)]
        assert -1.0 in flips and 1.0 in flips

    def test_unknown_policy(self):
        e = Embedding(chains=[[0]])
        with pytest.raises(ValueError):
            unembed(np.array([1.0]), e, policy="discard")


class TestReplicateCluster:
    def test_copies_and_map(self):
        src = marker_intersection_graph(3)
        cluster, node_map = replicate_cluster(src, 4)
        assert cluster.num_nodes == 12
        assert cluster.num_edges == 12
        assert node_map[0] == (0, 0)
        assert node_map[7] == (2, 1)
        # copies are disjoint: no edge crosses a copy boundary
        for u, v in cluster.edges:
            assert u // 3 == v // 3

    def test_single_copy_identity(self):
        src = cycle(5)
        cluster, _ = replicate_cluster(src, 1)
        assert cluster.edges == src.edges

    def test_invalid_count(self):
        with pytest.raises(ValueError):
            replicate_cluster(cycle(3), 0)
