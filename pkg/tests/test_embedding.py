import itertools

import numpy as np
import pytest

from boltzbench.embedding import (
    Embedding,
    EmbeddingImpossibleError,
    EmbeddingNotFoundError,
    chain_breaks,
    chimera_graph,
    embed_model,
    find_embedding,
    format_edge_list,
    format_embedding,
    intra_chain_edges,
    parse_edge_list,
    parse_embedding,
    unembed,
    validate_embedding,
)
from boltzbench.ising import IsingModel, all_states, exact_distribution, random_model
from boltzbench.samplers import Sampleset


def _oracle_chimera_edges(m):
    # independent construction from the cell picture: (row, col, side, k)
    def q(r, c, u, k):
        return ((r * m + c) * 2 + u) * 4 + k

    edges = set()
    for r, c in itertools.product(range(m), repeat=2):
        for a, b in itertools.product(range(4), repeat=2):
            edges.add(tuple(sorted((q(r, c, 0, a), q(r, c, 1, b)))))
        for k in range(4):
            if r + 1 < m:
                edges.add(tuple(sorted((q(r, c, 0, k), q(r + 1, c, 0, k)))))
            if c + 1 < m:
                edges.add(tuple(sorted((q(r, c, 1, k), q(r, c + 1, 1, k)))))
    return edges


@pytest.mark.parametrize("m, edges", [(1, 16), (2, 80), (3, 16 * 9 + 8 * 3 * 2), (4, 352)])
def test_chimera_counts(m, edges):
    g = chimera_graph(m)
    assert len(g.nodes) == 8 * m * m
    assert len(g.edges) == edges == 16 * m * m + 8 * m * (m - 1)
    assert set(g.edges) == _oracle_chimera_edges(m)
    assert max(len(g.adjacency[v]) for v in g.nodes) <= 6
    assert all(u != v for u, v in g.edges)


def test_single_edge_uses_single_qubits():
    g = chimera_graph(1)
    emb = find_embedding([(0, 1)], g, seed=0)
    assert emb.max_chain_length() == 1
    assert validate_embedding(emb, g, [(0, 1)]) == []


@pytest.mark.parametrize("seed", range(5))
def test_triangle_needs_a_chain(seed):
    g = chimera_graph(1)
    tri = [(0, 1), (1, 2), (0, 2)]
    emb = find_embedding(tri, g, seed=seed)
    assert validate_embedding(emb, g, tri) == []
    assert emb.max_chain_length() >= 2


def test_pigeonhole_and_not_found():
    g = chimera_graph(1)
    with pytest.raises(EmbeddingImpossibleError, match="provably impossible"):
        find_embedding(list(itertools.combinations(range(9), 2)), g)
    with pytest.raises(EmbeddingNotFoundError, match="no embedding found"):
        find_embedding(list(itertools.combinations(range(8), 2)), g, max_restarts=3)


def test_find_embedding_deterministic():
    g = chimera_graph(3)
    m = random_model(10, 0.4, rng=np.random.default_rng(2))
    assert find_embedding(m, g, seed=4) == find_embedding(m, g, seed=4)


def test_validator_catches_each_violation():
    g = chimera_graph(1)
    problem = [(0, 1)]
    assert validate_embedding(Embedding({0: (0,), 1: (4,)}), g, problem) == []
    overlap = validate_embedding(Embedding({0: (0, 4), 1: (4,)}), g, problem)
    assert any("overlap" in v or "share" in v for v in overlap)
    # qubits 0 and 1 sit on the same side of the cell and are not adjacent
    disconnected = validate_embedding(Embedding({0: (0, 1), 1: (4,)}), g, problem)
    assert any("connected" in v for v in disconnected)
    missing = validate_embedding(Embedding({0: (0,), 1: (1,)}), g, problem)
    assert any("coupler" in v for v in missing)


def test_embed_model_splits_fields():
    g = chimera_graph(1)
    emb = Embedding({0: (0, 4)}, chain_strength=3.0)
    em = embed_model(IsingModel(1, [1.0]), emb, g)
    assert em.h[0] == em.h[4] == 0.5
    assert em.J == {(0, 4): -3.0}


def test_identity_embedding_relabels_only():
    g = chimera_graph(1)
    m = IsingModel(2, [0.3, -0.2], {(0, 1): 0.7}, offset=1.5)
    emb = Embedding({0: (0,), 1: (4,)})
    em = embed_model(m, emb, g)
    assert em.h[0] == 0.3 and em.h[4] == -0.2 and em.J == {(0, 4): 0.7} and em.offset == 1.5
    assert np.count_nonzero(em.h) == 2


def _unbroken_states(emb, num_hw):
    for logical in all_states(emb.num_variables):
        hw = np.ones(num_hw, dtype=np.int8)
        for v, chain in emb.chains.items():
            hw[list(chain)] = logical[v]
        yield logical, hw


def test_embedded_ferromagnet_ground_states():
    g = chimera_graph(1)
    emb = Embedding({0: (0, 4), 1: (1, 5)}, chain_strength=2.0)
    em = embed_model(IsingModel(2, [0.0, 0.0], {(0, 1): -1.0}), emb, g)
    assert em.num_spins <= 16
    E = em.energies(all_states(em.num_spins))
    ground = all_states(em.num_spins)[E == E.min()]
    breaks = chain_breaks(ground, emb)
    assert not breaks.any()
    logical = {tuple(int(s[list(emb.chains[v])[0]]) for v in (0, 1)) for s in ground}
    assert logical == {(1, 1), (-1, -1)}


@pytest.mark.parametrize("seed", range(4))
def test_unbroken_energy_identity(seed):
    g = chimera_graph(1)
    rng = np.random.default_rng(seed)
    m = random_model(3, 1.0, rng=rng).with_offset(0.25)
    emb = find_embedding(m, g, seed=seed, chain_strength=1.7)
    em = embed_model(m, emb, g)
    n_intra = len(intra_chain_edges(emb, g))
    for logical, hw in _unbroken_states(emb, em.num_spins):
        lhs = m.energies(logical[None, :])[0]
        rhs = em.energies(hw[None, :])[0] + emb.chain_strength * n_intra
        assert lhs == pytest.approx(rhs, abs=1e-12)


def test_unembed_majority_and_breaks():
    m = IsingModel(2, [0.0, 0.0], {(0, 1): -1.0})
    emb = Embedding({0: (0, 1, 2), 1: (4, 5)})
    hw = np.ones((3, 8), dtype=np.int8)
    hw[1, 2] = -1  # chain 0 reads (+1, +1, -1)
    hw[2, [4, 5]] = -1
    ss = Sampleset.from_reads(hw, np.zeros(3))
    out, frac = unembed(ss, emb, m, "majority", seed=0)
    np.testing.assert_array_equal(out.states, [[1, 1], [1, 1], [1, -1]])
    assert frac == pytest.approx(1 / 3)
    np.testing.assert_array_equal(out.energies, m.energies(out.states))
    kept, frac2 = unembed(ss, emb, m, "discard")
    assert kept.total_reads == 2 and frac2 == frac


def test_unembed_discard_all_broken():
    m = IsingModel(1, [0.0])
    emb = Embedding({0: (0, 4)})
    hw = np.ones((5, 8), dtype=np.int8)
    hw[:, 4] = -1
    out, frac = unembed(Sampleset.from_reads(hw, np.zeros(5)), emb, m, "discard")
    assert len(out) == 0 and frac == 1.0


def test_unembed_ties_use_seeded_coin():
    m = IsingModel(1, [0.0])
    emb = Embedding({0: (0, 4)})
    hw = np.ones((2000, 8), dtype=np.int8)
    hw[:, 4] = -1
    ss = Sampleset.from_reads(hw, np.zeros(2000))
    a, _ = unembed(ss, emb, m, seed=5)
    b, _ = unembed(ss, emb, m, seed=5)
    assert a == b
    assert 0.45 < (a.states[:, 0] == 1).mean() < 0.55


def test_embedding_and_edge_list_roundtrip():
    g = chimera_graph(2)
    h = parse_edge_list(format_edge_list(g))
    assert h.nodes == g.nodes and h.edges == g.edges
    emb = find_embedding([(0, 1), (1, 2), (0, 2)], g, seed=1, chain_strength=2.5)
    assert parse_embedding(format_embedding(emb)) == emb
    assert parse_embedding(format_embedding(emb), chain_strength=4.0).chain_strength == 4.0


def test_embedding_rejects_bad_input():
    with pytest.raises(ValueError):
        Embedding({0: (1,)}, chain_strength=0.0)
    with pytest.raises(ValueError):
        Embedding({0: ()})
    with pytest.raises(Exception):
        embed_model(IsingModel(2, [0, 0], {(0, 1): 1.0}), Embedding({0: (0,), 1: (1,)}), chimera_graph(1))


def test_embedded_sampling_reaches_logical_law():
    # conditioned on unbroken chains the hardware law is the logical law, for any gamma;
    # a moderate gamma keeps single-site Gibbs mixing across chain flips
    from boltzbench.diagnostics import distribution_distance, empirical_distribution
    from boltzbench.samplers import SamplerConfig, gibbs_sample

    g = chimera_graph(1)
    m = IsingModel(3, [0.2, -0.1, 0.0], {(0, 1): -0.5, (1, 2): 0.4, (0, 2): 0.3})
    emb = find_embedding(m, g, seed=0, chain_strength=1.0)
    hw = gibbs_sample(embed_model(m, emb, g), 1.0, SamplerConfig(seed=1, num_reads=20_000, sweeps_per_read=5))
    logical, frac = unembed(hw, emb, m, "discard")
    assert 0 < frac < 0.5
    assert distribution_distance(empirical_distribution(logical), exact_distribution(m, 1.0)) < 0.03
