"""Minor embedding of objective graphs into hardware graphs.

`find_embedding` is a randomized chain-growth heuristic in the spirit of
vertex-model embedders: each logical variable is rooted at the qubit
minimizing the summed (usage-penalized) shortest-path distance to the chains
of its already-placed neighbors, the connecting paths join its chain, and
rip-up/re-place passes iterate until no qubit is shared.  A final shrink
pass deletes qubits a chain does not need.  Runs are reproducible per seed.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra

from .model import IsingModel
from .topology import Graph

__all__ = [
    "EmbeddingError",
    "Embedding",
    "ChainMetrics",
    "PhysicalIsing",
    "find_embedding",
    "validate",
    "chain_metrics",
    "embed_ising",
    "unembed",
    "replicate_cluster",
]


class EmbeddingError(RuntimeError):
    pass


@dataclass
class Embedding:
    chains: list                 # chains[u] = sorted list of target qubits
    source_id: str = ""
    target_id: str = ""

    @property
    def num_logical(self):
        return len(self.chains)

    def total_qubits(self):
        return sum(len(c) for c in self.chains)

    def to_json(self, path):
        doc = {"source_id": self.source_id, "target_id": self.target_id,
               "chains": [list(map(int, c)) for c in self.chains]}
        with open(path, "w") as fh:
            json.dump(doc, fh)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            doc = json.load(fh)
        return cls(chains=[list(c) for c in doc["chains"]],
                   source_id=doc.get("source_id", ""),
                   target_id=doc.get("target_id", ""))


@dataclass
class ChainMetrics:
    lengths: np.ndarray
    diameters: np.ndarray
    break_rate: float | None = None

    def mean_length(self, include_unit=True):
        return float(self._sel(include_unit, self.lengths).mean())

    def max_length(self):
        return int(self.lengths.max())

    def mean_diameter(self, include_unit=True):
        return float(self._sel(include_unit, self.diameters).mean())

    def _sel(self, include_unit, arr):
        if include_unit:
            return arr
        kept = arr[self.lengths > 1]
        return kept if len(kept) else arr

    def to_csv(self, path):
        import csv
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["chain", "length", "diameter"])
            for i, (l, d) in enumerate(zip(self.lengths, self.diameters)):
                w.writerow([i, int(l), int(d)])


@dataclass
class PhysicalIsing:
    model: IsingModel
    chain_strength: float
    embedding: Embedding


# ---------------------------------------------------------------------------
# heuristic embedder
# ---------------------------------------------------------------------------

def _shrink_chain(adj, chain, nbr_sets, usage):
    """Greedily drop qubits a chain does not need, contended ones first.

    Keeps the chain connected and keeps at least one hardware edge to every
    neighbor chain in nbr_sets.
    """
    chain = set(chain)
    changed = True
    while changed and len(chain) > 1:
        changed = False
        for q in sorted(chain, key=lambda q: (-usage[q], -q)):
            rest = chain - {q}
            if not _connected(adj, rest):
                continue
            if all(_touches(adj, rest, nb) for nb in nbr_sets):
                chain = rest
                changed = True
                break
    return chain


class _Embedder:
    """One randomized embedding attempt (rip-up and re-place search).

    Congestion is priced like a routing negotiation: qubit cost grows
    *linearly* with current occupancy, scaled by a factor that anneals
    upward across passes, times a persistent history multiplier for
    chronically contended qubits.  Starting nearly free lets the first
    layout stay compact (chains overlap but stay short); the rising scale
    then trades that sharing away gradually instead of provoking the long
    detours a hard occupancy barrier causes.

    Distance fields from each placed chain are cached and only recomputed
    when that chain moves or a walked path crosses a qubit whose occupancy
    grew since the field was computed.
    """

    def __init__(self, source, target, rng, limit=np.inf,
                 init_scale=0.01, scale_base=0.2, scale_step=0.45,
                 hist_fac=0.5):
        self.rng = rng
        self.limit = limit
        self.init_scale = init_scale
        self.scale_base = scale_base
        self.scale_step = scale_step
        self.hist_fac = hist_fac
        self.n_t = target.num_nodes
        csr = target.to_csr()
        self.indptr, self.indices = csr.indptr, csr.indices
        self.adj_t = target.adjacency()
        self.source_adj = source.adjacency()
        self.n_s = source.num_nodes
        self.chains = [None] * self.n_s
        self.usage = np.zeros(self.n_t, dtype=np.int64)
        self.hist = np.zeros(self.n_t)
        self.scale = 1.0
        self.cache = {}

    def cost(self):
        return ((1.0 + self.scale * self.usage)
                * (1.0 + self.hist_fac * self.hist))

    def field(self, v, full=False):
        """Shortest-path distances from chain v to every qubit.

        By default the search is truncated at a cost radius generous enough
        for any sensible placement, which skips most of the graph; `full`
        forces an untruncated recompute (used when truncation left no
        feasible candidate).
        """
        hit = self.cache.get(v)
        if hit is None or (full and hit[3]):
            if full or not np.isfinite(self.limit):
                lim = np.inf if full else 60.0 * (1.0 + self.scale)
            else:
                lim = self.limit
            cost = self.cost()
            W = sp.csr_matrix((cost[self.indices], self.indices, self.indptr),
                              shape=(self.n_t, self.n_t))
            dist, pred, _ = dijkstra(W, directed=True, indices=self.chains[v],
                                     min_only=True, return_predecessors=True,
                                     limit=lim)
            hit = (dist, pred, self.usage.copy(), np.isfinite(lim))
            self.cache[v] = hit
        return hit

    def place(self, u):
        placed = [v for v in self.source_adj[u] if self.chains[v] is not None]
        full = False
        for attempt in range(5):
            fresh = self.cost()
            fields = [(v,) + self.field(v, full) for v in placed]
            total = fresh.copy()
            for _, dist, _, _, _ in fields:
                total = total + dist
            finite = np.isfinite(total)
            if not finite.any():
                if not full and any(f[4] for f in fields):
                    full = True
                    continue
                return False
            best = total[finite].min()
            cand = np.flatnonzero(finite & (total <= best * (1 + 1e-12)))
            root = int(self.rng.choice(cand))
            chain = {root}
            # connect neighbors nearest-first, each time starting the walk
            # from whichever qubit of the growing chain is closest to that
            # neighbor, so connecting paths share structure (greedy Steiner
            # tree) instead of all radiating from the root
            fields.sort(key=lambda f: f[1][root])
            # cached shortest-path trees may predate recent placements;
            # when a walked path crosses a qubit whose occupancy grew since
            # caching, recompute those fields and re-place
            stale = []
            dead = False
            for v, dist, pred, snap, _ in fields:
                in_v = set(self.chains[v])
                if chain & in_v:
                    continue
                start = min(chain, key=lambda q: dist[q])
                if not np.isfinite(dist[start]):
                    dead = True
                    break
                q = start
                while q not in in_v:
                    chain.add(q)
                    if self.usage[q] > snap[q]:
                        stale.append(v)
                    q = pred[q]
                    if q < 0:
                        dead = True
                        break
                if dead:
                    break
            if dead:
                if not full and any(f[4] for f in fields):
                    full = True
                    continue
                return False
            if stale and attempt < 4:
                # drop just the fields the walked path proved stale; if two
                # rounds of that still do not settle, refresh everything so
                # the accepted chain is never built on outdated distances
                drop = placed if attempt >= 2 else stale
                for v in drop:
                    self.cache.pop(v, None)
                continue
            break
        nbr_sets = [set(self.chains[v]) for v in placed]
        if nbr_sets:
            chain = _shrink_chain(self.adj_t, chain, nbr_sets, self.usage)
        self.chains[u] = np.fromiter(chain, dtype=np.int64)
        self.usage[self.chains[u]] += 1
        self.cache.pop(u, None)
        return True

    def rip(self, u):
        self.usage[self.chains[u]] -= 1
        self.chains[u] = None
        self.cache.pop(u, None)

    def overlap(self):
        return int((self.usage > 1).sum())

    def global_shrink(self):
        """Shrink every chain against the current layout, largest first."""
        chain_sets = [set(c) for c in self.chains]
        for u in np.argsort([-len(c) for c in self.chains]):
            u = int(u)
            nbr = [chain_sets[v] for v in self.source_adj[u]]
            shrunk = _shrink_chain(self.adj_t, chain_sets[u], nbr, self.usage)
            if len(shrunk) < len(chain_sets[u]):
                self.usage[list(chain_sets[u] - shrunk)] -= 1
                chain_sets[u] = shrunk
                self.chains[u] = np.fromiter(shrunk, dtype=np.int64)
                self.cache.pop(u, None)

    def run(self, order, max_passes):
        self.scale = self.init_scale
        for u in order:
            if not self.place(int(u)):
                return False
        stall = 0
        best = np.inf
        for p in range(max_passes):
            if self.usage.max() <= 1:
                return True
            self.scale = self.scale_base + self.scale_step * p
            # cached fields survive between passes; the stale-path refresh
            # in place() renews the ones whose routes got occupied since
            over = np.flatnonzero(self.usage > 1)
            self.hist[over] += 1.0
            over_set = set(over.tolist())
            if stall >= 3:
                # stuck: widen the rip region to qubits adjacent to conflicts
                over_set |= {n for q in over for n in self.adj_t[q]}
                stall = 0
            bad = [u for u in range(self.n_s)
                   if over_set & set(self.chains[u].tolist())]
            for u in self.rng.permutation(bad):
                u = int(u)
                self.rip(u)
                if not self.place(u):
                    return False
            self.global_shrink()
            ov = self.overlap()
            if ov < best:
                best = ov
                stall = 0
            else:
                stall += 1
        return self.usage.max() <= 1

    def final_chains(self):
        chain_sets = [set(c) for c in self.chains]
        out = []
        for u in range(self.n_s):
            nbr = [chain_sets[v] for v in self.source_adj[u]]
            shrunk = _shrink_chain(self.adj_t, chain_sets[u], nbr, self.usage)
            chain_sets[u] = shrunk
            out.append(sorted(shrunk))
        return out


def _connected(adj, nodes):
    if not nodes:
        return False
    it = iter(nodes)
    start = next(it)
    seen = {start}
    queue = deque([start])
    while queue:
        x = queue.popleft()
        for y in adj[x]:
            if y in nodes and y not in seen:
                seen.add(y)
                queue.append(y)
    return len(seen) == len(nodes)


def _touches(adj, a, b):
    for x in a:
        if adj[x] & b:
            return True
    return False


def find_embedding(source: Graph, target: Graph, seed=0, max_tries=10,
                   max_passes=100, limit=np.inf) -> Embedding:
    """Heuristically embed `source` as a minor of `target`.

    Raises EmbeddingError after max_tries randomized restarts.  Identical
    (source, target, seed) always yields the same embedding.
    """
    if source.num_nodes > target.num_nodes:
        raise EmbeddingError(
            f"source has {source.num_nodes} nodes, target only "
            f"{target.num_nodes}")
    order = np.argsort(-source.degrees(), kind="stable")
    for attempt in range(max_tries):
        rng = np.random.default_rng((seed, attempt))
        worker = _Embedder(source, target, rng, limit=limit)
        if not worker.run(order, max_passes):
            continue
        emb = Embedding(chains=worker.final_chains())
        if not validate(emb, source, target):
            return emb
    raise EmbeddingError(f"no embedding found after {max_tries} tries")


def validate(e: Embedding, source: Graph, target: Graph) -> list:
    """Invariant violations as strings; empty list means the embedding is valid."""
    out = []
    if e.num_logical != source.num_nodes:
        return [f"chain count {e.num_logical} != source nodes "
                f"{source.num_nodes}"]
    adj = target.adjacency()
    seen = {}
    for u, chain in enumerate(e.chains):
        cset = set(chain)
        if not cset:
            out.append(f"empty chain for variable {u}")
            continue
        for q in cset:
            if not 0 <= q < target.num_nodes:
                out.append(f"chain {u} references invalid qubit {q}")
            elif q in seen:
                out.append(f"qubit {q} shared by chains {seen[q]} and {u}")
            else:
                seen[q] = u
        if not _connected(adj, cset):
            out.append(f"chain {u} is not connected")
    chain_sets = [set(c) for c in e.chains]
    for u, v in source.edges:
        if not _touches(adj, chain_sets[u], chain_sets[v]):
            out.append(f"no hardware edge for logical edge ({u},{v})")
    return out


def chain_metrics(e: Embedding, target: Graph) -> ChainMetrics:
    """Chain lengths and diameters (node count of the longest shortest path)."""
    adj = target.adjacency()
    lengths = np.array([len(c) for c in e.chains])
    diam = np.empty(len(e.chains), dtype=int)
    for u, chain in enumerate(e.chains):
        cset = set(chain)
        if not cset:
            raise ValueError(f"empty chain for variable {u}")
        ecc = 1
        for s in cset:
            hops = {s: 0}
            queue = deque([s])
            while queue:
                x = queue.popleft()
                for y in adj[x]:
                    if y in cset and y not in hops:
                        hops[y] = hops[x] + 1
                        queue.append(y)
            if len(hops) != len(cset):
                raise ValueError(f"chain {u} is not connected")
            ecc = max(ecc, max(hops.values()) + 1)
        diam[u] = ecc
    return ChainMetrics(lengths=lengths, diameters=diam)


def embed_ising(model: IsingModel, e: Embedding, target: Graph,
                chain_strength) -> PhysicalIsing:
    """Physical Ising problem realizing `model` under embedding `e`.

    Logical fields split equally over chain qubits; each logical coupling
    lands on the lexicographically first available chain-to-chain hardware
    edge; every intra-chain hardware edge is set to -chain_strength
    (ferromagnetic).
    """
    if chain_strength <= 0:
        raise ValueError("chain strength must be > 0")
    if model.num_vars != e.num_logical:
        raise ValueError("model variables do not match embedding chains")
    edge_set = target.edge_set()
    h = np.zeros(target.num_nodes)
    J = {}
    for i, chain in enumerate(e.chains):
        for q in chain:
            h[q] += model.h[i] / len(chain)
        cs = sorted(chain)
        for a_i in range(len(cs)):
            for b_i in range(a_i + 1, len(cs)):
                a, b = cs[a_i], cs[b_i]
                if (a, b) in edge_set:
                    J[(b, a)] = -chain_strength
    for (i, j), v in sorted(model.J.items()):
        placed = False
        for qa, qb in sorted(
                (min(a, b), max(a, b))
                for a in e.chains[i] for b in e.chains[j]):
            if (qa, qb) in edge_set:
                J[(qb, qa)] = J.get((qb, qa), 0.0) + v
                placed = True
                break
        if not placed:
            raise ValueError(f"no hardware edge available for logical "
                             f"coupling ({i},{j})")
    phys = IsingModel(h=h, J=J, offset=model.offset)
    return PhysicalIsing(model=phys, chain_strength=float(chain_strength),
                         embedding=e)


def unembed(sample, e: Embedding, policy="majority", rng=None):
    """Collapse a physical spin sample to logical spins per chain.

    Intact chains pass their value through; broken chains are flagged and
    resolved by majority vote, with even splits decided by a seeded coin
    flip.
    """
    if policy != "majority":
        raise ValueError(f"unknown chain-break policy {policy!r}")
    if rng is None:
        rng = np.random.default_rng(0)
    sample = np.asarray(sample)
    logical = np.empty(e.num_logical)
    broken = np.zeros(e.num_logical, dtype=bool)
    for u, chain in enumerate(e.chains):
        vals = sample[list(chain)]
        s = vals.sum()
        if abs(s) == len(vals):
            logical[u] = vals[0]
            continue
        broken[u] = True
        if s > 0:
            logical[u] = 1.0
        elif s < 0:
            logical[u] = -1.0
        else:
            logical[u] = 1.0 if rng.random() < 0.5 else -1.0
    return logical, broken


def replicate_cluster(source: Graph, n_copies):
    """Disjoint union of n_copies relabeled copies of `source`.

    Returns (cluster graph, node map) where node c*|V| + v is copy c of
    source node v; the node map lists (copy, source_node) per cluster node.
    """
    if n_copies < 1:
        raise ValueError("n_copies must be >= 1")
    n = source.num_nodes
    edges = []
    node_map = []
    for c in range(n_copies):
        off = c * n
        edges.extend((off + u, off + v) for u, v in source.edges)
        node_map.extend((c, v) for v in range(n))
    return Graph(num_nodes=n * n_copies, edges=edges), node_map
