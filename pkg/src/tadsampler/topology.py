"""Graphs: hardware topologies, objective graphs and Cartesian products.

Hardware generators produce defect-free (perfect yield) Chimera, Pegasus and
Zephyr graphs.  Node indexing is deterministic and documented per generator;
a real chip's defect mask can be applied afterwards with
:func:`apply_blocklist`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

__all__ = [
    "Graph",
    "HardwareGraph",
    "GraphMetrics",
    "build_hardware",
    "objective_graph",
    "marker_intersection_graph",
    "nucleosome_intersection_graph",
    "cartesian_product",
    "metrics",
    "apply_blocklist",
    "write_edge_list",
    "read_edge_list",
]

# Pegasus qubit-shift offsets: vertical qubits use PEGASUS_OFFSETS[0][k],
# horizontal qubits PEGASUS_OFFSETS[1][k].  Pairs (2j, 2j+1) share an offset
# so that odd couplers connect truly parallel neighbors.
PEGASUS_OFFSETS = (
    (2, 2, 2, 2, 6, 6, 6, 6, 10, 10, 10, 10),
    (6, 6, 2, 2, 2, 2, 10, 10, 6, 6, 10, 10),
)

MAX_DEGREE = {"chimera": 6, "pegasus": 15, "zephyr": 20}


@dataclass
class Graph:
    """Simple undirected graph: sorted edge list with optional weights.

    Edges are stored as (u, v) with u < v.  ``node_weights`` carries per-node
    fields (h) and ``edge_weights`` per-edge couplings (J) when the graph
    represents an Ising objective.
    """

    num_nodes: int
    edges: list = field(default_factory=list)
    node_weights: np.ndarray | None = None
    edge_weights: dict | None = None

    def __post_init__(self):
        canon = []
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            if not (0 <= u < self.num_nodes and 0 <= v < self.num_nodes):
                raise ValueError(f"edge ({u},{v}) references invalid node")
            e = (u, v) if u < v else (v, u)
            if e in seen:
                raise ValueError(f"duplicate edge {e}")
            seen.add(e)
            canon.append(e)
        canon.sort()
        self.edges = canon

    @property
    def num_edges(self):
        return len(self.edges)

    def edge_set(self):
        return set(self.edges)

    def adjacency(self):
        adj = [set() for _ in range(self.num_nodes)]
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj

    def degrees(self):
        deg = np.zeros(self.num_nodes, dtype=int)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def to_csr(self):
        """Symmetric CSR adjacency with unit weights."""
        if not self.edges:
            return sp.csr_matrix((self.num_nodes, self.num_nodes))
        e = np.asarray(self.edges)
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        data = np.ones(len(rows))
        return sp.csr_matrix((data, (rows, cols)),
                             shape=(self.num_nodes, self.num_nodes))


@dataclass
class HardwareGraph(Graph):
    kind: str = "chimera"
    m: int = 1

    def __post_init__(self):
        super().__post_init__()
        deg = self.degrees()
        cap = MAX_DEGREE[self.kind]
        if len(deg) and deg.max() > cap:
            raise ValueError(
                f"{self.kind} degree bound violated: {deg.max()} > {cap}")


@dataclass
class GraphMetrics:
    num_nodes: int
    num_edges: int
    avg_degree: float
    gamma: float


def metrics(g: Graph) -> GraphMetrics:
    """Average degree and edge density gamma = 2|E| / (|V| (|V|-1))."""
    n, e = g.num_nodes, g.num_edges
    if n < 2:
        raise ValueError("gamma undefined for graphs with fewer than 2 nodes")
    return GraphMetrics(n, e, 2.0 * e / n, 2.0 * e / (n * (n - 1)))


# ---------------------------------------------------------------------------
# hardware generators
# ---------------------------------------------------------------------------

def _chimera(m):
    """Chimera C_m: m x m grid of K_{4,4} cells.

    Node index for cell (row i, col j), side u (0 = vertical, 1 = horizontal),
    offset k in 0..3:  ((i*m + j)*2 + u)*4 + k  (row-major cells).
    """
    def idx(i, j, u, k):
        return ((i * m + j) * 2 + u) * 4 + k

    edges = []
    for i in range(m):
        for j in range(m):
            for k1 in range(4):
                for k2 in range(4):
                    edges.append((idx(i, j, 0, k1), idx(i, j, 1, k2)))
            for k in range(4):
                if i + 1 < m:
                    edges.append((idx(i, j, 0, k), idx(i + 1, j, 0, k)))
                if j + 1 < m:
                    edges.append((idx(i, j, 1, k), idx(i, j + 1, 1, k)))
    return 8 * m * m, edges


def _pegasus_segments(m):
    """Pegasus qubits as unit-grid segments of length 12.

    Qubit (u, w, k, z) with u in {0,1} (0 vertical), w in 0..m-1, k in 0..11,
    z in 0..m-2.  A vertical qubit sits at column x = 12w + k and spans rows
    [12z + off, 12z + off + 12) with off = PEGASUS_OFFSETS[0][k]; horizontal
    qubits are the transpose with PEGASUS_OFFSETS[1].  Couplers: internal
    where segments cross, external between collinear consecutive segments,
    odd between the parallel (2j, 2j+1) pair.
    """
    def raw(u, w, k, z):
        return ((u * m + w) * 12 + k) * (m - 1) + z

    edges = set()
    for u in range(2):
        off_own = PEGASUS_OFFSETS[u]
        off_other = PEGASUS_OFFSETS[1 - u]
        for w in range(m):
            for k in range(12):
                for z in range(m - 1):
                    i = raw(u, w, k, z)
                    if z + 1 < m - 1:
                        edges.add((i, raw(u, w, k, z + 1)))          # external
                    if k % 2 == 0:
                        edges.add((i, raw(u, w, k + 1, z)))          # odd
                    if u == 1:
                        continue
                    # internal couplers: enumerate crossings once from the
                    # vertical side.  Vertical column position p, row span.
                    p = 12 * w + k
                    y0 = 12 * z + off_own[k]
                    for y in range(y0, y0 + 12):
                        wh, kh = divmod(y, 12)
                        if wh >= m:
                            continue
                        start = p - off_other[kh]
                        if start < 0:
                            continue
                        zh = start // 12
                        if zh > m - 2:
                            continue
                        j = raw(1, wh, kh, zh)
                        edges.add((i, j) if i < j else (j, i))
    return 24 * m * (m - 1), edges


def _pegasus(m):
    """Pegasus P_m restricted to the qubit fabric.

    Boundary qubits without any internal coupler are dropped, yielding the
    published qubit count 8(3m-1)(m-1) (5640 for m = 16).  Remaining qubits
    are relabelled compactly preserving raw-index order.
    """
    n_raw, edges = _pegasus_segments(m)
    has_internal = np.zeros(n_raw, dtype=bool)
    half = n_raw // 2  # raw indices < half are vertical (u = 0)
    for a, b in edges:
        if (a < half) != (b < half):  # internal couplers join orientations
            has_internal[a] = True
            has_internal[b] = True
    keep = np.flatnonzero(has_internal)
    relabel = -np.ones(n_raw, dtype=int)
    relabel[keep] = np.arange(len(keep))
    out = []
    for a, b in edges:
        ra, rb = relabel[a], relabel[b]
        if ra >= 0 and rb >= 0:
            out.append((ra, rb) if ra < rb else (rb, ra))
    return len(keep), out


def _zephyr(m, t=4):
    """Zephyr Z_m (t = 4) via the same segment-crossing construction.

    Qubit (u, w, k, j, z): u orientation, w in 0..2m perpendicular major
    offset, k in 0..t-1 minor offset, j in {0,1} parallel major offset,
    z in 0..m-1 parallel minor offset.  Index:
    (((u*(2m+1) + w)*t + k)*2 + j)*m + z.
    A vertical qubit sits at column x = t*w + k and spans rows
    [t*(2z + j), t*(2z + j) + 2t); consecutive spans overlap by t, giving the
    odd couplers, while spans two steps apart touch, giving the externals.
    """
    def idx(u, w, k, j, z):
        return (((u * (2 * m + 1) + w) * t + k) * 2 + j) * m + z

    edges = set()
    for u in range(2):
        for w in range(2 * m + 1):
            for k in range(t):
                for j in range(2):
                    for z in range(m):
                        i = idx(u, w, k, j, z)
                        a = 2 * z + j
                        if z + 1 < m:
                            edges.add((i, idx(u, w, k, j, z + 1)))   # external
                        if a + 1 < 2 * m:                            # odd
                            other = idx(u, w, k, (a + 1) % 2, (a + 1) // 2)
                            edges.add((i, other) if i < other else (other, i))
                        if u == 1:
                            continue
                        p = t * w + k
                        y0 = t * a
                        for y in range(y0, y0 + 2 * t):
                            wh, kh = divmod(y, t)
                            if wh > 2 * m:
                                continue
                            for ah in (p // t - 1, p // t):
                                if not (0 <= ah <= 2 * m - 1):
                                    continue
                                if not (t * ah <= p < t * ah + 2 * t):
                                    continue
                                other = idx(1, wh, kh, ah % 2, ah // 2)
                                edges.add((i, other) if i < other
                                          else (other, i))
    return 4 * t * m * (2 * m + 1), edges


def build_hardware(kind: str, m: int) -> HardwareGraph:
    """Generate a defect-free hardware target graph."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if kind == "chimera":
        n, edges = _chimera(m)
    elif kind == "pegasus":
        if m < 2:
            raise ValueError("pegasus requires m >= 2")
        n, edges = _pegasus(m)
    elif kind == "zephyr":
        n, edges = _zephyr(m)
    else:
        raise ValueError(f"unsupported topology kind: {kind!r}")
    return HardwareGraph(num_nodes=n, edges=sorted(edges), kind=kind, m=m)


def apply_blocklist(hw: HardwareGraph, bad_nodes=(), bad_edges=()) -> HardwareGraph:
    """Remove defective qubits/couplers; node labels are preserved."""
    bad_nodes = set(bad_nodes)
    bad_edges = {(min(u, v), max(u, v)) for u, v in bad_edges}
    edges = [e for e in hw.edges
             if e not in bad_edges and e[0] not in bad_nodes
             and e[1] not in bad_nodes]
    return HardwareGraph(num_nodes=hw.num_nodes, edges=edges,
                         kind=hw.kind, m=hw.m)


# ---------------------------------------------------------------------------
# objective-side graphs
# ---------------------------------------------------------------------------

def objective_graph(model) -> Graph:
    """Graph view of an Ising model: node weights h, edge weights J."""
    edges = sorted(model.J)
    return Graph(num_nodes=model.num_vars, edges=list(edges),
                 node_weights=np.asarray(model.h, dtype=float).copy(),
                 edge_weights={e: model.J[e] for e in edges})


def marker_intersection_graph(M: int) -> Graph:
    """Complete graph K_M over markers."""
    if M < 1:
        raise ValueError("M must be >= 1")
    return Graph(M, [(i, j) for j in range(M) for i in range(j)])


def nucleosome_intersection_graph(N: int, L: int, boundary: str) -> Graph:
    """Distance-<=L circulant (periodic) or banded path (open) over nucleosomes."""
    if not 1 <= L < N:
        raise ValueError("require 1 <= L < N")
    edges = set()
    for n in range(N):
        for l in range(1, L + 1):
            if boundary == "periodic":
                a, b = n, (n + l) % N
                if a == b:
                    continue
                edges.add((min(a, b), max(a, b)))
            elif boundary == "open":
                if n + l < N:
                    edges.add((n, n + l))
            else:
                raise ValueError(f"unknown boundary {boundary!r}")
    if boundary == "periodic" and 2 * L >= N:
        warnings.warn("2L >= N under periodic boundaries: "
                      "wrap edges coincide and regularity claims do not hold")
    return Graph(N, sorted(edges))


def cartesian_product(g1: Graph, g2: Graph) -> Graph:
    """Cartesian product; node (a, b) is indexed b * |V1| + a."""
    n1 = g1.num_nodes
    edges = []
    for b in range(g2.num_nodes):
        for a1, a2 in g1.edges:
            edges.append((b * n1 + a1, b * n1 + a2))
    for b1, b2 in g2.edges:
        for a in range(n1):
            edges.append((b1 * n1 + a, b2 * n1 + a))
    return Graph(n1 * g2.num_nodes, edges)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def write_edge_list(g: Graph, path, kind="graph", m=0):
    kind = getattr(g, "kind", kind)
    m = getattr(g, "m", m)
    with open(path, "w") as fh:
        fh.write(f"{kind} {m} {g.num_nodes} {g.num_edges}\n")
        for u, v in g.edges:
            fh.write(f"{u} {v}\n")


def read_edge_list(path) -> Graph:
    with open(path) as fh:
        header = fh.readline().split()
        kind, m, n, ne = header[0], int(header[1]), int(header[2]), int(header[3])
        edges = [tuple(map(int, line.split())) for line in fh if line.strip()]
    if len(edges) != ne:
        raise ValueError(f"edge count mismatch: header {ne}, found {len(edges)}")
    if kind in MAX_DEGREE:
        return HardwareGraph(num_nodes=n, edges=edges, kind=kind, m=m)
    return Graph(num_nodes=n, edges=edges)
