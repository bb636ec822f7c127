"""Co-occurrence counts as a weighted undirected word network.

Nodes are word types; an edge weight is the co-occurrence count of the
pair. Same-type co-occurrence is kept as a node attribute instead of a
self-loop so path costs stay clean. Together the edges and node
attributes carry exactly the information of the count matrix.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np
from scipy import sparse

from .corpus import Vocabulary
from .count_model import CooccurrenceMatrix, WindowConfig
from .errors import FormatError, UnknownWordError


class SemanticGraph:
    """Immutable weighted word graph.

    `nodes` maps token -> same-type co-occurrence count (0 if none);
    `edges` maps (a, b) with a < b -> positive weight.
    """

    def __init__(
        self,
        nodes: dict[str, int],
        edges: dict[tuple[str, str], int],
    ):
        for (a, b), w in edges.items():
            if a >= b:
                raise ValueError(f"edge key ({a!r}, {b!r}) must be ordered a < b")
            if w <= 0:
                raise ValueError(f"edge ({a!r}, {b!r}) has non-positive weight {w}")
            if a not in nodes or b not in nodes:
                raise ValueError(f"edge ({a!r}, {b!r}) references a missing node")
        self.nodes = dict(nodes)
        self.edges = dict(edges)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, SemanticGraph)
            and self.nodes == other.nodes
            and self.edges == other.edges
        )

    def __len__(self) -> int:
        return len(self.nodes)

    def edge_weight(self, a: str, b: str) -> int | None:
        key = (a, b) if a < b else (b, a)
        return self.edges.get(key)

    def neighbors(self, token: str) -> list[tuple[str, int]]:
        if token not in self.nodes:
            raise UnknownWordError(token, "the graph")
        out = []
        for (a, b), w in self.edges.items():
            if a == token:
                out.append((b, w))
            elif b == token:
                out.append((a, w))
        return sorted(out)


def from_counts(m: CooccurrenceMatrix, min_weight: int = 1) -> SemanticGraph:
    """Build the co-occurrence graph, keeping edges with weight >= min_weight."""
    if min_weight < 1:
        raise ValueError("min_weight must be >= 1")
    vocab = m.vocab
    nodes = {t: 0 for t in vocab.tokens}
    coo = m.counts.tocoo()
    edges: dict[tuple[str, str], int] = {}
    for r, c, v in zip(coo.row, coo.col, coo.data):
        if r == c:
            nodes[vocab.token_at(int(r))] = int(v)
        elif r < c:
            if v >= min_weight:
                ta, tb = vocab.token_at(int(r)), vocab.token_at(int(c))
                key = (ta, tb) if ta < tb else (tb, ta)
                edges[key] = int(v)
    return SemanticGraph(nodes, edges)


def to_counts(
    g: SemanticGraph, vocab: Vocabulary, window: WindowConfig
) -> CooccurrenceMatrix:
    """Rebuild the count matrix from a graph built at min_weight 1.

    Inverse of from_counts given the original vocabulary and window; with
    min_weight 1 the round trip is exact.
    """
    rows: list[int] = []
    cols: list[int] = []
    vals: list[int] = []
    for token, self_weight in g.nodes.items():
        if self_weight > 0:
            i = vocab.index_of(token)
            rows.append(i)
            cols.append(i)
            vals.append(self_weight)
    for (a, b), w in g.edges.items():
        ia, ib = vocab.index_of(a), vocab.index_of(b)
        rows.extend((ia, ib))
        cols.extend((ib, ia))
        vals.extend((w, w))
    counts = sparse.coo_matrix(
        (vals, (rows, cols)), shape=(len(vocab), len(vocab)), dtype=np.int64
    )
    return CooccurrenceMatrix(vocab, counts.tocsr(), window)


def intersection(ga: SemanticGraph, gb: SemanticGraph) -> SemanticGraph:
    """Common ground of two graphs: shared nodes, shared edges, min weights."""
    nodes = {
        t: min(wa, gb.nodes[t]) for t, wa in ga.nodes.items() if t in gb.nodes
    }
    edges = {
        key: min(wa, gb.edges[key])
        for key, wa in ga.edges.items()
        if key in gb.edges
    }
    return SemanticGraph(nodes, edges)


def degree_ranking(g: SemanticGraph, top: int | None = None) -> list[tuple[str, int]]:
    """Nodes by total incident edge weight, descending; ties lexicographic.

    Same-type counts are node attributes, not edges, so they do not
    contribute to the degree.
    """
    totals = {t: 0 for t in g.nodes}
    for (a, b), w in g.edges.items():
        totals[a] += w
        totals[b] += w
    ranked = sorted(totals.items(), key=lambda tw: (-tw[1], tw[0]))
    return ranked[:top] if top is not None else ranked


@dataclass(frozen=True)
class SemanticPath:
    tokens: tuple[str, ...]
    cost: float


def shortest_path(g: SemanticGraph, a: str, b: str) -> SemanticPath | None:
    """Cheapest route between two words under edge cost 1/weight.

    Stronger association means a shorter step. Among equal-cost routes the
    lexicographically smallest token sequence wins. Returns None when the
    words are in different components.
    """
    for token in (a, b):
        if token not in g.nodes:
            raise UnknownWordError(token, "the graph")
    if a == b:
        return SemanticPath(tokens=(a,), cost=0.0)
    adjacency: dict[str, list[tuple[str, int]]] = {t: [] for t in g.nodes}
    for (x, y), w in g.edges.items():
        adjacency[x].append((y, w))
        adjacency[y].append((x, w))
    heap: list[tuple[float, tuple[str, ...]]] = [(0.0, (a,))]
    settled: set[str] = set()
    while heap:
        cost, path = heapq.heappop(heap)
        node = path[-1]
        if node in settled:
            continue
        settled.add(node)
        if node == b:
            return SemanticPath(tokens=path, cost=cost)
        for neighbor, weight in adjacency[node]:
            if neighbor not in settled:
                heapq.heappush(heap, (cost + 1.0 / weight, path + (neighbor,)))
    return None


EDGE_LIST_NODE_PREFIX = "# node\t"


def export_edge_list(g: SemanticGraph) -> str:
    """TSV edge list: `tokenA<TAB>tokenB<TAB>weight` with tokenA < tokenB.

    The comment header carries the node count and one `# node` line per
    node with its same-type count, so isolated nodes survive a round
    trip. Data lines are sorted; an empty graph exports the count header
    only.
    """
    lines = [f"# nodes: {len(g.nodes)}"]
    for token in sorted(g.nodes):
        lines.append(f"{EDGE_LIST_NODE_PREFIX}{token}\t{g.nodes[token]}")
    for (a, b), w in sorted(g.edges.items()):
        lines.append(f"{a}\t{b}\t{w}")
    return "\n".join(lines) + "\n"


def import_edge_list(text: str) -> SemanticGraph:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# nodes:"):
        raise FormatError("edge list must start with a '# nodes:' header")
    nodes: dict[str, int] = {}
    edges: dict[tuple[str, str], int] = {}
    for line in lines[1:]:
        if not line:
            continue
        if line.startswith(EDGE_LIST_NODE_PREFIX):
            token, weight = line[len(EDGE_LIST_NODE_PREFIX) :].split("\t")
            nodes[token] = int(weight)
            continue
        if line.startswith("#"):
            continue
        a, b, w = line.split("\t")
        if a >= b:
            raise FormatError(f"edge line {line!r} violates tokenA < tokenB")
        edges[(a, b)] = int(w)
    declared = int(lines[0].split(":", 1)[1])
    if declared != len(nodes):
        raise FormatError(
            f"header declares {declared} nodes but {len(nodes)} node lines found"
        )
    return SemanticGraph(nodes, edges)


def export_graphml(g: SemanticGraph) -> str:
    """GraphML rendering with edge weights and same-type counts."""
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">',
        '  <key id="w" for="edge" attr.name="weight" attr.type="long"/>',
        '  <key id="sw" for="node" attr.name="self_weight" attr.type="long"/>',
        '  <graph edgedefault="undirected">',
    ]
    for token in sorted(g.nodes):
        et = escape(token, {'"': "&quot;"})
        out.append(
            f'    <node id="{et}"><data key="sw">{g.nodes[token]}</data></node>'
        )
    for (a, b), w in sorted(g.edges.items()):
        ea = escape(a, {'"': "&quot;"})
        eb = escape(b, {'"': "&quot;"})
        out.append(
            f'    <edge source="{ea}" target="{eb}"><data key="w">{w}</data></edge>'
        )
    out.extend(["  </graph>", "</graphml>"])
    return "\n".join(out) + "\n"
