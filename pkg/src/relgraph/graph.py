"""Three-layer drug / protein / disease graph.

Edges are read from tab-separated files (one relation kind per file) and stored
as symmetric CSR adjacency per relation, so every relation can be walked in
both directions.  Node ids are dense integers assigned in first-seen order.

Binary cache layout (all integers little-endian)::

    magic          8 bytes   b"RGGRAPH\\x00"
    version        u32       GRAPH_CACHE_VERSION
    num_nodes      u64
    edge counts    3 x u64   DrugProtein, DrugDisease, ProteinProtein
    node table     per node: kind u8, name_len u32, name utf-8,
                             display_len u32, display utf-8
    edges          per relation (same order as the counts):
                   count x (src i32, dst i32), canonical orientation

Canonical orientation is (drug, protein), (drug, disease) and (low id, high id)
for protein-protein edges.
"""
from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

GRAPH_MAGIC = b"RGGRAPH\x00"
GRAPH_CACHE_VERSION = 1


class GraphError(ValueError):
    """Raised for malformed input files, kind conflicts and bad node ids."""


class NodeKind(enum.IntEnum):
    DRUG = 0
    PROTEIN = 1
    DISEASE = 2

    @classmethod
    def parse(cls, text):
        try:
            return cls[text.strip().upper()]
        except KeyError:
            raise GraphError(f"unknown node kind {text!r}") from None


class RelationKind(enum.IntEnum):
    DRUG_PROTEIN = 0
    DRUG_DISEASE = 1
    PROTEIN_PROTEIN = 2

    @property
    def endpoint_kinds(self):
        return _ENDPOINTS[self]

    @classmethod
    def parse(cls, text):
        key = text.strip().upper().replace("-", "_")
        aliases = {"DP": "DRUG_PROTEIN", "DD": "DRUG_DISEASE", "PPI": "PROTEIN_PROTEIN"}
        key = aliases.get(key, key)
        try:
            return cls[key]
        except KeyError:
            raise GraphError(f"unknown relation kind {text!r}") from None


_ENDPOINTS = {
    RelationKind.DRUG_PROTEIN: (NodeKind.DRUG, NodeKind.PROTEIN),
    RelationKind.DRUG_DISEASE: (NodeKind.DRUG, NodeKind.DISEASE),
    RelationKind.PROTEIN_PROTEIN: (NodeKind.PROTEIN, NodeKind.PROTEIN),
}


class View(enum.Enum):
    """Relation-filtered view of the graph."""

    MOA = (RelationKind.DRUG_PROTEIN, RelationKind.PROTEIN_PROTEIN)
    INDICATION = (RelationKind.DRUG_DISEASE,)
    FULL = (RelationKind.DRUG_PROTEIN, RelationKind.DRUG_DISEASE, RelationKind.PROTEIN_PROTEIN)

    @property
    def relations(self):
        return self.value


def _build_csr(num_nodes, pairs):
    """Symmetric CSR from canonical (src, dst) pairs; rows come out sorted."""
    if len(pairs) == 0:
        return np.zeros(num_nodes + 1, dtype=np.int64), np.zeros(0, dtype=np.int32)
    src = np.concatenate([pairs[:, 0], pairs[:, 1]])
    dst = np.concatenate([pairs[:, 1], pairs[:, 0]])
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    indptr = np.zeros(num_nodes + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=num_nodes), out=indptr[1:])
    return indptr, dst.astype(np.int32)


class GraphView:
    """Neighbor queries restricted to the relations of one :class:`View`."""

    def __init__(self, graph, view):
        self.graph = graph
        self.view = view
        self._csr = None

    @property
    def num_nodes(self):
        return self.graph.num_nodes

    def csr(self):
        """``(indptr, indices)`` for this view; each row sorted and duplicate-free."""
        if self._csr is None:
            rels = self.view.relations
            if len(rels) == 1:
                self._csr = self.graph._adj[rels[0]]
            else:
                n = self.graph.num_nodes
                parts = [self.graph._adj[r] for r in rels]
                deg = sum(np.diff(ip) for ip, _ in parts)
                indptr = np.zeros(n + 1, dtype=np.int64)
                np.cumsum(deg, out=indptr[1:])
                indices = np.empty(indptr[-1], dtype=np.int32)
                for v in range(n):
                    # relations join disjoint kind pairs, so plain concatenation has no duplicates
                    row = np.concatenate([idx[ip[v]:ip[v + 1]] for ip, idx in parts])
                    row.sort()
                    indices[indptr[v]:indptr[v + 1]] = row
                self._csr = (indptr, indices)
        return self._csr

    def neighbors(self, node):
        node = self.graph._check_node(node)
        indptr, indices = self.csr()
        return indices[indptr[node]:indptr[node + 1]]

    def degrees(self):
        return np.diff(self.csr()[0])


@dataclass(eq=False)
class Graph:
    """Immutable multi-relation graph.  Build with :func:`load_graph` or :meth:`from_edges`."""

    names: list
    kinds: np.ndarray
    display_names: list
    edges: dict
    load_info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.kinds = np.asarray(self.kinds, dtype=np.uint8)
        self.kinds.setflags(write=False)
        self._index = {name: i for i, name in enumerate(self.names)}
        n = len(self.names)
        self._adj = {}
        for rel in RelationKind:
            pairs = np.asarray(self.edges.get(rel, np.zeros((0, 2))), dtype=np.int64).reshape(-1, 2)
            self.edges[rel] = pairs
            pairs.setflags(write=False)
            indptr, indices = _build_csr(n, pairs)
            indptr.setflags(write=False)
            indices.setflags(write=False)
            self._adj[rel] = (indptr, indices)
        self._views = {}

    @classmethod
    def from_edges(cls, edge_lists, nodes=()):
        """Build a graph from ``{RelationKind: [(src_name, dst_name), ...]}``.

        ``nodes`` is an optional sequence of ``(name, NodeKind, display_name)``
        registered before any edge, in order.  Duplicate edges are merged and
        protein self-loops dropped; the counts land in ``load_info``.
        """
        builder = _Builder()
        for name, kind, display in nodes:
            builder.declare(name, NodeKind(kind), display)
        for rel, rows in edge_lists.items():
            rel = RelationKind(rel)
            for src, dst in rows:
                builder.add_edge(rel, src, dst)
        return builder.build()

    @property
    def num_nodes(self):
        return len(self.names)

    def node_id(self, name):
        try:
            return self._index[name]
        except KeyError:
            raise GraphError(f"unknown node identifier {name!r}") from None

    def kind(self, node):
        return NodeKind(int(self.kinds[self._check_node(node)]))

    def nodes_of_kind(self, kind):
        return np.flatnonzero(self.kinds == int(kind))

    def num_edges(self, relation):
        return len(self.edges[RelationKind(relation)])

    def view(self, view=View.FULL):
        if view not in self._views:
            self._views[view] = GraphView(self, view)
        return self._views[view]

    def neighbors(self, node, view=View.FULL):
        return self.view(view).neighbors(node)

    def has_edge(self, relation, src, dst):
        indptr, indices = self._adj[RelationKind(relation)]
        row = indices[indptr[src]:indptr[src + 1]]
        i = np.searchsorted(row, dst)
        return bool(i < len(row) and row[i] == dst)

    def _check_node(self, node):
        node = int(node)
        if not 0 <= node < self.num_nodes:
            raise GraphError(f"unknown node id {node}")
        return node

    def same_as(self, other):
        """Structural identity: same ids, names, kinds and adjacency."""
        if self.names != other.names or not np.array_equal(self.kinds, other.kinds):
            return False
        for rel in RelationKind:
            a, b = self._adj[rel], other._adj[rel]
            if not (np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])):
                return False
        return True


class _Builder:
    def __init__(self):
        self.names = []
        self.kinds = []
        self.display = []
        self.index = {}
        self.edge_sets = {rel: set() for rel in RelationKind}
        self.edge_order = {rel: [] for rel in RelationKind}
        self.duplicates = 0
        self.self_loops = 0

    def declare(self, name, kind, display=None):
        if not name:
            raise GraphError("empty node identifier")
        if name in self.index:
            i = self.index[name]
            if self.kinds[i] != kind:
                raise GraphError(
                    f"kind conflict: {name!r} used as {NodeKind(self.kinds[i]).name.lower()} "
                    f"and {kind.name.lower()}")
            if display and not self.display[i]:
                self.display[i] = display
            return i
        i = len(self.names)
        self.index[name] = i
        self.names.append(name)
        self.kinds.append(int(kind))
        self.display.append(display or "")
        return i

    def add_edge(self, rel, src, dst):
        src_kind, dst_kind = rel.endpoint_kinds
        a = self.declare(src, src_kind)
        b = self.declare(dst, dst_kind)
        if a == b:
            self.self_loops += 1
            return
        if rel is RelationKind.PROTEIN_PROTEIN and a > b:
            a, b = b, a
        key = (a, b)
        if key in self.edge_sets[rel]:
            self.duplicates += 1
            return
        self.edge_sets[rel].add(key)
        self.edge_order[rel].append(key)

    def build(self):
        edges = {rel: np.array(self.edge_order[rel], dtype=np.int64).reshape(-1, 2)
                 for rel in RelationKind}
        info = {"duplicate_edges": self.duplicates, "self_loops_dropped": self.self_loops}
        return Graph(self.names, np.array(self.kinds, dtype=np.uint8), self.display, edges, info)


def _read_rows(path, ncols_min, ncols_max):
    path = Path(path)
    if not path.is_file():
        raise GraphError(f"{path}: no such file")
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            cols = line.split("\t")
            if not ncols_min <= len(cols) <= ncols_max or not all(c.strip() for c in cols[:ncols_min]):
                raise GraphError(f"{path}:{lineno}: malformed row {line!r}")
            yield lineno, [c.strip() for c in cols]


def load_graph(edge_files, node_file=None):
    """Load a :class:`Graph` from ``[(path, RelationKind), ...]`` edge TSVs.

    Each edge row is ``src<TAB>dst``; lines starting with ``#`` are comments.
    The optional node file has rows ``id<TAB>kind[<TAB>display_name]`` and its
    nodes get the first ids.  Undeclared nodes take their kind from the
    relation of the file where they first appear.
    """
    builder = _Builder()
    if node_file is not None:
        for lineno, cols in _read_rows(node_file, 2, 3):
            try:
                builder.declare(cols[0], NodeKind.parse(cols[1]), cols[2] if len(cols) > 2 else "")
            except GraphError as exc:
                raise GraphError(f"{node_file}:{lineno}: {exc}") from None
    for path, rel in edge_files:
        rel = RelationKind.parse(rel) if isinstance(rel, str) else RelationKind(rel)
        for lineno, cols in _read_rows(path, 2, 2):
            try:
                builder.add_edge(rel, cols[0], cols[1])
            except GraphError as exc:
                raise GraphError(f"{path}:{lineno}: {exc}") from None
    if not builder.names:
        raise GraphError("empty input: no nodes or edges were read")
    return builder.build()


def neighbors(graph, node, view=View.FULL):
    """Sorted, duplicate-free neighbors of ``node`` under ``view``."""
    return graph.neighbors(node, view)


def graph_stats(graph):
    """Node counts per kind, edge counts per relation and the full-view degree histogram."""
    stats = {
        "nodes": {k.name.lower(): int(np.count_nonzero(graph.kinds == k)) for k in NodeKind},
        "edges": {r.name.lower(): graph.num_edges(r) for r in RelationKind},
        "num_nodes": graph.num_nodes,
    }
    if graph.num_nodes:
        hist = np.bincount(graph.view(View.FULL).degrees())
    else:
        hist = np.zeros(1, dtype=np.int64)
    stats["degree_histogram"] = [int(c) for c in hist]
    return stats


def format_stats(stats):
    lines = [f"nodes\t{stats['num_nodes']}"]
    lines += [f"nodes.{k}\t{v}" for k, v in stats["nodes"].items()]
    lines += [f"edges.{k}\t{v}" for k, v in stats["edges"].items()]
    lines.append("degree_histogram\t" + " ".join(str(c) for c in stats["degree_histogram"]))
    return "\n".join(lines) + "\n"


def save_graph_cache(graph, path):
    counts = [graph.num_edges(r) for r in RelationKind]
    with open(path, "wb") as fh:
        fh.write(GRAPH_MAGIC)
        fh.write(struct.pack("<IQ3Q", GRAPH_CACHE_VERSION, graph.num_nodes, *counts))
        for name, kind, disp in zip(graph.names, graph.kinds, graph.display_names):
            nb, db = name.encode("utf-8"), disp.encode("utf-8")
            fh.write(struct.pack("<BI", int(kind), len(nb)) + nb + struct.pack("<I", len(db)) + db)
        for rel in RelationKind:
            fh.write(graph.edges[rel].astype("<i4").tobytes())


def load_graph_cache(path):
    data = Path(path).read_bytes()
    if data[:8] != GRAPH_MAGIC:
        raise GraphError(f"{path}: not a graph cache (bad magic)")
    head = struct.Struct("<IQ3Q")
    try:
        version, n, *counts = head.unpack_from(data, 8)
    except struct.error:
        raise GraphError(f"{path}: truncated header") from None
    if version != GRAPH_CACHE_VERSION:
        raise GraphError(f"{path}: cache version {version}, expected {GRAPH_CACHE_VERSION}")
    pos = 8 + head.size
    names, kinds, display = [], [], []
    try:
        for _ in range(n):
            kind, ln = struct.unpack_from("<BI", data, pos)
            pos += 5
            names.append(data[pos:pos + ln].decode("utf-8"))
            pos += ln
            (ld,) = struct.unpack_from("<I", data, pos)
            pos += 4
            display.append(data[pos:pos + ld].decode("utf-8"))
            pos += ld
            kinds.append(kind)
    except struct.error:
        raise GraphError(f"{path}: truncated node table") from None
    edges = {}
    for rel, count in zip(RelationKind, counts):
        nbytes = 8 * count
        if pos + nbytes > len(data):
            raise GraphError(f"{path}: truncated edge block")
        edges[rel] = np.frombuffer(data, dtype="<i4", count=2 * count, offset=pos).reshape(-1, 2).astype(np.int64)
        pos += nbytes
    if pos != len(data):
        raise GraphError(f"{path}: trailing bytes after edge blocks")
    return Graph(names, np.array(kinds, dtype=np.uint8), display, edges)
