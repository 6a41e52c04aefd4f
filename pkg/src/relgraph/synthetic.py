"""Planted-community benchmark graphs and small hand-checkable toys.

Each community owns a block of drugs, diseases and proteins.  Edges are drawn
densely inside a community; with probability ``noise`` an edge's far endpoint is
moved to a random node of another community.  A pool of shared proteins is
attached to drugs from every community.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import seeding
from .graph import Graph, NodeKind, RelationKind

FILES = {
    RelationKind.DRUG_PROTEIN: "drug_protein.tsv",
    RelationKind.DRUG_DISEASE: "drug_disease.tsv",
    RelationKind.PROTEIN_PROTEIN: "protein_protein.tsv",
}
NODE_FILE = "nodes.tsv"
MANIFEST_FILE = "manifest.json"


@dataclass
class SyntheticConfig:
    drugs: int = 60
    diseases: int = 50
    proteins: int = 300
    communities: int = 4
    noise: float = 0.05
    seed: int = 42
    shared_fraction: float = 0.1
    p_drug_protein: float = 0.25
    p_drug_disease: float = 0.5
    p_protein_protein: float = 0.05
    p_shared: float = 0.1

    def validate(self):
        if self.communities < 2:
            raise ValueError("communities must be >= 2")
        if min(self.drugs, self.diseases) < self.communities:
            raise ValueError("need at least one drug and one disease per community")
        shared = int(round(self.shared_fraction * self.proteins))
        if self.proteins - shared < self.communities:
            raise ValueError("need at least one unshared protein per community")
        for name in ("noise", "shared_fraction", "p_drug_protein", "p_drug_disease",
                     "p_protein_protein", "p_shared"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")


def _blocks(count, communities):
    return np.concatenate([np.full(len(b), c) for c, b in
                           enumerate(np.array_split(np.arange(count), communities))])


def generate(config):
    """Return ``(edges, nodes, manifest)`` for a planted-community graph.

    ``edges`` maps relation to a sorted list of (src, dst) names; ``nodes`` is
    ``[(name, kind, display), ...]``; the manifest records every node's
    community (``-1`` for shared proteins) and exact counts.
    """
    config.validate()
    rng = seeding.rng(config.seed, "synthetic")
    C = config.communities
    drugs = [f"DRUG{i:04d}" for i in range(config.drugs)]
    diseases = [f"DIS{i:04d}" for i in range(config.diseases)]
    proteins = [f"PROT{i:05d}" for i in range(config.proteins)]
    n_shared = int(round(config.shared_fraction * config.proteins))
    drug_comm = _blocks(config.drugs, C)
    dis_comm = _blocks(config.diseases, C)
    prot_comm = np.r_[_blocks(config.proteins - n_shared, C), np.full(n_shared, -1)]
    members_dis = [np.flatnonzero(dis_comm == c) for c in range(C)]
    members_prot = [np.flatnonzero(prot_comm == c) for c in range(C)]
    shared = np.flatnonzero(prot_comm == -1)

    def rewire(c, members):
        other = rng.integers(C - 1)
        other += other >= c
        return int(rng.choice(members[other]))

    def planted(src_comm, members, p, ensure_one):
        pairs = set()
        for s, c in enumerate(src_comm):
            own = members[c]
            hits = own[rng.random(len(own)) < p]
            if ensure_one and len(hits) == 0:
                hits = own[rng.integers(len(own)):][:1]
            for t in hits:
                if rng.random() < config.noise:
                    t = rewire(c, members)
                pairs.add((s, int(t)))
        return pairs

    dp = planted(drug_comm, members_prot, config.p_drug_protein, True)
    for s in range(config.drugs):
        for t in shared[rng.random(len(shared)) < config.p_shared]:
            dp.add((s, int(t)))
    dd = planted(drug_comm, members_dis, config.p_drug_disease, True)
    ppi = set()
    for c in range(C):
        own = members_prot[c]
        for i, a in enumerate(own):
            for b in own[i + 1:][rng.random(len(own) - i - 1) < config.p_protein_protein]:
                if rng.random() < config.noise:
                    b = rewire(c, members_prot)
                ppi.add((min(int(a), int(b)), max(int(a), int(b))))
    for a in shared:
        for b in rng.choice(config.proteins, size=3, replace=False):
            if a != b:
                ppi.add((min(int(a), int(b)), max(int(a), int(b))))

    edges = {
        RelationKind.DRUG_PROTEIN: [(drugs[s], proteins[t]) for s, t in sorted(dp)],
        RelationKind.DRUG_DISEASE: [(drugs[s], diseases[t]) for s, t in sorted(dd)],
        RelationKind.PROTEIN_PROTEIN: [(proteins[a], proteins[b]) for a, b in sorted(ppi)],
    }
    nodes = ([(n, NodeKind.DRUG, "") for n in drugs] + [(n, NodeKind.PROTEIN, "") for n in proteins]
             + [(n, NodeKind.DISEASE, "") for n in diseases])
    community = {}
    for names, comm in ((drugs, drug_comm), (proteins, prot_comm), (diseases, dis_comm)):
        community.update({n: int(c) for n, c in zip(names, comm)})
    cross_dd = sum(drug_comm[s] != dis_comm[t] for s, t in dd)
    manifest = {
        "config": asdict(config),
        "counts": {
            "nodes": {"drug": config.drugs, "protein": config.proteins, "disease": config.diseases},
            "edges": {rel.name.lower(): len(e) for rel, e in edges.items()},
            "cross_community_drug_disease": int(cross_dd),
        },
        "community": community,
    }
    return edges, nodes, manifest


def write_synthetic(config, out_dir):
    """Write edge TSVs, ``nodes.tsv`` and ``manifest.json``; return the file paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    edges, nodes, manifest = generate(config)
    paths = {}
    for rel, name in FILES.items():
        p = out / name
        p.write_text("".join(f"{a}\t{b}\n" for a, b in edges[rel]), encoding="utf-8")
        paths[rel.name.lower()] = p
    p = out / NODE_FILE
    p.write_text("".join(f"{n}\t{k.name.lower()}\t{d}\n" for n, k, d in nodes), encoding="utf-8")
    paths["nodes"] = p
    manifest["files"] = {k: v.name for k, v in sorted(paths.items())}
    p = out / MANIFEST_FILE
    p.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    paths["manifest"] = p
    return paths


def edge_files(out_dir):
    """``[(path, relation), ...]`` for :func:`relgraph.graph.load_graph`."""
    out = Path(out_dir)
    return [(out / name, rel) for rel, name in FILES.items()]


def synthetic_graph(config=None):
    edges, nodes, manifest = generate(config or SyntheticConfig())
    return Graph.from_edges(edges, nodes), manifest


def two_cliques(size=5):
    """Two protein cliques joined by a single edge; returns ``(graph, community_of_node)``."""
    a = [f"A{i}" for i in range(size)]
    b = [f"B{i}" for i in range(size)]
    ppi = [(x, y) for grp in (a, b) for i, x in enumerate(grp) for y in grp[i + 1:]]
    ppi.append((a[0], b[0]))
    g = Graph.from_edges({RelationKind.PROTEIN_PROTEIN: ppi})
    return g, np.array([0 if n.startswith("A") else 1 for n in g.names])


def toy_graph():
    """A hand-checkable graph: hub protein H bound by drugs D1-D3 and proteins P1, P2;
    drug D1 also targets P1 and treats disease X1; isolated disease X9."""
    nodes = [("X9", NodeKind.DISEASE, "isolated")]
    edges = {
        RelationKind.DRUG_PROTEIN: [("D1", "H"), ("D2", "H"), ("D3", "H"), ("D1", "P1")],
        RelationKind.PROTEIN_PROTEIN: [("H", "P1"), ("P2", "H")],
        RelationKind.DRUG_DISEASE: [("D1", "X1"), ("D2", "X2")],
    }
    return Graph.from_edges(edges, nodes)
