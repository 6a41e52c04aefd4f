"""
Neighborhood contexts and SkipGram embeddings
=============================================

A walk through context sampling on a tiny graph, then training on two
cliques joined by one edge.
"""

# the toy graph: a hub protein H bound by three drugs
import numpy as np
from relgraph import View
from relgraph.contexts import deepwalk_walks, nbne_groups, node2vec_walks
from relgraph.synthetic import toy_graph, two_cliques

g = toy_graph()
h = g.node_id("H")
print("neighbors of H:", [g.names[v] for v in g.neighbors(h, View.MOA)])

# NBNE: each node's neighbor list is shuffled n times and cut into chunks of k
groups = nbne_groups(g.view(View.MOA), k=2, n=3, seed=0)
for grp in groups:
    if grp[0] == h:
        print("group", [g.names[v] for v in grp])

# the walk baselines see the full graph; p = q = 1 makes node2vec a plain walk
walks = deepwalk_walks(g.view(View.FULL), num_walks=1, walk_length=6, seed=0)
print("first deepwalk walk:", [g.names[v] for v in walks[0]])
same = node2vec_walks(g.view(View.FULL), 1, 6, p=1.0, q=1.0, seed=0)
print("node2vec p=q=1 matches deepwalk:", all(np.array_equal(a, b) for a, b in zip(walks, same)))

# two 5-cliques: nodes inside a clique should end up close together
from relgraph.skipgram import TrainerConfig, cosine_matrix, init_embeddings, nearest, train

g, comm = two_cliques(5)
corpus = nbne_groups(g.view(View.MOA), k=5, n=30, seed=5)
table = train(corpus, TrainerConfig(dim=8, epochs=5, seed=5), init_embeddings(g.num_nodes, 8, seed=5))
cos = cosine_matrix(table)
same = comm[:, None] == comm[None, :]
print("mean cosine inside a clique: %.3f" % cos[same & ~np.eye(len(comm), dtype=bool)].mean())
print("mean cosine across cliques:  %.3f" % cos[~same].mean())

a1 = g.node_id("A1")
print("nearest to A1:", [(g.names[v], round(s, 3)) for v, s in nearest(table, a1, 3)])
