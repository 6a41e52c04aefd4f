"""Table constructors and finite-difference probes shared by several test modules."""
import numpy as np

from relgraph.skipgram import EmbeddingTable, sg_pair_objective


def table64(r, r_out):
    return EmbeddingTable(np.asarray(r, dtype=np.float64), np.asarray(r_out, dtype=np.float64))


def random_table(rng, n, d, scale=1.0):
    return table64(rng.normal(0, scale, (n, d)), rng.normal(0, scale, (n, d)))


def fd_pair_gradients(table, center, target, negatives, h=1e-5):
    """Central differences of sg_pair_objective over the touched rows."""
    def f():
        return sg_pair_objective(table, center, target, negatives)

    def diff(mat, row):
        g = np.zeros(mat.shape[1])
        for j in range(mat.shape[1]):
            old = mat[row, j]
            mat[row, j] = old + h
            up = f()
            mat[row, j] = old - h
            down = f()
            mat[row, j] = old
            g[j] = (up - down) / (2 * h)
        return g
    return diff(table.r, center), {n: diff(table.r_out, n) for n in {target, *negatives}}
