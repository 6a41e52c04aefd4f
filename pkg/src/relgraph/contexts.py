"""Training contexts for SkipGram: NBNE neighbor groups and random walks.

All samplers draw from a per-node random stream derived from ``(seed, node id)``,
so the output depends only on the view and the configuration.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from . import seeding
from .graph import View


class Corpus:
    """A sequence of context groups stored as one flat id array plus offsets.

    Group ``i`` is ``flat[offsets[i]:offsets[i + 1]]``; iterating yields numpy arrays.
    """

    def __init__(self, flat, offsets):
        self.flat = np.ascontiguousarray(flat, dtype=np.int32)
        self.offsets = np.ascontiguousarray(offsets, dtype=np.int64)

    @classmethod
    def from_groups(cls, groups):
        groups = [np.asarray(g, dtype=np.int32) for g in groups]
        offsets = np.zeros(len(groups) + 1, dtype=np.int64)
        if groups:
            np.cumsum([len(g) for g in groups], out=offsets[1:])
            flat = np.concatenate(groups)
        else:
            flat = np.zeros(0, dtype=np.int32)
        return cls(flat, offsets)

    @classmethod
    def concat(cls, corpora):
        corpora = list(corpora)
        flat = np.concatenate([c.flat for c in corpora]) if corpora else np.zeros(0, np.int32)
        offsets = [np.zeros(1, dtype=np.int64)]
        base = 0
        for c in corpora:
            offsets.append(c.offsets[1:] + base)
            base += len(c.flat)
        return cls(flat, np.concatenate(offsets))

    def __len__(self):
        return len(self.offsets) - 1

    def __getitem__(self, i):
        if i < 0:
            i += len(self)
        if not 0 <= i < len(self):
            raise IndexError(i)
        return self.flat[self.offsets[i]:self.offsets[i + 1]]

    def __iter__(self):
        for i in range(len(self)):
            yield self.flat[self.offsets[i]:self.offsets[i + 1]]

    def lengths(self):
        return np.diff(self.offsets)

    def counts(self, num_nodes):
        """Occurrences of every node id in the corpus."""
        return np.bincount(self.flat, minlength=num_nodes)

    def dump(self, path):
        """Write one group per line as space-separated node ids."""
        with open(path, "w", encoding="utf-8") as fh:
            for g in self:
                fh.write(" ".join(map(str, g.tolist())) + "\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_groups([[int(t) for t in line.split()] for line in fh if line.strip()])


METHODS = ("nbne", "deepwalk", "node2vec")


@dataclass
class SamplerConfig:
    method: str = "nbne"
    k: int = 5
    n: int = 30
    num_walks: int = 7
    walk_length: int = 25
    p: float = 1.0
    q: float = 1.0
    seed: int = 42

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.k < 1 or self.n < 1:
            raise ValueError("k and n must be >= 1")
        if self.num_walks < 1 or self.walk_length < 2:
            raise ValueError("num_walks must be >= 1 and walk_length >= 2")
        if not (self.p > 0 and self.q > 0):
            raise ValueError("p and q must be > 0")


def nbne_groups(view, k, n, seed):
    """Neighborhood-permutation groups.

    For every node with at least one neighbor, draw ``n`` uniform permutations
    of its neighbors, cut each into consecutive slices of ``k`` (the last one
    may be shorter) and emit ``[node, *slice]`` for each slice.
    """
    if k < 1 or n < 1:
        raise ValueError("k and n must be >= 1")
    indptr, indices = view.csr()
    degrees = np.diff(indptr)
    groups_per_perm = -(-degrees // k)
    total_groups = int(n * groups_per_perm.sum())
    total_ids = int(n * (degrees + groups_per_perm).sum())
    flat = np.empty(total_ids, dtype=np.int32)
    offsets = np.empty(total_groups + 1, dtype=np.int64)
    offsets[0] = 0
    pos = g = 0
    for v in range(view.num_nodes):
        deg = int(degrees[v])
        if deg == 0:
            continue
        row = indices[indptr[v]:indptr[v + 1]]
        rng = seeding.rng(seed, "nbne", v)
        for _ in range(n):
            perm = row[rng.permutation(deg)]
            for start in range(0, deg, k):
                chunk = perm[start:start + k]
                flat[pos] = v
                flat[pos + 1:pos + 1 + len(chunk)] = chunk
                pos += 1 + len(chunk)
                g += 1
                offsets[g] = pos
    return Corpus(flat, offsets)


@numba.njit(cache=True)
def _pick_uniform(u, deg):
    i = int(u * deg)
    return i if i < deg else deg - 1


@numba.njit(cache=True)
def _is_neighbor(indptr, indices, t, x):
    lo = indptr[t]
    hi = indptr[t + 1]
    while lo < hi:
        mid = (lo + hi) >> 1
        if indices[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return lo < indptr[t + 1] and indices[lo] == x


@numba.njit(cache=True)
def _walks_from(indptr, indices, start, draws, inv_p, inv_q, biased, weights, out, lengths):
    """Fill ``out[w, :]`` with walk ``w`` from ``start``; ``draws`` holds one uniform per step."""
    num_walks, steps = draws.shape
    for w in range(num_walks):
        out[w, 0] = start
        prev = -1
        cur = start
        length = 1
        for s in range(steps):
            lo = indptr[cur]
            deg = indptr[cur + 1] - lo
            if deg == 0:
                break
            if not biased or prev < 0:
                nxt = indices[lo + _pick_uniform(draws[w, s], deg)]
            else:
                total = 0.0
                for j in range(deg):
                    x = indices[lo + j]
                    if x == prev:
                        wt = inv_p
                    elif _is_neighbor(indptr, indices, prev, x):
                        wt = 1.0
                    else:
                        wt = inv_q
                    total += wt
                    weights[j] = total
                target = draws[w, s] * total
                j = 0
                while j < deg - 1 and weights[j] <= target:
                    j += 1
                nxt = indices[lo + j]
            out[w, length] = nxt
            length += 1
            prev = cur
            cur = nxt
        lengths[w] = length


def _walk_corpus(view, num_walks, walk_length, seed, p, q):
    if walk_length < 2 or num_walks < 1:
        raise ValueError("num_walks must be >= 1 and walk_length >= 2")
    indptr, indices = view.csr()
    indptr = np.ascontiguousarray(indptr, dtype=np.int64)
    indices = np.ascontiguousarray(indices, dtype=np.int32)
    degrees = np.diff(indptr)
    biased = not (p == 1.0 and q == 1.0)
    flats, lens = [], []
    out = np.empty((num_walks, walk_length), dtype=np.int32)
    lengths = np.empty(num_walks, dtype=np.int64)
    weights = np.empty(max(1, int(degrees.max(initial=0))), dtype=np.float64)
    for v in np.flatnonzero(degrees > 0):
        rng = seeding.rng(seed, "walk", int(v))
        draws = rng.random((num_walks, walk_length - 1))
        _walks_from(indptr, indices, int(v), draws, 1.0 / p, 1.0 / q, biased, weights, out, lengths)
        for w in range(num_walks):
            flats.append(out[w, :lengths[w]].copy())
            lens.append(lengths[w])
    if not flats:
        return Corpus(np.zeros(0, np.int32), np.zeros(1, np.int64))
    offsets = np.zeros(len(lens) + 1, dtype=np.int64)
    np.cumsum(lens, out=offsets[1:])
    return Corpus(np.concatenate(flats), offsets)


def deepwalk_walks(view, num_walks, walk_length, seed):
    """Uniform random walks, ``num_walks`` per non-isolated node, grouped by start node."""
    return _walk_corpus(view, num_walks, walk_length, seed, 1.0, 1.0)


def node2vec_walks(view, num_walks, walk_length, p, q, seed):
    """Second-order walks: step t -> v -> x weighted 1/p (x == t), 1 (x ~ t) or 1/q.

    With ``p == q == 1`` the walks are identical to :func:`deepwalk_walks` for
    the same seed (both consume one uniform per step the same way).
    """
    if not (p > 0 and q > 0):
        raise ValueError("p and q must be > 0")
    return _walk_corpus(view, num_walks, walk_length, seed, float(p), float(q))


def sample_contexts(graph, config):
    """Corpus for ``config.method``: NBNE over the mechanism-of-action and
    indication views (concatenated), walk baselines over the full view."""
    if config.method == "nbne":
        return Corpus.concat(
            nbne_groups(graph.view(v), config.k, config.n, seeding.int_seed(config.seed, "sampler", i))
            for i, v in enumerate((View.MOA, View.INDICATION)))
    full = graph.view(View.FULL)
    if config.method == "deepwalk":
        return deepwalk_walks(full, config.num_walks, config.walk_length, config.seed)
    return node2vec_walks(full, config.num_walks, config.walk_length, config.p, config.q, config.seed)
