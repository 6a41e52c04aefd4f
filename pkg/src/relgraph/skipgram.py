"""SkipGram node embeddings.

Training maximizes the negative-sampling surrogate of the group log-likelihood;
:func:`softmax_prob`, :func:`group_log_likelihood` and
:func:`corpus_log_likelihood` evaluate the exact full-softmax objective and are
meant for monitoring and testing, not for large vocabularies.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np

from . import seeding
from .contexts import Corpus

EMB_MAGIC = b"RGEMB\x00\x00\x00"
EMB_VERSION = 1

DETERMINISTIC = "deterministic-single-worker"
PARALLEL = "parallel-lock-free"


class EmbeddingError(ValueError):
    pass


class TrainingDiverged(FloatingPointError):
    def __init__(self, epoch, group):
        super().__init__(f"non-finite value during training at epoch {epoch}, group index {group}")
        self.epoch = epoch
        self.group = group


@dataclass(eq=False)
class EmbeddingTable:
    """Input vectors ``r`` (the node representations) and output vectors ``r_out``.

    ``names`` and ``kinds`` are optional node metadata carried along for
    featurization and text export.
    """

    r: np.ndarray
    r_out: np.ndarray
    names: list | None = None
    kinds: np.ndarray | None = None

    def __post_init__(self):
        if self.r.shape != self.r_out.shape or self.r.ndim != 2:
            raise EmbeddingError(f"input/output shapes differ: {self.r.shape} vs {self.r_out.shape}")

    @property
    def num_nodes(self):
        return self.r.shape[0]

    @property
    def dim(self):
        return self.r.shape[1]

    def copy(self):
        return EmbeddingTable(self.r.copy(), self.r_out.copy(), self.names, self.kinds)

    def equals(self, other):
        return np.array_equal(self.r, other.r) and np.array_equal(self.r_out, other.r_out)

    def with_graph(self, graph):
        self.names = list(graph.names)
        self.kinds = np.asarray(graph.kinds)
        return self

    def node_id(self, name):
        if self.names is None:
            raise EmbeddingError("table carries no node names")
        try:
            return self.names.index(name)
        except ValueError:
            raise EmbeddingError(f"unknown node identifier {name!r}") from None


@dataclass
class TrainerConfig:
    dim: int = 128
    epochs: int = 5
    lr: float = 0.025
    window: int = 6
    negatives: int = 5
    seed: int = 42
    mode: str = DETERMINISTIC
    threads: int = 1

    def __post_init__(self):
        if self.dim < 1 or self.window < 1 or self.negatives < 1 or self.epochs < 0:
            raise ValueError("dim, window and negatives must be >= 1; epochs >= 0")
        if not self.lr > 0:
            raise ValueError("lr must be > 0")
        if self.mode not in (DETERMINISTIC, PARALLEL):
            raise ValueError(f"unknown trainer mode {self.mode!r}")


def init_embeddings(num_nodes, dim, seed):
    """``r`` uniform in [-0.5/dim, 0.5/dim], ``r_out`` zero; float32."""
    if num_nodes < 1 or dim < 1:
        raise ValueError("num_nodes and dim must be >= 1")
    rng = seeding.rng(seed, "init")
    r = ((rng.random((num_nodes, dim)) - 0.5) / dim).astype(np.float32)
    return EmbeddingTable(r, np.zeros((num_nodes, dim), dtype=np.float32))


def _check_finite(table):
    if not (np.isfinite(table.r).all() and np.isfinite(table.r_out).all()):
        raise EmbeddingError("embedding table has non-finite entries")


def _log_softmax_row(table, center):
    logits = table.r_out.astype(np.float64) @ table.r[center].astype(np.float64)
    top = logits.max()
    return logits - top - np.log(np.exp(logits - top).sum())


def log_softmax_prob(table, target, center):
    _check_finite(table)
    return float(_log_softmax_row(table, center)[target])


def softmax_prob(table, target, center):
    """exp(r_out[target] . r[center]) / sum_v exp(r_out[v] . r[center])."""
    return float(np.exp(log_softmax_prob(table, target, center)))


def group_log_likelihood(table, group):
    """(1/|s|) * sum over ordered pairs (i != j) in the group of log p(j | i)."""
    group = np.asarray(group, dtype=np.int64)
    if len(group) < 2:
        raise ValueError("group needs at least two members")
    if len(np.unique(group)) != len(group):
        raise ValueError("group members must be distinct")
    _check_finite(table)
    total = 0.0
    for center in group:
        logp = _log_softmax_row(table, center)
        total += logp[group].sum() - logp[center]
    return total / len(group)


def corpus_log_likelihood(table, corpus):
    """Mean group log-likelihood over the corpus."""
    if len(corpus) == 0:
        raise ValueError("empty corpus")
    _check_finite(table)
    # one log-softmax row per distinct center, reused across groups
    cache = {}
    total = 0.0
    for group in corpus:
        group = np.asarray(group, dtype=np.int64)
        if len(group) < 2 or len(np.unique(group)) != len(group):
            raise ValueError("groups must have at least two distinct members")
        s = 0.0
        for c in group.tolist():
            row = cache.get(c)
            if row is None:
                row = cache[c] = _log_softmax_row(table, c)
            s += row[group].sum() - row[c]
        total += s / len(group)
    return total / len(corpus)


def _log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


def sg_pair_objective(table, center, target, negatives):
    """log s(r_out[target] . r[center]) + sum_neg log s(-r_out[neg] . r[center])."""
    c = table.r[center].astype(np.float64)
    val = _log_sigmoid(table.r_out[target].astype(np.float64) @ c)
    for n in negatives:
        val += _log_sigmoid(-(table.r_out[n].astype(np.float64) @ c))
    return float(val)


def sg_pair_gradient(table, center, target, negatives):
    """Analytic gradient of :func:`sg_pair_objective`.

    Returns ``(grad_center, grad_out)`` where ``grad_out`` maps each touched
    output row (target and negatives) to its gradient.  A negative drawn more
    than once accumulates.
    """
    negatives = list(negatives)
    if not negatives:
        raise ValueError("need at least one negative")
    if target in negatives:
        raise ValueError("target must not be among the negatives")
    c = table.r[center].astype(np.float64)
    grad_c = np.zeros_like(c)
    grad_out = {}
    for node, label in [(target, 1.0)] + [(n, 0.0) for n in negatives]:
        w = table.r_out[node].astype(np.float64)
        g = label - 1.0 / (1.0 + np.exp(-(w @ c)))
        grad_c += g * w
        grad_out[node] = grad_out.get(node, 0.0) + g * c
    return grad_c, grad_out


@numba.njit(cache=True)
def _lcg(state):
    return (state * np.uint64(25214903917) + np.uint64(11)) & np.uint64(0xFFFFFFFFFFFF)


@numba.njit(cache=True)
def _sample_negative(state, cdf):
    u = (state >> np.uint64(16)) / 4294967296.0
    lo = 0
    hi = len(cdf) - 1
    target = u * cdf[-1]
    while lo < hi:
        mid = (lo + hi) >> 1
        if cdf[mid] <= target:
            lo = mid + 1
        else:
            hi = mid
    return lo


# reassociation lets the row loops vectorize; NaN/Inf semantics stay intact for the divergence check
_FASTMATH = {"reassoc", "contract", "nsz", "arcp"}


@numba.njit(cache=True, fastmath=_FASTMATH)
def _train_span(r, r_out, flat, offsets, order, start, stop, window, negatives, cdf,
                lr0, lr_floor, done0, stride, total, state, epoch_status):
    """Negative-sampling SGD over groups ``order[start:stop]``.

    Returns the final PRNG state; on a non-finite score writes the group index
    into ``epoch_status`` and stops.
    """
    dim = r.shape[1]
    zero = r.dtype.type(0.0)
    grad = np.empty(dim, dtype=r.dtype)
    done = done0
    for oi in range(start, stop):
        gi = order[oi]
        lo = offsets[gi]
        hi = offsets[gi + 1]
        for a in range(lo, hi):
            center = flat[a]
            for b in range(max(lo, a - window), min(hi, a + window + 1)):
                if b == a:
                    continue
                target = flat[b]
                frac = 1.0 - done / total
                lr = lr0 * frac if frac > lr_floor else lr0 * lr_floor
                done += stride
                for j in range(dim):
                    grad[j] = zero
                for s in range(negatives + 1):
                    if s == 0:
                        node = target
                        label = 1.0
                    else:
                        state = _lcg(state)
                        node = _sample_negative(state, cdf)
                        if node == target:
                            continue
                        label = 0.0
                    f = zero
                    for j in range(dim):
                        f += r[center, j] * r_out[node, j]
                    if not np.isfinite(f):
                        epoch_status[0] = gi
                        return state
                    g = r.dtype.type((label - 1.0 / (1.0 + np.exp(-f))) * lr)
                    for j in range(dim):
                        grad[j] += g * r_out[node, j]
                        r_out[node, j] += g * r[center, j]
                for j in range(dim):
                    r[center, j] += grad[j]
    return state


@numba.njit(cache=True, parallel=True)
def _train_parallel(r, r_out, flat, offsets, order, workers, window, negatives, cdf,
                    lr0, lr_floor, done0, total, seeds, status):
    n = len(order)
    for w in numba.prange(workers):
        start = w * n // workers
        stop = (w + 1) * n // workers
        # each worker sees the schedule advance `workers` times faster than its own count
        _train_span(r, r_out, flat, offsets, order, start, stop, window, negatives, cdf,
                    lr0, lr_floor, done0 + w, workers, total, seeds[w], status[w:w + 1])


def _pair_count(lengths, window):
    """Ordered position pairs at distance <= window, summed over groups."""
    total = 0
    for length, count in zip(*np.unique(lengths, return_counts=True)):
        length = int(length)
        dist = np.arange(1, min(window, length - 1) + 1)
        total += int(count) * int(2 * (length - dist).sum())
    return total


def unigram_cdf(corpus, num_nodes, power=0.75):
    counts = corpus.counts(num_nodes).astype(np.float64) ** power
    return np.cumsum(counts)


def train(corpus, config, table, on_epoch=None):
    """Train ``table`` (copied, not modified) on ``corpus`` and return the result.

    Each epoch visits the groups in a fresh seeded order and, for every ordered
    pair of positions at distance <= ``config.window``, applies one
    negative-sampling update with ``config.negatives`` noise nodes drawn from
    the unigram^0.75 distribution.  The learning rate decays linearly from
    ``config.lr`` to ``config.lr / 10_000`` over the whole run.

    ``on_epoch(epoch, table)`` is called after every epoch, with epoch 0 being
    the untouched input.
    """
    if not isinstance(corpus, Corpus):
        corpus = Corpus.from_groups(corpus)
    if len(corpus) == 0:
        raise ValueError("empty corpus")
    if corpus.flat.max() >= table.num_nodes or corpus.flat.min() < 0:
        raise ValueError("corpus references node ids outside the table")
    table = table.copy()
    if on_epoch is not None:
        on_epoch(0, table)
    if config.epochs == 0:
        return table
    r = np.ascontiguousarray(table.r)
    r_out = np.ascontiguousarray(table.r_out)
    table.r, table.r_out = r, r_out
    cdf = unigram_cdf(corpus, table.num_nodes)
    pairs_per_epoch = _pair_count(corpus.lengths(), config.window)
    total = float(max(1, pairs_per_epoch * config.epochs))
    lr_floor = 1e-4
    state = np.uint64(seeding.int_seed(config.seed, "negatives") & 0xFFFFFFFFFFFF)
    workers = max(1, int(config.threads)) if config.mode == PARALLEL else 1
    if workers > 1:
        numba.set_num_threads(min(workers, numba.config.NUMBA_NUM_THREADS))
    for epoch in range(config.epochs):
        order = seeding.rng(config.seed, "shuffle", epoch).permutation(len(corpus)).astype(np.int64)
        done0 = float(epoch * pairs_per_epoch)
        if workers == 1:
            status = np.full(1, -1, dtype=np.int64)
            state = _train_span(r, r_out, corpus.flat, corpus.offsets, order, 0, len(order),
                                config.window, config.negatives, cdf, config.lr, lr_floor,
                                done0, 1.0, total, state, status)
        else:
            status = np.full(workers, -1, dtype=np.int64)
            seeds = np.array([seeding.int_seed(config.seed, "negatives", epoch, w) & 0xFFFFFFFFFFFF
                              for w in range(workers)], dtype=np.uint64)
            _train_parallel(r, r_out, corpus.flat, corpus.offsets, order, workers, config.window,
                            config.negatives, cdf, config.lr, lr_floor, done0, total, seeds, status)
        bad = status[status >= 0]
        if len(bad) or not (np.isfinite(r).all() and np.isfinite(r_out).all()):
            raise TrainingDiverged(epoch, int(bad[0]) if len(bad) else -1)
        if on_epoch is not None:
            on_epoch(epoch + 1, table)
    return table


def nearest(table, node, top_k=10, metric="cosine"):
    """``top_k`` other nodes closest to ``node`` as ``[(id, score), ...]``.

    Cosine scores rank descending, euclidean distances ascending; ties go to
    the lower id.
    """
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    x = table.r.astype(np.float64)
    q = x[node]
    if metric == "cosine":
        qn = np.linalg.norm(q)
        if qn == 0:
            raise EmbeddingError(f"node {node} has a zero vector; cosine is undefined")
        norms = np.linalg.norm(x, axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            scores = np.where(norms > 0, x @ q / (norms * qn), 0.0)
        key = -scores
    elif metric == "euclidean":
        scores = np.linalg.norm(x - q, axis=1)
        key = scores
    else:
        raise ValueError(f"unknown metric {metric!r}")
    ids = np.arange(len(x))
    order = np.lexsort((ids, key))
    order = order[order != node][:top_k]
    return [(int(i), float(scores[i])) for i in order]


def cosine_matrix(table):
    x = table.r.astype(np.float64)
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    x = x / np.where(norms > 0, norms, 1.0)
    return x @ x.T


def save_embeddings(table, path, fmt="binary"):
    """Binary: magic, u32 version, u64 N, u64 d, then float32 ``r`` and ``r_out``
    row-major.  Text: ``N d`` header, then ``name v1 ... vd`` per node (``r`` only)."""
    path = Path(path)
    if fmt == "binary":
        with open(path, "wb") as fh:
            fh.write(EMB_MAGIC + struct.pack("<IQQ", EMB_VERSION, table.num_nodes, table.dim))
            fh.write(np.ascontiguousarray(table.r, dtype="<f4").tobytes())
            fh.write(np.ascontiguousarray(table.r_out, dtype="<f4").tobytes())
    elif fmt == "text":
        names = table.names if table.names is not None else [str(i) for i in range(table.num_nodes)]
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{table.num_nodes} {table.dim}\n")
            for name, row in zip(names, table.r.astype(np.float32)):
                fh.write(name + " " + " ".join(f"{v:.9g}" for v in row.tolist()) + "\n")
    else:
        raise ValueError(f"unknown embedding format {fmt!r}")


def load_embeddings(path, fmt=None):
    """Load either format; ``fmt=None`` sniffs the magic bytes."""
    path = Path(path)
    data = path.read_bytes()
    if fmt is None:
        fmt = "binary" if data[:8] == EMB_MAGIC else "text"
    if fmt == "binary":
        if data[:8] != EMB_MAGIC:
            raise EmbeddingError(f"{path}: bad magic")
        try:
            version, n, d = struct.unpack_from("<IQQ", data, 8)
        except struct.error:
            raise EmbeddingError(f"{path}: truncated header") from None
        if version != EMB_VERSION:
            raise EmbeddingError(f"{path}: version {version}, expected {EMB_VERSION}")
        body = data[28:]
        if len(body) != 2 * n * d * 4:
            raise EmbeddingError(f"{path}: truncated or oversized body for N={n}, d={d}")
        arr = np.frombuffer(body, dtype="<f4").reshape(2, n, d).astype(np.float32)
        return EmbeddingTable(arr[0].copy(), arr[1].copy())
    lines = data.decode("utf-8").splitlines()
    try:
        n, d = (int(t) for t in lines[0].split())
    except (IndexError, ValueError):
        raise EmbeddingError(f"{path}: bad header line") from None
    rows = [ln for ln in lines[1:] if ln.strip()]
    if len(rows) < n:
        raise EmbeddingError(f"{path}: truncated, header says {n} rows but {len(rows)} follow")
    if len(rows) > n:
        raise EmbeddingError(f"{path}: header says {n} rows but {len(rows)} follow")
    names, r = [], np.empty((n, d), dtype=np.float32)
    for i, ln in enumerate(rows):
        parts = ln.rstrip().split(" ")
        if len(parts) != d + 1:
            raise EmbeddingError(f"{path}:{i + 2}: dimension mismatch, expected {d} values, got {len(parts) - 1}")
        names.append(parts[0])
        r[i] = [float(v) for v in parts[1:]]
    return EmbeddingTable(r, np.zeros_like(r), names=names)
