"""Independent reference implementations used as test oracles.

None of these call into the code path they check: quaternion algebra is
rebuilt from the basis multiplication table, adjacency weights from direct
counting over all node pairs, ranking from an explicit sort.
"""
import math
from itertools import combinations

import numpy as np

# unit products: BASIS[i][j] = (sign, index) with 0=1, 1=i, 2=j, 3=k
BASIS = [
    [(1, 0), (1, 1), (1, 2), (1, 3)],
    [(1, 1), (-1, 0), (1, 3), (-1, 2)],
    [(1, 2), (-1, 3), (-1, 0), (1, 1)],
    [(1, 3), (1, 2), (-1, 1), (-1, 0)],
]


def table_product(x, y):
    """Hamilton product by bilinear expansion over the unit table."""
    out = [0.0] * 4
    for i in range(4):
        for j in range(4):
            sign, k = BASIS[i][j]
            out[k] += sign * x[i] * y[j]
    return np.array(out)


def left_matrix(w):
    """4x4 real matrix L with L @ x == w (x) x, built column by column from the table."""
    return np.stack([table_product(w, np.eye(4)[j]) for j in range(4)], axis=1)


def expand_quat_matrix(W):
    """(4, n_out, n_in) quaternion matrix -> (4 n_out, 4 n_in) real matrix on interleaved coords."""
    _, n_out, n_in = W.shape
    M = np.zeros((4 * n_out, 4 * n_in))
    for i in range(n_out):
        for j in range(n_in):
            M[4 * i:4 * i + 4, 4 * j:4 * j + 4] = left_matrix(W[:, i, j])
    return M


def interleave(x):
    """(4, n) component-major -> length-4n vector ordered coordinate by coordinate."""
    return np.asarray(x).T.reshape(-1)


def deinterleave(v):
    return np.asarray(v).reshape(-1, 4).T


def brute_force_adjacency(train, num_entities, num_nodes, binary=False):
    """Dense weighted adjacency straight from the four-case definition."""
    triples = [tuple(t) for t in np.asarray(train).tolist()]
    node_sets = [{h, num_entities + r, t} for h, r, t in triples]
    total = len(triples)
    A = np.zeros((num_nodes, num_nodes))
    for v in range(num_nodes):
        c_v = sum(1 for s in node_sets if v in s)
        for u in range(num_nodes):
            if u == v:
                A[v, u] = 1.0
                continue
            c_vu = sum(1 for s in node_sets if v in s and u in s)
            if c_vu == 0:
                continue
            p_vu = c_vu / total
            if v < num_entities and u < num_entities:
                A[v, u] = p_vu / (c_v / total)
            else:
                A[v, u] = p_vu
    if binary:
        A = (A > 0).astype(float)
    return A


def brute_force_counts(train, num_entities):
    """(pair counts keyed by sorted node pair, node counts, total) by scanning each triple."""
    pairs, nodes = {}, {}
    for h, r, t in np.asarray(train).tolist():
        members = {h, num_entities + r, t}
        for v in members:
            nodes[v] = nodes.get(v, 0) + 1
        for u, v in combinations(sorted(members), 2):
            pairs[(u, v)] = pairs.get((u, v), 0) + 1
        if h == t:
            pairs[(h, h)] = pairs.get((h, h), 0) + 1
    return pairs, nodes, len(np.asarray(train))


def dense_renormalize(A, add_identity=True):
    A = np.asarray(A, dtype=float)
    At = A + np.eye(len(A)) if add_identity else A
    d = At.sum(axis=1)
    return At / np.sqrt(np.outer(d, d))


def loop_encoder(params, adj_dense, kind, num_layers):
    """Layer equation evaluated with explicit per-node, per-coordinate loops."""
    X = params["embeddings"]
    C, N, d = X.shape
    for k in range(num_layers):
        W = params[f"layer{k}"]
        Y = np.zeros_like(X)
        for v in range(N):
            acc = np.zeros((C, d))
            for u in range(N):
                a = adj_dense[v, u]
                if a == 0:
                    continue
                for i in range(d):
                    msg = np.zeros(C)
                    for j in range(d):
                        if kind == "gcn":
                            msg += W[:, i, j] * X[:, u, j]
                        elif kind == "qgnn":
                            msg += table_product(W[:, i, j], X[:, u, j])
                        else:
                            wq, wp = W[:4, i, j], W[4:, i, j]
                            xq, xp = X[:4, u, j], X[4:, u, j]
                            msg += np.concatenate(
                                [table_product(wq, xq), table_product(wq, xp) + table_product(wp, xq)]
                            )
                    acc[:, i] += a * msg
            Y[:, v] = np.tanh(acc)
        X = Y
    return X


def sorted_rank(score_of, candidates, target, filtered):
    """Rank by full descending sort; ties are placed ahead of the target."""
    pool = [e for e in candidates if e == target or e not in filtered]
    ordered = sorted(pool, key=lambda e: (-score_of(e), e == target))
    return ordered.index(target) + 1


def scalar_adam(grad_fn, x0, lr, steps, b1=0.9, b2=0.999, eps=1e-8):
    x, m, v, trace = x0, 0.0, 0.0, []
    for t in range(1, steps + 1):
        g = grad_fn(x)
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        x = x - lr * (m / (1 - b1**t)) / (math.sqrt(v / (1 - b2**t)) + eps)
        trace.append(x)
    return trace
