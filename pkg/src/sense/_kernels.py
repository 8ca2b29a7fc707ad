"""Compiled inner loops. Randomness is pre-drawn by the callers."""
import math

import numpy as np
from numba import njit

GRAPH = 1
TEXT = 0


@njit(cache=True)
def _has_arc(indptr, indices, src, dst):
    lo = indptr[src]
    hi = indptr[src + 1]
    while lo < hi:
        mid = (lo + hi) // 2
        if indices[mid] < dst:
            lo = mid + 1
        else:
            hi = mid
    return lo < indptr[src + 1] and indices[lo] == dst


@njit(cache=True)
def walk_kernel(indptr, indices, starts, uniforms, inv_p, inv_q, out, lengths):
    """Second-order biased walks; out[w, :lengths[w]] holds walk w.

    uniforms[w, t] drives the choice of step t + 1.
    """
    n_walks, max_len = out.shape
    unbiased = inv_p == 1.0 and inv_q == 1.0
    for w in range(n_walks):
        cur = starts[w]
        prev = -1
        out[w, 0] = cur
        length = 1
        while length < max_len:
            lo = indptr[cur]
            hi = indptr[cur + 1]
            deg = hi - lo
            if deg == 0:
                break
            u = uniforms[w, length - 1]
            if prev < 0 or unbiased:
                j = int(u * deg)
                if j >= deg:
                    j = deg - 1
                nxt = indices[lo + j]
            else:
                total = 0.0
                for t in range(lo, hi):
                    x = indices[t]
                    if x == prev:
                        total += inv_p
                    elif _has_arc(indptr, indices, prev, x):
                        total += 1.0
                    else:
                        total += inv_q
                thresh = u * total
                acc = 0.0
                nxt = indices[hi - 1]
                for t in range(lo, hi):
                    x = indices[t]
                    if x == prev:
                        acc += inv_p
                    elif _has_arc(indptr, indices, prev, x):
                        acc += 1.0
                    else:
                        acc += inv_q
                    if thresh < acc:
                        nxt = x
                        break
            out[w, length] = nxt
            prev = cur
            cur = nxt
            length += 1
        for t in range(length, max_len):
            out[w, t] = -1
        lengths[w] = length


@njit(cache=True)
def _log1pexp(x):
    if x > 0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


@njit(cache=True)
def _sigmoid(z):
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


@njit(cache=True, nogil=True, fastmath=True)
def sgd_kernel(
    word_in, node_in, out,
    kinds, in_words, in_nodes, targets, negs,
    n_words, concat, beta1, beta2, lr_decay,
    pos_offset, total_pairs, min_factor,
    block_sums, block_size,
):
    """One plain-SGD pass over a pair stream, updating the tables in place.

    Out-vector dot products and the hidden-layer gradient are taken before
    any out vector moves, so duplicated negatives accumulate like the exact
    gradient. Global position ``pos_offset + i`` drives the linear decay.
    """
    n_pairs = kinds.shape[0]
    d = node_in.shape[1]
    dim_out = out.shape[1]
    k = negs.shape[1]
    h = np.empty(dim_out)
    grad_h = np.empty(dim_out)
    g = np.empty(k + 1)
    rows = np.empty(k + 1, dtype=np.int64)
    for i in range(n_pairs):
        is_graph = kinds[i] == GRAPH
        wid = in_words[i]
        v = in_nodes[i]
        if concat:
            for j in range(d):
                h[j] = word_in[wid, j] if wid >= 0 else 0.0
                h[d + j] = node_in[v, j]
        else:
            for j in range(d):
                h[j] = node_in[v, j]
                if wid >= 0:
                    h[j] += word_in[wid, j]
        offset = n_words if is_graph else 0
        rows[0] = offset + targets[i]
        count = 1
        for t in range(k):
            if negs[i, t] >= 0:
                rows[count] = offset + negs[i, t]
                count += 1
        for j in range(dim_out):
            grad_h[j] = 0.0
        loss = 0.0
        for r in range(count):
            row = rows[r]
            z = 0.0
            for j in range(dim_out):
                z += out[row, j] * h[j]
            if r == 0:
                g[r] = _sigmoid(z) - 1.0
                loss += _log1pexp(-z)
            else:
                g[r] = _sigmoid(z)
                loss += _log1pexp(z)
            for j in range(dim_out):
                grad_h[j] += g[r] * out[row, j]
        factor = 1.0
        if lr_decay:
            factor = 1.0 - (pos_offset + i) / total_pairs
            if factor < min_factor:
                factor = min_factor
        rate = (beta1 if is_graph else beta2) * factor
        for r in range(count):
            row = rows[r]
            step = rate * g[r]
            for j in range(dim_out):
                out[row, j] -= step * h[j]
        if concat:
            if wid >= 0:
                for j in range(d):
                    word_in[wid, j] -= rate * grad_h[j]
            for j in range(d):
                node_in[v, j] -= rate * grad_h[d + j]
        else:
            if wid >= 0:
                for j in range(d):
                    word_in[wid, j] -= rate * grad_h[j]
            for j in range(d):
                node_in[v, j] -= rate * grad_h[j]
        block_sums[i // block_size] += loss
