"""Hot loops: simple-cycle counting and hop-bounded reachability on CSR graphs.

Every kernel is written once as plain Python over numpy arrays and compiled
with ``numba.njit`` when numba is importable. Set ``CAUSALKG_NO_NUMBA=1`` to
force the interpreted path (useful for debugging and for the benchmark).
The reachability kernel additionally has a vectorised numpy implementation
that is used instead of the interpreted loop when numba is off.
"""

from __future__ import annotations

import os

import numpy as np

_FLAG = os.environ.get("CAUSALKG_NO_NUMBA", "").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and _FLAG not in ("1", "true", "yes", "on")


def _jit(fn):
    if USE_NUMBA:
        return numba.njit(cache=True, nogil=True)(fn)
    return fn


def _count_simple_cycles_py(indptr, indices, n, cap):
    """Johnson's circuit enumeration, counting only.

    Vertices are visited in index order; the search rooted at ``s`` only uses
    vertices ``>= s`` so each cycle is counted once, at its smallest vertex.
    Returns ``(count, capped)``. Block lists are an ``n x n`` boolean matrix,
    which is fine for the small graphs this library generates.
    """
    count = 0
    blocked = np.zeros(n, dtype=np.bool_)
    bmat = np.zeros((n, n), dtype=np.bool_)
    stack_v = np.empty(n, dtype=np.int64)
    stack_ptr = np.empty(n, dtype=np.int64)
    stack_found = np.zeros(n, dtype=np.bool_)
    ustack = np.empty(n * n + n, dtype=np.int64)

    for s in range(n):
        for i in range(s, n):
            blocked[i] = False
            for j in range(s, n):
                bmat[i, j] = False

        top = 0
        stack_v[0] = s
        stack_ptr[0] = indptr[s]
        stack_found[0] = False
        blocked[s] = True

        while top >= 0:
            v = stack_v[top]
            advanced = False
            while stack_ptr[top] < indptr[v + 1]:
                w = indices[stack_ptr[top]]
                stack_ptr[top] += 1
                if w < s:
                    continue
                if w == s:
                    count += 1
                    stack_found[top] = True
                    if count >= cap:
                        return count, True
                elif not blocked[w]:
                    top += 1
                    stack_v[top] = w
                    stack_ptr[top] = indptr[w]
                    stack_found[top] = False
                    blocked[w] = True
                    advanced = True
                    break
            if advanced:
                continue

            if stack_found[top]:
                # unblock(v), iteratively
                usp = 0
                ustack[0] = v
                blocked[v] = False
                while usp >= 0:
                    u = ustack[usp]
                    usp -= 1
                    for x in range(s, n):
                        if bmat[u, x]:
                            bmat[u, x] = False
                            if blocked[x]:
                                blocked[x] = False
                                usp += 1
                                ustack[usp] = x
            else:
                for p in range(indptr[v], indptr[v + 1]):
                    w = indices[p]
                    if w >= s:
                        bmat[w, v] = True
            found = stack_found[top]
            top -= 1
            if top >= 0 and found:
                stack_found[top] = True

    return count, False


count_simple_cycles_kernel = _jit(_count_simple_cycles_py)


def _bounded_reachable_loop(indptr, indices, srcs, dsts, max_hops):
    """For each (src, dst) pair: is dst within ``max_hops`` hops of src?

    Early-exit BFS; a visit-stamp array avoids re-zeroing per query.
    """
    n = indptr.shape[0] - 1
    m = srcs.shape[0]
    out = np.zeros(m, dtype=np.bool_)
    stamp = np.zeros(n, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    for q in range(m):
        s = srcs[q]
        t = dsts[q]
        if s == t:
            out[q] = True
            continue
        if max_hops < 1:
            continue
        mark = q + 1
        stamp[s] = mark
        head = 0
        tail = 1
        queue[0] = s
        level_end = 1
        depth = 0
        hit = False
        while head < tail and not hit:
            v = queue[head]
            head += 1
            for p in range(indptr[v], indptr[v + 1]):
                w = indices[p]
                if w == t:
                    hit = True
                    break
                if stamp[w] != mark:
                    stamp[w] = mark
                    queue[tail] = w
                    tail += 1
            if head == level_end:
                depth += 1
                if depth >= max_hops:
                    break
                level_end = tail
        out[q] = hit
    return out


def _bounded_reachable_numpy(indptr, indices, srcs, dsts, max_hops):
    """Level-synchronous frontier expansion, vectorised with numpy."""
    n = indptr.shape[0] - 1
    out = np.zeros(srcs.shape[0], dtype=np.bool_)
    for q in range(srcs.shape[0]):
        s, t = int(srcs[q]), int(dsts[q])
        if s == t:
            out[q] = True
            continue
        seen = np.zeros(n, dtype=np.bool_)
        seen[s] = True
        frontier = np.array([s], dtype=np.int64)
        for _ in range(max_hops):
            starts = indptr[frontier]
            lens = indptr[frontier + 1] - starts
            if lens.sum() == 0:
                break
            offs = np.repeat(starts - np.cumsum(lens) + lens, lens) + np.arange(lens.sum())
            nbrs = indices[offs]
            if (nbrs == t).any():
                out[q] = True
                break
            nbrs = np.unique(nbrs[~seen[nbrs]])
            if nbrs.size == 0:
                break
            seen[nbrs] = True
            frontier = nbrs
    return out


if USE_NUMBA:
    bounded_reachable_kernel = _jit(_bounded_reachable_loop)
else:
    bounded_reachable_kernel = _bounded_reachable_numpy


def count_simple_cycles_csr(indptr, indices, n: int, cap: int) -> tuple[int, bool]:
    if n == 0:
        return 0, False
    c, capped = count_simple_cycles_kernel(
        np.asarray(indptr, dtype=np.int64), np.asarray(indices, dtype=np.int64), int(n), int(cap)
    )
    return int(c), bool(capped)


def bounded_reachable(indptr, indices, srcs, dsts, max_hops: int) -> np.ndarray:
    srcs = np.asarray(srcs, dtype=np.int64)
    dsts = np.asarray(dsts, dtype=np.int64)
    if srcs.size == 0:
        return np.zeros(0, dtype=np.bool_)
    return bounded_reachable_kernel(
        np.asarray(indptr, dtype=np.int64), np.asarray(indices, dtype=np.int64), srcs, dsts, int(max_hops)
    )


def to_csr(n: int, src, dst) -> tuple[np.ndarray, np.ndarray]:
    """Sorted CSR arrays from parallel edge arrays (neighbours sorted per row)."""
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    np.cumsum(indptr, out=indptr)
    return indptr, dst.copy()
