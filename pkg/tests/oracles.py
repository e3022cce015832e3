"""Independent reference implementations used to check the package.

Nothing here imports the code under test, so agreement is meaningful.
"""

from __future__ import annotations

import itertools
from collections import defaultdict


def unwrap_block(raw: str) -> str:
    """Turn a typeset verbatim prompt block into the flowing prompt text.

    The printed blocks wrap at ~45 columns and leave a trailing blank at each
    break. Paragraphs are separated by blank lines. A paragraph made only of
    markup lines (``<...>`` tags and the ``{edges:}`` slot) keeps its line
    breaks. The closing ``\"\"\"`` of one block is an artifact and is dropped.
    """
    lines = [ln.rstrip() for ln in raw.splitlines()]
    lines = [ln for ln in lines if ln.strip() != '"""']
    paras, cur = [], []
    for ln in lines:
        if ln:
            cur.append(ln)
        elif cur:
            paras.append(cur)
            cur = []
    if cur:
        paras.append(cur)
    out = []
    for p in paras:
        if all(ln.startswith(("<", "{")) for ln in p):
            out.append("\n".join(p))
        else:
            out.append(" ".join(p))
    return "\n\n".join(out)


def substitute(text: str, bindings: dict[str, str]) -> str:
    for key, value in bindings.items():
        text = text.replace("{" + key + ":}", value).replace("{" + key + "}", value)
    return text


def brute_simple_cycles(n: int, edges: set[tuple[int, int]]) -> int:
    """Count directed simple cycles by enumerating vertex sequences.

    Each cycle is counted once by requiring its smallest vertex first.
    """
    adj = defaultdict(set)
    for a, b in edges:
        adj[a].add(b)
    count = 0
    for k in range(1, n + 1):
        for combo in itertools.combinations(range(n), k):
            first, rest = combo[0], combo[1:]
            for perm in itertools.permutations(rest):
                seq = (first,) + perm
                if all(seq[(i + 1) % k] in adj[seq[i]] for i in range(k)):
                    count += 1
    return count


def brute_connected_within(n: int, undirected: set[frozenset], a: int, b: int, max_nodes: int) -> bool:
    """Is there a simple path from a to b with at most ``max_nodes`` nodes?

    Depth-first enumeration of every simple path; exponential but fine for
    the tiny fixtures it is used on.
    """
    if a == b:
        return True
    adj = defaultdict(set)
    for e in undirected:
        if len(e) == 2:
            x, y = tuple(e)
            adj[x].add(y)
            adj[y].add(x)

    def dfs(node, visited):
        if node == b:
            return True
        if len(visited) >= max_nodes:
            return False
        for nxt in adj[node]:
            if nxt not in visited and dfs(nxt, visited | {nxt}):
                return True
        return False

    return dfs(a, {a})


def brute_precision_recall(gen_edges, mapping, truth_names, truth_edges, d, excluded=("is a", "reverse is a")):
    """Hand-rolled path-bounded precision/recall: returns (hits per edge, precision, recall)."""
    idx = {nm: i for i, nm in enumerate(truth_names)}
    keep = [(s, t, lab) for s, t, lab in truth_edges if lab.casefold() not in excluded]
    und = {frozenset((s, t)) for s, t, _ in keep if s != t}
    hits = {}
    for s, t in gen_edges:
        ms, mt = mapping.get(s), mapping.get(t)
        if ms is None or mt is None:
            hits[(s, t)] = False
        else:
            hits[(s, t)] = brute_connected_within(len(truth_names), und, idx[ms], idx[mt], d)
    n_hit = sum(hits.values())
    image = {idx[m] for m in mapping.values() if m is not None}
    rel = len({(s, t, lab) for s, t, lab in keep if s in image or t in image})
    precision = n_hit / len(gen_edges) if gen_edges else 0.0
    recall = n_hit / rel if rel else 0.0
    return hits, precision, recall
