import csv
import random
from importlib import resources

import numpy as np
import pytest

from causalkg import kernels
from causalkg.graph import ConceptGraph
from causalkg.metrics import (CycleCount, attributes_csv, count_simple_cycles, density, graph_attributes,
                             reciprocity, sort_rows, summarize)
from oracles import brute_simple_cycles


def graph_from(n, edges):
    g = ConceptGraph(root="v0")
    for i in range(n):
        g.add_node(f"v{i}")
    for a, b in edges:
        g.add_edge(f"v{a}", f"v{b}")
    return g


def random_edges(rng, n, p):
    return {(a, b) for a in range(n) for b in range(n) if a != b and rng.random() < p}


def test_density_and_reciprocity_examples():
    g = graph_from(3, [(0, 1), (1, 0), (1, 2)])
    assert density(g) == pytest.approx(3 / 6)
    assert reciprocity(g) == pytest.approx(2 / 3)
    assert density(graph_from(1, [])) == 0.0
    assert reciprocity(graph_from(2, [])) == 0.0


def test_cycle_examples():
    assert count_simple_cycles(graph_from(3, [(0, 1), (1, 2), (2, 0)])) == CycleCount(1, False)
    assert count_simple_cycles(graph_from(2, [(0, 1), (1, 0)])).count == 1
    assert count_simple_cycles(graph_from(4, [(0, 1), (1, 2), (2, 3)])).count == 0
    complete4 = [(a, b) for a in range(4) for b in range(4) if a != b]
    assert count_simple_cycles(graph_from(4, complete4)).count == 20


def test_cycle_cap():
    complete6 = [(a, b) for a in range(6) for b in range(6) if a != b]
    c = count_simple_cycles(graph_from(6, complete6), cap=50)
    assert c == CycleCount(50, True)
    assert str(c) == ">=50"
    assert count_simple_cycles(graph_from(6, complete6)).count == 409


@pytest.mark.parametrize("seed", range(3))
def test_cycles_vs_brute_force(seed):
    rng = random.Random(seed)
    for _ in range(40):
        n = rng.randint(1, 7)
        edges = random_edges(rng, n, rng.random())
        assert count_simple_cycles(graph_from(n, edges)).count == brute_simple_cycles(n, edges)


def test_cycle_kernels_agree():
    rng = random.Random(11)
    for _ in range(30):
        n = rng.randint(1, 9)
        edges = sorted(random_edges(rng, n, 0.4))
        src = [a for a, _ in edges]
        dst = [b for _, b in edges]
        indptr, indices = kernels.to_csr(n, src, dst)
        assert kernels.count_simple_cycles_kernel(indptr, indices, n, 10**9) == \
            kernels._count_simple_cycles_py(indptr, indices, n, 10**9)


def test_reachability_kernels_agree():
    rng = np.random.default_rng(5)
    for _ in range(20):
        n = int(rng.integers(2, 40))
        m = int(rng.integers(0, 3 * n))
        s, d = rng.integers(0, n, m), rng.integers(0, n, m)
        und = np.unique(np.stack([np.r_[s, d], np.r_[d, s]], 1), axis=0)
        indptr, indices = kernels.to_csr(n, und[:, 0], und[:, 1])
        qs, qd = rng.integers(0, n, 30), rng.integers(0, n, 30)
        for hops in (0, 1, 2, 6):
            a = kernels._bounded_reachable_loop(indptr, indices, qs, qd, hops)
            b = kernels._bounded_reachable_numpy(indptr, indices, qs, qd, hops)
            c = kernels.bounded_reachable(indptr, indices, qs, qd, hops)
            assert (a == b).all() and (a == c).all()


def test_published_densities():
    text = resources.files("causalkg.data").joinpath("published_attributes.csv").read_text()
    rows = list(csv.DictReader(text.splitlines()))
    assert len(rows) == 60
    for r in rows:
        n, e = int(r["nodes"]), int(r["edges"])
        assert abs(e / (n * (n - 1)) - float(r["density"])) <= 0.001, r


def test_summarize_sample_sd():
    s = summarize([1, 2, 3, 4])
    assert (s.mean, s.min, s.max, s.n) == (2.5, 1, 4, 4)
    assert s.sd == pytest.approx(1.2909944)
    assert summarize([5]).sd == 0.0
    with pytest.raises(ValueError):
        summarize([])


def test_sort_and_csv():
    a = graph_attributes(graph_from(3, [(0, 1), (1, 0)]))
    b = graph_attributes(graph_from(4, [(0, 1)]))
    b.condition = "zzz"
    a.precision, b.precision = 0.1, 0.9
    assert [r.precision for r in sort_rows([a, b], "precision")] == [0.9, 0.1]
    assert [r.precision for r in sort_rows([a, b], "precision", descending=False)] == [0.1, 0.9]
    assert [r.condition for r in sort_rows([b, a], "condition", descending=False)] == ["v0", "zzz"]
    lines = attributes_csv([a]).splitlines()
    assert lines[0] == "model,condition,precision,recall,density,reciprocity,nodes,edges,cycles"
    assert lines[1] == ",v0,0.100,,0.333,1.000,3,2,1"
