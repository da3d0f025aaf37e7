import logging
import random
import sys
from collections import defaultdict
from fractions import Fraction
from itertools import combinations_with_replacement, product

import networkx as nx
import pytest

from revdiam.cactus_solver import solve_cactus
from revdiam.digraph import CostMode, Digraph, diameter, reverse_arcs
from revdiam.polytope import (build_counterexample_pair, cactus_volume, complete_bipartite_digraph,
                              directed_edge_polytope, normalized_volume, orientation_sweep)
from revdiam.reductions import (GADGET_DIAMETER, DominatingSetInstance, PartitionInstance,
                                dominating_set_to_kreversals, extract_dominating_set, extract_partition,
                                partition_to_weighted_kreversals)
from revdiam.solver import Infeasible, Solution, SolveBudget, oracle_min_reversals, solve_k_reversals
from tests.checks import check_cactus_against_profile
from tests.generators import directed_cycle, random_cactus, random_digraph

logging.basicConfig(stream=sys.stderr,
                    level=(logging.INFO),
                    format='%(asctime)s %(levelname)s %(threadName)s [%(name)s] %(message)s')


def small_graphs():
    return [g for g in nx.graph_atlas_g() if 1 <= g.number_of_nodes() <= 4]


def test_atlas_covers_every_small_graph():
    assert len(small_graphs()) == 1 + 2 + 4 + 11


@pytest.mark.parametrize('graph', small_graphs(), ids=lambda g: f"n{g.number_of_nodes()}_{sorted(g.edges())}")
def test_dominating_set_reduction(graph):
    n = graph.number_of_nodes()
    inst = DominatingSetInstance(n=n, edges=list(graph.edges()))
    gamma = len(inst.dominating_set(max_size=n))
    instance = dominating_set_to_kreversals(inst)
    assert diameter(instance.digraph) == GADGET_DIAMETER

    for ell in range(0, n + 1):
        result = solve_k_reversals(instance.digraph, SolveBudget(d=instance.d, k=ell))
        assert isinstance(result, Solution) == (gamma <= ell), (n, sorted(graph.edges()), ell)
        if isinstance(result, Infeasible):
            continue
        assert result.cost == gamma
        chosen = extract_dominating_set(result.witness, instance.gadget_map)
        assert inst.dominates(chosen)
        assert len(chosen) <= ell


def test_partition_reduction():
    checked = 0
    for n in range(1, 6):
        for values in combinations_with_replacement(range(1, 7), n):
            inst = PartitionInstance(values=values)
            if not inst.even:
                continue
            instance = partition_to_weighted_kreversals(inst)
            result = solve_cactus(instance.digraph, instance.d, instance.k, CostMode.WEIGHT)
            assert isinstance(result, Solution) == inst.has_balanced_split(), values
            if isinstance(result, Solution):
                chosen = extract_partition(result.witness, inst, instance.digraph)
                assert sum(values[i - 1] for i in chosen) == inst.b
            checked += 1
    assert checked > 200


def test_partition_reduction_with_the_general_solver():
    for values in [(1, 1), (2, 2), (1, 3), (1, 1, 2), (2, 4), (1, 2, 3), (1, 1, 4)]:
        inst = PartitionInstance(values=values)
        instance = partition_to_weighted_kreversals(inst)
        result = solve_k_reversals(instance.digraph, SolveBudget(d=instance.d, k=instance.k, mode=CostMode.WEIGHT))
        assert isinstance(result, Solution) == inst.has_balanced_split(), values


def test_cactus_program_against_oracle():
    rng = random.Random(97)
    for case in range(200):
        mode = CostMode.CARDINALITY if case % 2 == 0 else CostMode.WEIGHT
        d = random_cactus(rng, max_cycles=5, max_length=5, max_arcs=12, max_weight=1 if case % 2 == 0 else 3)
        check_cactus_against_profile(d, mode, full_grid=(mode == CostMode.CARDINALITY))


def test_general_solver_against_oracle():
    rng = random.Random(101)
    for _ in range(200):
        d = random_digraph(rng, max_n=6, max_m=12)
        target = rng.randint(2, 5)
        expected = oracle_min_reversals(d, target)
        result = solve_k_reversals(d, SolveBudget(d=target, k=d.arc_count))
        if isinstance(expected, Infeasible):
            assert isinstance(result, Infeasible)
        else:
            assert result == expected


def test_k33_volume_ratios():
    rows = orientation_sweep(complete_bipartite_digraph(3, 3), worker_threads=4)
    assert len(rows) == 512
    volumes = defaultdict(set)
    for row in rows:
        volumes[row.diameter].add(row.volume)
    assert {3, 4, 5} <= set(volumes)
    assert any(v3 / v4 == Fraction(15, 10) and v5 / v4 == Fraction(13, 10)
               for v3, v4, v5 in product(volumes[3], volumes[4], volumes[5]))


@pytest.mark.parametrize('i', [8, 9, 10, 11])
def test_counterexample_family(i):
    g, h = build_counterexample_pair(i)
    assert diameter(g) == i
    assert diameter(h) < i
    assert cactus_volume(g) == cactus_volume(h)
    if i % 2 == 0:
        assert cactus_volume(g).value == 3**(i // 2)


def test_cycle_pieces_match_lattice_counting():
    triangle = Digraph.from_edges(3, directed_cycle([0, 1, 2]))
    assert normalized_volume(directed_edge_polytope(triangle)) == cactus_volume(triangle)
    assert normalized_volume(directed_edge_polytope(reverse_arcs(triangle, [0, 1, 2]))).value == 3


def test_three_cycles_in_a_path():
    chain = Digraph.from_edges(7, directed_cycle([0, 1, 2]) + directed_cycle([2, 3, 4]) + directed_cycle([4, 5, 6]))
    assert normalized_volume(directed_edge_polytope(chain)).value == 27
    assert cactus_volume(chain).value == 27
