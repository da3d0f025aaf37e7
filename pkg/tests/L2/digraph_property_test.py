import logging
import random
import sys

from revdiam.digraph import (all_pairs_distances, diameter, is_strongly_connected, reverse_arcs,
                             single_source_distances)
from tests.generators import random_digraph

logging.basicConfig(stream=sys.stderr,
                    level=(logging.INFO),
                    format='%(asctime)s %(levelname)s %(threadName)s [%(name)s] %(message)s')

CASES = 1000


def test_reversal_is_an_involution():
    rng = random.Random(7)
    for _ in range(CASES):
        d = random_digraph(rng, max_n=6, max_m=10, max_weight=3)
        flipped = rng.sample(range(d.arc_count), rng.randint(0, d.arc_count))
        assert reverse_arcs(reverse_arcs(d, flipped), flipped) == d


def test_triangle_inequality():
    rng = random.Random(11)
    for _ in range(CASES):
        d = random_digraph(rng, max_n=5, max_m=9, max_weight=4)
        dist = all_pairs_distances(d)
        for u in range(d.n):
            for v in range(d.n):
                for w in range(d.n):
                    assert dist[u][w] <= dist[u][v] + dist[v][w]


def test_finite_diameter_iff_strongly_connected():
    rng = random.Random(13)
    for _ in range(CASES):
        d = random_digraph(rng, max_n=5, max_m=8)
        assert diameter(d).is_finite == is_strongly_connected(d)


def test_unit_weights_match_breadth_first_search():
    rng = random.Random(17)
    for _ in range(200):
        d = random_digraph(rng, max_n=6, max_m=10)
        for s in range(d.n):
            assert single_source_distances(d, s, 'bfs') == single_source_distances(d, s, 'dijkstra')


def test_worker_threads_do_not_change_distances():
    rng = random.Random(19)
    for _ in range(50):
        d = random_digraph(rng, max_n=6, max_m=10, max_weight=3)
        assert all_pairs_distances(d, worker_threads=4) == all_pairs_distances(d)


def test_reversing_everything_transposes_distances():
    rng = random.Random(23)
    for _ in range(200):
        d = random_digraph(rng, max_n=5, max_m=8, max_weight=3)
        transposed = reverse_arcs(d, range(d.arc_count))
        forward = all_pairs_distances(d)
        backward = all_pairs_distances(transposed)
        assert all(forward[u][v] == backward[v][u] for u in range(d.n) for v in range(d.n))
        assert diameter(d) == diameter(transposed)
