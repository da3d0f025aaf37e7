"""Directed edge polytopes: the convex hull of e_head - e_tail over the arcs of a digraph."""
import csv
import io
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field, model_validator

from . import config
from .cactus import CycleTree, HasBridge, NotCactus, NotCactusError, cactus_decompose
from .cactus_solver import cycle_costs
from .digraph import CostMode, Digraph, diameter, reverse_arcs
from .persisted_cache import Cache

logger = logging.getLogger('revdiam.polytope')

Point = Tuple[int, ...]


class VolumeCapExceeded(ValueError):
    pass


class CycleOrientationError(ValueError):
    pass


class CounterexampleSizeError(ValueError):
    pass


class LatticePointSet(BaseModel):
    model_config = ConfigDict(frozen=True)

    dimension: int = Field(ge=2)
    # (tail, head) per arc
    generators: Tuple[Tuple[int, int], ...] = Field(min_length=1)

    @model_validator(mode='after')
    def _check_generators(self) -> 'LatticePointSet':
        for tail, head in self.generators:
            if tail == head or not (0 <= tail < self.dimension and 0 <= head < self.dimension):
                raise ValueError(f"generator ({tail}, {head}) is not an arc on {self.dimension} vertices")
        return self

    def _point(self, tail: int, head: int) -> Point:
        point = [0] * self.dimension
        point[head] = 1
        point[tail] = -1
        return tuple(point)

    @property
    def points(self) -> Tuple[Point, ...]:
        return tuple(self._point(t, h) for t, h in self.generators)

    @property
    def distinct_generators(self) -> Tuple[Tuple[int, int], ...]:
        return tuple(sorted(set(self.generators)))

    @property
    def distinct_points(self) -> Tuple[Point, ...]:
        return tuple(self._point(t, h) for t, h in self.distinct_generators)

    @property
    def affine_dimension(self) -> int:
        # rank of the homogenized points, minus one
        return int(np.linalg.matrix_rank(np.array([list(p) + [1] for p in self.distinct_points]))) - 1

    def cache_key(self) -> str:
        return f"{self.dimension}:" + ";".join(f"{t}>{h}" for t, h in self.distinct_generators)


class RationalVolume(BaseModel):
    """Volume normalized to the sum-zero lattice, so a unimodular simplex has volume 1."""
    model_config = ConfigDict(frozen=True)

    numerator: int = Field(ge=0)
    denominator: int = Field(default=1, ge=1)
    dimension: int = Field(ge=0)

    @classmethod
    def of(cls, value: Fraction, dimension: int) -> 'RationalVolume':
        value = Fraction(value)
        return cls(numerator=value.numerator, denominator=value.denominator, dimension=dimension)

    @property
    def value(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class EhrhartPolynomial:
    # lattice point counts of t*P for t = 0..degree
    counts: Tuple[int, ...]
    # ascending powers of t
    coefficients: Tuple[Fraction, ...]

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def leading(self) -> Fraction:
        return self.coefficients[-1]

    def __call__(self, t: int) -> Fraction:
        return sum((c * t**power for power, c in enumerate(self.coefficients)), Fraction(0))


def _subtract_scaled_row(row: List[Fraction], pivot_row: List[Fraction], factor: Fraction) -> List[Fraction]:
    return [a - factor * b for a, b in zip(row, pivot_row)]


def _pivot(tableau: List[List[Fraction]], objective: List[Fraction], row: int, col: int):
    pivot = tableau[row][col]
    tableau[row] = [v / pivot for v in tableau[row]]
    for r in range(len(tableau)):
        if r != row and tableau[r][col] != 0:
            tableau[r] = _subtract_scaled_row(tableau[r], tableau[row], tableau[r][col])
    if objective[col] != 0:
        objective[:] = _subtract_scaled_row(objective, tableau[row], objective[col])


def _feasible(columns: Sequence[Point], rhs: Point) -> bool:
    """Exact phase-one simplex: is rhs a nonnegative combination of the columns?"""
    rows = len(rhs)
    cols = len(columns)
    width = cols + rows
    tableau = []
    for i in range(rows):
        sign = -1 if rhs[i] < 0 else 1
        row = [Fraction(sign * columns[j][i]) for j in range(cols)]
        row += [Fraction(1 if r == i else 0) for r in range(rows)]
        row.append(Fraction(sign * rhs[i]))
        tableau.append(row)
    basis = [cols + i for i in range(rows)]
    # reduced costs of "minimize the sum of artificials", last entry is minus the objective value
    objective = [-sum((tableau[i][j] for i in range(rows)), Fraction(0)) if j < cols else Fraction(0)
                 for j in range(width)]
    objective.append(-sum((tableau[i][width] for i in range(rows)), Fraction(0)))
    while True:
        # Bland's rule
        entering = next((j for j in range(width) if objective[j] < 0), None)
        if entering is None:
            break
        ratios = [(tableau[i][width] / tableau[i][entering], basis[i], i) for i in range(rows)
                  if tableau[i][entering] > 0]
        if not ratios:
            break
        leaving = min(ratios)[2]
        _pivot(tableau, objective, leaving, entering)
        basis[leaving] = entering
    return objective[width] == 0


def contains_lattice_point(P: LatticePointSet, x: Point, t: int) -> bool:
    """Is x in t*P? Decided by exact linear feasibility over the generators."""
    columns = [p + (1, ) for p in P.distinct_points]
    return _feasible(columns, tuple(x) + (t, ))


def _lp_counts(P: LatticePointSet, degree: int) -> List[int]:
    counts = []
    for t in range(degree + 1):
        count = 0
        for free in product(range(-t, t + 1), repeat=P.dimension - 1):
            last = -sum(free)
            if abs(last) > t:
                continue
            if contains_lattice_point(P, free + (last, ), t):
                count += 1
        counts.append(count)
    return counts


def _longest_paths(graph: nx.DiGraph) -> Dict[int, Dict[int, int]]:
    order = list(nx.topological_sort(graph))
    longest = {}
    for source in order:
        best = {source: 0}
        for u in order:
            if u not in best:
                continue
            for w in graph.successors(u):
                best[w] = max(best.get(w, -1), best[u] + 1)
        longest[source] = best
    return longest


def _max_generator_count(x: Point, longest: Dict[int, Dict[int, int]]) -> Optional[int]:
    """Most generators summing to x in an acyclic generator digraph.

    Flow decomposes into unit paths from negative to positive coordinates; each path is as long as possible.
    """
    supplies = tuple(v for v, c in enumerate(x) if c < 0 for _ in range(-c))

    @lru_cache(maxsize=None)
    def best(i: int, demand: Tuple[int, ...]) -> Optional[int]:
        if i == len(supplies):
            return 0
        reach = longest.get(supplies[i], {})
        result = None
        for w, need in enumerate(demand):
            if need and w in reach and w != supplies[i]:
                rest = best(i + 1, demand[:w] + (need - 1, ) + demand[w + 1:])
                if rest is not None and (result is None or reach[w] + rest > result):
                    result = reach[w] + rest
        return result

    return best(0, tuple(max(c, 0) for c in x))


def _flow_counts(P: LatticePointSet, degree: int) -> List[int]:
    # x lies in t*P exactly for cmin(x) <= t <= cmax(x), both integral by total unimodularity
    points = P.distinct_points
    origin = (0, ) * P.dimension
    cmin: Dict[Point, int] = {origin: 0}
    frontier = [origin]
    for level in range(1, degree + 1):
        reached = []
        for x in frontier:
            for p in points:
                y = tuple(a + b for a, b in zip(x, p))
                if y not in cmin:
                    cmin[y] = level
                    reached.append(y)
        frontier = reached

    graph = nx.DiGraph(list(P.distinct_generators))
    if nx.is_directed_acyclic_graph(graph):
        longest = _longest_paths(graph)
        cmax = {x: _max_generator_count(x, longest) for x in cmin}
    else:
        cmax = {x: math.inf for x in cmin}
    return [sum(1 for x, low in cmin.items() if low <= t <= cmax[x]) for t in range(degree + 1)]


def _interpolate(counts: Sequence[int]) -> Tuple[Fraction, ...]:
    """Coefficients of the polynomial through (t, counts[t])."""
    degree = len(counts) - 1
    result = [Fraction(0)] * (degree + 1)
    for i, value in enumerate(counts):
        basis = [Fraction(1)]
        denominator = 1
        for j in range(degree + 1):
            if j == i:
                continue
            # multiply by (t - j)
            basis = [Fraction(0)] + basis
            for power in range(len(basis) - 1):
                basis[power] -= j * basis[power + 1]
            denominator *= i - j
        for power, c in enumerate(basis):
            result[power] += Fraction(value) * c / denominator
    return tuple(result)


def _check_caps(P: LatticePointSet, degree: int, max_generators: Optional[int], max_dimension: Optional[int]):
    max_generators = config.volume_max_generators() if max_generators is None else max_generators
    max_dimension = config.volume_max_dimension() if max_dimension is None else max_dimension
    generators = len(P.distinct_generators)
    if generators > max_generators:
        raise VolumeCapExceeded(f"{generators} generators exceed the cap of {max_generators}")
    if degree > max_dimension:
        raise VolumeCapExceeded(f"affine dimension {degree} exceeds the cap of {max_dimension}")


def directed_edge_polytope(digraph: Digraph) -> LatticePointSet:
    if digraph.n < 2 or digraph.arc_count < 1:
        raise ValueError(f"edge polytope needs at least 2 vertices and 1 arc, got n={digraph.n} "
                         f"m={digraph.arc_count}")
    return LatticePointSet(dimension=digraph.n, generators=tuple((a.tail, a.head) for a in digraph.arcs))


def ehrhart_polynomial(P: LatticePointSet,
                       method: str = 'flow',
                       max_generators: Optional[int] = None,
                       max_dimension: Optional[int] = None) -> EhrhartPolynomial:
    degree = P.affine_dimension
    _check_caps(P, degree, max_generators, max_dimension)
    if method == 'flow':
        counts = _flow_counts(P, degree)
    elif method == 'lp':
        counts = _lp_counts(P, degree)
    else:
        raise ValueError(f"unknown counting method: {method}")
    logger.debug(f"Lattice point counts {counts} for {P.cache_key()}")
    return EhrhartPolynomial(counts=tuple(counts), coefficients=_interpolate(counts))


def normalized_volume(P: LatticePointSet,
                      method: str = 'flow',
                      max_generators: Optional[int] = None,
                      max_dimension: Optional[int] = None) -> RationalVolume:
    polynomial = ehrhart_polynomial(P, method, max_generators, max_dimension)
    return RationalVolume.of(polynomial.leading * math.factorial(polynomial.degree), polynomial.degree)


def cactus_volume(digraph: Digraph, tree: Optional[CycleTree] = None) -> RationalVolume:
    """Product of cycle lengths: the polytope is a free sum of cycle simplices."""
    if tree is None:
        decomposition = cactus_decompose(digraph)
        if isinstance(decomposition, NotCactus):
            raise NotCactusError(decomposition.reason)
        if isinstance(decomposition, HasBridge):
            raise CycleOrientationError(f"bridge arcs {list(decomposition.arc_ids)} are not on any cycle")
        tree = decomposition
    volume = 1
    for cycle, cost in zip(tree.cycles, cycle_costs(digraph, tree, CostMode.CARDINALITY)):
        if cycle.virtual:
            continue
        if cost.f not in (0, cost.total):
            raise CycleOrientationError(f"cycle through {list(cycle.vertices)} is not a directed cycle")
        volume *= cycle.length
    return RationalVolume.of(Fraction(volume), max(digraph.n - 1, 0))


def build_counterexample_pair(i: int) -> Tuple[Digraph, Digraph]:
    """Two cacti with equal edge polytope volume and diameters i and less than i.

    G is a directed path v_0..v_k (k = i // 2) whose arcs are each closed into a directed triangle,
    the last one into a 4-cycle when i is odd. H reverses the second triangle.
    """
    if i < 8:
        raise CounterexampleSizeError(f"counterexample needs i >= 8, got {i}")
    k = i // 2
    pairs: List[Tuple[int, int]] = []
    cycles: List[List[int]] = []
    fresh = k + 1
    for j in range(k):
        if i % 2 == 1 and j == k - 1:
            closing = [(j + 1, fresh), (fresh, fresh + 1), (fresh + 1, j)]
            fresh += 2
        else:
            closing = [(j + 1, fresh), (fresh, j)]
            fresh += 1
        arcs = [(j, j + 1)] + closing
        cycles.append(list(range(len(pairs), len(pairs) + len(arcs))))
        pairs.extend(arcs)
    g = Digraph.from_edges(fresh, pairs)
    h = reverse_arcs(g, cycles[1])
    logger.info(f"Built counterexample pair for i={i}: {g.n} vertices, {len(cycles)} cycles")
    return g, h


def complete_bipartite_digraph(p: int, q: int) -> Digraph:
    return Digraph.from_edges(p + q, [(i, p + j) for i in range(p) for j in range(q)])


class SweepRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    orientation: int
    diameter: Union[int, str]
    volume_numerator: int
    volume_denominator: int

    @property
    def volume(self) -> Fraction:
        return Fraction(self.volume_numerator, self.volume_denominator)


def cached_volume(P: LatticePointSet, cache: Optional[Cache] = None, method: str = 'flow') -> RationalVolume:
    if cache is None:
        return normalized_volume(P, method)
    key = P.cache_key()
    hit = cache.get(key)
    if hit is not None:
        return RationalVolume(**hit)
    volume = normalized_volume(P, method)
    cache[key] = volume.model_dump()
    return volume


def orientation_sweep(digraph: Digraph,
                      worker_threads: int = 1,
                      cache: Optional[Cache] = None,
                      method: str = 'flow') -> List[SweepRow]:
    """Diameter and volume of every orientation; bit i of ``orientation`` set means arc i reversed."""
    m = digraph.arc_count
    # every orientation shares the generator cap
    _check_caps(directed_edge_polytope(digraph), 0, None, None)

    def row(mask: int) -> SweepRow:
        oriented = reverse_arcs(digraph, [i for i in range(m) if mask >> i & 1])
        volume = cached_volume(directed_edge_polytope(oriented), cache, method)
        return SweepRow(orientation=mask,
                        diameter=diameter(oriented).to_json(),
                        volume_numerator=volume.numerator,
                        volume_denominator=volume.denominator)

    logger.info(f"Sweeping {2**m} orientations of {m} arcs")
    rows = Parallel(backend='threading', n_jobs=worker_threads)(delayed(row)(mask) for mask in range(2**m))
    if cache is not None:
        cache.flush()
        logger.info(f"Volume cache: {cache.stats}")
    return rows


def sweep_to_csv(rows: Sequence[SweepRow]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator='\n')
    writer.writerow(['orientation', 'diameter', 'volume_numerator', 'volume_denominator'])
    for r in rows:
        writer.writerow([r.orientation, r.diameter, r.volume_numerator, r.volume_denominator])
    return out.getvalue()
