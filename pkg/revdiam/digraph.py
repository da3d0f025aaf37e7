import heapq
import logging
from collections import deque
from dataclasses import dataclass
from enum import Enum
from functools import total_ordering
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import fsspec
import graphviz
import networkx as nx
from joblib import Parallel, delayed
from pydantic import AliasChoices, BaseModel, ConfigDict, Field, field_validator, model_validator

logger = logging.getLogger('revdiam.digraph')

# (head, weight) pairs per vertex
Adjacency = List[List[Tuple[int, int]]]


class CostMode(str, Enum):
    CARDINALITY = 'cardinality'
    WEIGHT = 'weight'


@total_ordering
@dataclass(frozen=True)
class ExtendedDistance:
    """Shortest-path weight that may be infinite. ``value is None`` means unreachable."""
    value: Optional[int] = None

    @classmethod
    def finite(cls, value: int) -> 'ExtendedDistance':
        if value < 0:
            raise ValueError(f"distance must be nonnegative, got {value}")
        return cls(value)

    @classmethod
    def infinite(cls) -> 'ExtendedDistance':
        return cls(None)

    @property
    def is_finite(self) -> bool:
        return self.value is not None

    @staticmethod
    def _coerce(other) -> Optional['ExtendedDistance']:
        if isinstance(other, ExtendedDistance):
            return other
        if isinstance(other, int) and not isinstance(other, bool):
            return ExtendedDistance(other)
        return None

    def __add__(self, other) -> 'ExtendedDistance':
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if self.value is None or other.value is None:
            return INFINITE
        return ExtendedDistance(self.value + other.value)

    __radd__ = __add__

    def __eq__(self, other) -> bool:
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self.value == other.value

    def __lt__(self, other) -> bool:
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if self.value is None:
            return False
        if other.value is None:
            return True
        return self.value < other.value

    def __hash__(self) -> int:
        return hash(self.value)

    def __str__(self) -> str:
        return 'inf' if self.value is None else str(self.value)

    def to_json(self) -> Union[int, str]:
        return 'inf' if self.value is None else self.value


INFINITE = ExtendedDistance(None)


class Arc(BaseModel):
    model_config = ConfigDict(frozen=True)

    tail: int = Field(ge=0)
    head: int = Field(ge=0)
    weight: int = Field(default=1, ge=0)

    def reversed(self) -> 'Arc':
        return Arc(tail=self.head, head=self.tail, weight=self.weight)


class Digraph(BaseModel):
    """Directed multigraph. An arc's identity is its position in ``arcs``."""
    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=0, validation_alias=AliasChoices('n', 'vertex_count'))
    arcs: Tuple[Arc, ...] = ()

    @model_validator(mode='after')
    def _check_arcs(self) -> 'Digraph':
        for idx, arc in enumerate(self.arcs):
            if arc.tail >= self.n or arc.head >= self.n:
                raise ValueError(f"arc {idx} ({arc.tail}, {arc.head}) leaves the vertex range [0, {self.n})")
            if arc.tail == arc.head:
                raise ValueError(f"arc {idx} is a self-loop on vertex {arc.tail}")
        return self

    @classmethod
    def from_edges(cls,
                   n: int,
                   pairs: Iterable[Tuple[int, int]],
                   weights: Optional[Sequence[int]] = None) -> 'Digraph':
        pairs = list(pairs)
        if weights is None:
            weights = [1] * len(pairs)
        if len(weights) != len(pairs):
            raise ValueError(f"got {len(weights)} weights for {len(pairs)} arcs")
        return cls(n=n, arcs=tuple(Arc(tail=t, head=h, weight=w) for (t, h), w in zip(pairs, weights)))

    @property
    def vertex_count(self) -> int:
        return self.n

    @property
    def arc_count(self) -> int:
        return len(self.arcs)

    @property
    def total_weight(self) -> int:
        return sum(a.weight for a in self.arcs)

    @property
    def unit_weights(self) -> bool:
        return all(a.weight == 1 for a in self.arcs)

    @property
    def triples(self) -> Tuple[Tuple[int, int, int], ...]:
        return tuple((a.tail, a.head, a.weight) for a in self.arcs)

    @property
    def out_adjacency(self) -> Adjacency:
        return oriented_adjacency(self.n, self.triples)

    def save_to_json_file(self, file_name: str):
        logger.info(f"Saving digraph (n={self.n}, m={self.arc_count}) to {file_name}")
        with fsspec.open(file_name, "w", encoding="utf-8") as f:
            f.write(self.model_dump_json(indent=4))


class ReversalSet(BaseModel):
    model_config = ConfigDict(frozen=True)

    arc_ids: Tuple[int, ...] = ()

    @field_validator('arc_ids')
    @classmethod
    def _normalize(cls, value: Tuple[int, ...]) -> Tuple[int, ...]:
        negative = [a for a in value if a < 0]
        if negative:
            raise ValueError(f"arc ids must be nonnegative, got {negative}")
        return tuple(sorted(set(value)))

    @classmethod
    def of(cls, arc_ids: Iterable[int]) -> 'ReversalSet':
        return cls(arc_ids=tuple(arc_ids))

    @property
    def cardinality(self) -> int:
        return len(self.arc_ids)

    def validate_against(self, digraph: Digraph) -> 'ReversalSet':
        outside = [a for a in self.arc_ids if a >= digraph.arc_count]
        if outside:
            raise IndexError(f"arc ids {outside} out of range for a digraph with {digraph.arc_count} arcs")
        return self

    def total_weight(self, digraph: Digraph) -> int:
        self.validate_against(digraph)
        return sum(digraph.arcs[a].weight for a in self.arc_ids)

    def cost(self, digraph: Digraph, mode: CostMode) -> int:
        if mode == CostMode.CARDINALITY:
            self.validate_against(digraph)
            return self.cardinality
        return self.total_weight(digraph)


def load_digraph(file_name: str) -> Digraph:
    with fsspec.open(file_name, "r", encoding="utf-8") as f:
        digraph = Digraph.model_validate_json(f.read())
    logger.debug(f"Loaded digraph (n={digraph.n}, m={digraph.arc_count}) from {file_name}")
    return digraph


def to_dot(digraph: Digraph, name: str = 'D') -> str:
    dot = graphviz.Digraph(name=name)
    for v in range(digraph.n):
        dot.node(str(v))
    for idx, arc in enumerate(digraph.arcs):
        attrs = {'id': f"a{idx}"}
        if arc.weight != 1:
            attrs['label'] = str(arc.weight)
        dot.edge(str(arc.tail), str(arc.head), **attrs)
    return dot.source


def to_networkx(digraph: Digraph) -> nx.MultiDiGraph:
    g = nx.MultiDiGraph()
    g.add_nodes_from(range(digraph.n))
    for idx, arc in enumerate(digraph.arcs):
        g.add_edge(arc.tail, arc.head, key=idx, weight=arc.weight)
    return g


def reverse_arcs(digraph: Digraph, reversal: Union[ReversalSet, Iterable[int]]) -> Digraph:
    if not isinstance(reversal, ReversalSet):
        reversal = ReversalSet.of(reversal)
    reversal.validate_against(digraph)
    flipped = set(reversal.arc_ids)
    arcs = tuple(arc.reversed() if idx in flipped else arc for idx, arc in enumerate(digraph.arcs))
    return Digraph(n=digraph.n, arcs=arcs)


def oriented_adjacency(n: int, triples: Sequence[Tuple[int, int, int]], flipped: Iterable[int] = ()) -> Adjacency:
    flipped = set(flipped)
    adjacency: Adjacency = [[] for _ in range(n)]
    for idx, (tail, head, weight) in enumerate(triples):
        if idx in flipped:
            tail, head = head, tail
        adjacency[tail].append((head, weight))
    return adjacency


def distances_from(adjacency: Adjacency, source: int, unit: bool, limit: Optional[int] = None) -> List[Optional[int]]:
    """Shortest distances from ``source``; ``None`` for vertices unreachable within ``limit``."""
    dist: List[Optional[int]] = [None] * len(adjacency)
    dist[source] = 0
    if unit:
        queue = deque([source])
        while queue:
            v = queue.popleft()
            if limit is not None and dist[v] >= limit:
                continue
            for w, _ in adjacency[v]:
                if dist[w] is None:
                    dist[w] = dist[v] + 1
                    queue.append(w)
        return dist

    settled = [False] * len(adjacency)
    heap = [(0, source)]
    while heap:
        d, v = heapq.heappop(heap)
        if settled[v]:
            continue
        settled[v] = True
        for w, weight in adjacency[v]:
            nd = d + weight
            if limit is not None and nd > limit:
                continue
            if dist[w] is None or nd < dist[w]:
                dist[w] = nd
                heapq.heappush(heap, (nd, w))
    return dist


def within_diameter(adjacency: Adjacency, limit: int, unit: bool) -> bool:
    for source in range(len(adjacency)):
        if any(d is None for d in distances_from(adjacency, source, unit, limit)):
            return False
    return True


def adjacency_diameter(adjacency: Adjacency, unit: bool) -> ExtendedDistance:
    longest = 0
    for source in range(len(adjacency)):
        dist = distances_from(adjacency, source, unit)
        if any(d is None for d in dist):
            return INFINITE
        longest = max(longest, max(dist))
    return ExtendedDistance(longest)


def _resolve_unit(digraph: Digraph, method: str) -> bool:
    if method == 'auto':
        return digraph.unit_weights
    if method == 'bfs':
        if not digraph.unit_weights:
            raise ValueError("breadth-first search needs unit weights")
        return True
    if method == 'dijkstra':
        return False
    raise ValueError(f"unknown distance method: {method}")


def _check_vertex(digraph: Digraph, v: int):
    if not 0 <= v < digraph.n:
        raise IndexError(f"vertex {v} out of range for a digraph with {digraph.n} vertices")


def single_source_distances(digraph: Digraph, source: int, method: str = 'auto') -> List[ExtendedDistance]:
    _check_vertex(digraph, source)
    unit = _resolve_unit(digraph, method)
    return [ExtendedDistance(d) for d in distances_from(digraph.out_adjacency, source, unit)]


def distance(digraph: Digraph, u: int, v: int, method: str = 'auto') -> ExtendedDistance:
    _check_vertex(digraph, v)
    return single_source_distances(digraph, u, method)[v]


def all_pairs_distances(digraph: Digraph, worker_threads: int = 1) -> List[List[ExtendedDistance]]:
    if worker_threads > 1:
        return Parallel(backend='threading', n_jobs=worker_threads)(
            delayed(single_source_distances)(digraph, s) for s in range(digraph.n))
    return [single_source_distances(digraph, s) for s in range(digraph.n)]


def diameter(digraph: Digraph) -> ExtendedDistance:
    if digraph.n == 0:
        raise ValueError("diameter is undefined for the empty digraph")
    return adjacency_diameter(digraph.out_adjacency, digraph.unit_weights)


def is_strongly_connected(digraph: Digraph) -> bool:
    if digraph.n == 0:
        raise ValueError("strong connectivity is undefined for the empty digraph")
    return nx.is_strongly_connected(to_networkx(digraph))
