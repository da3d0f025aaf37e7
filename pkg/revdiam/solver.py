import heapq
import logging
from dataclasses import dataclass
from itertools import combinations
from typing import Dict, Iterable, List, Optional, Tuple, Union

from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field

from . import config
from .digraph import (CostMode, Digraph, ExtendedDistance, ReversalSet, adjacency_diameter, diameter,
                      distances_from, oriented_adjacency, reverse_arcs, within_diameter)

logger = logging.getLogger('revdiam.solver')

# (cost, cardinality, sorted arc ids); smaller is better
SearchKey = Tuple[int, int, Tuple[int, ...]]


class TargetDiameterError(ValueError):
    pass


class OracleCapExceeded(ValueError):
    pass


class SolveBudget(BaseModel):
    model_config = ConfigDict(frozen=True)

    d: int = Field(ge=1)
    k: int = Field(ge=0)
    mode: CostMode = CostMode.CARDINALITY


@dataclass(frozen=True)
class Solution:
    witness: ReversalSet
    achieved_diameter: ExtendedDistance
    cost: int

    @property
    def key(self) -> SearchKey:
        return (self.cost, self.witness.cardinality, self.witness.arc_ids)


@dataclass(frozen=True)
class Infeasible:
    reason: str


class _ReversalSearch:
    """Evaluates reversal sets of one digraph against a diameter target."""

    def __init__(self, digraph: Digraph, d: int, mode: CostMode, budget: Optional[int]):
        self._n = digraph.n
        self._triples = digraph.triples
        self._unit = digraph.unit_weights
        self._d = d
        self._mode = mode
        self._budget = budget
        self._undirected: Optional[List[List[Optional[int]]]] = None

    @property
    def arc_count(self) -> int:
        return len(self._triples)

    def cost(self, arc_ids: Tuple[int, ...]) -> int:
        if self._mode == CostMode.CARDINALITY:
            return len(arc_ids)
        return sum(self._triples[a][2] for a in arc_ids)

    def key(self, arc_ids: Tuple[int, ...]) -> SearchKey:
        return (self.cost(arc_ids), len(arc_ids), arc_ids)

    def affordable(self, arc_ids: Tuple[int, ...]) -> bool:
        return self._budget is None or self.cost(arc_ids) <= self._budget

    def satisfied(self, arc_ids: Iterable[int]) -> bool:
        adjacency = oriented_adjacency(self._n, self._triples, arc_ids)
        return within_diameter(adjacency, self._d, self._unit)

    def achieved(self, arc_ids: Iterable[int]) -> ExtendedDistance:
        return adjacency_diameter(oriented_adjacency(self._n, self._triples, arc_ids), self._unit)

    def _undirected_distances(self) -> List[List[Optional[int]]]:
        if self._undirected is None:
            both = [(t, h, w) for t, h, w in self._triples] + [(h, t, w) for t, h, w in self._triples]
            adjacency = oriented_adjacency(self._n, both)
            self._undirected = [distances_from(adjacency, s, self._unit) for s in range(self._n)]
        return self._undirected

    def _violations(self, arc_ids: Tuple[int, ...]) -> List[Tuple[int, int]]:
        adjacency = oriented_adjacency(self._n, self._triples, arc_ids)
        pairs = []
        for u in range(self._n):
            dist = distances_from(adjacency, u, self._unit, self._d)
            pairs.extend((u, v) for v, dv in enumerate(dist) if dv is None)
        return pairs

    def _candidates(self, arc_ids: Tuple[int, ...], u: int, v: int) -> List[int]:
        # arcs pointing against some undirected u-v walk of weight <= d
        undirected = self._undirected_distances()
        flipped = set(arc_ids)
        found = []
        for idx, (tail, head, weight) in enumerate(self._triples):
            if idx in flipped:
                continue
            to_head = undirected[u][head]
            from_tail = undirected[tail][v]
            if to_head is not None and from_tail is not None and to_head + weight + from_tail <= self._d:
                found.append(idx)
        return found

    def branch(self, arc_ids: Tuple[int, ...]) -> Optional[List[int]]:
        """Arcs one of which every solution extending ``arc_ids`` must add; ``None`` if already solved."""
        violations = self._violations(arc_ids)
        if not violations:
            return None
        best: Optional[List[int]] = None
        for u, v in violations:
            found = self._candidates(arc_ids, u, v)
            if best is None or len(found) < len(best):
                best = found
            if not best:
                break
        return best

    def best_first(self, seeds: List[Tuple[int, ...]]) -> Optional[SearchKey]:
        heap = []
        seen = set()
        for ids in seeds:
            seen.add(ids)
            if self.affordable(ids):
                heap.append(self.key(ids))
        heapq.heapify(heap)
        expanded = 0
        while heap:
            key = heapq.heappop(heap)
            ids = key[2]
            candidates = self.branch(ids)
            expanded += 1
            if candidates is None:
                logger.debug(f"Search finished after {expanded} expansions at {ids}")
                return key
            for c in candidates:
                nxt = tuple(sorted(ids + (c, )))
                if nxt in seen:
                    continue
                seen.add(nxt)
                if self.affordable(nxt):
                    heapq.heappush(heap, self.key(nxt))
        logger.debug(f"Search exhausted after {expanded} expansions")
        return None


def _branch_and_bound(search: _ReversalSearch, worker_threads: int) -> Optional[SearchKey]:
    roots = search.branch(())
    if roots is None:
        return search.key(())
    seeds = [(c, ) for c in roots]
    logger.info(f"Branching on {len(seeds)} candidate arc(s)")
    if worker_threads > 1 and len(seeds) > 1:
        chunks = [seeds[i::worker_threads] for i in range(worker_threads)]
        results = Parallel(backend='threading', n_jobs=worker_threads)(
            delayed(search.best_first)(chunk) for chunk in chunks if chunk)
        found = [r for r in results if r is not None]
        return min(found) if found else None
    return search.best_first(seeds)


def _enumerate(search: _ReversalSearch, max_size: int, first_hit: bool,
               required: Optional[set] = None) -> Optional[SearchKey]:
    best: Optional[SearchKey] = None
    for size in range(max_size + 1):
        if best is not None and first_hit:
            break
        for ids in combinations(range(search.arc_count), size):
            if required is not None and required.isdisjoint(ids):
                continue
            key = search.key(ids)
            if best is not None and key >= best:
                continue
            if not search.affordable(ids):
                continue
            if search.satisfied(ids):
                best = key
                if first_hit:
                    break
    return best


def _solution(digraph: Digraph, key: SearchKey) -> Solution:
    witness = ReversalSet(arc_ids=key[2])
    return Solution(witness=witness, achieved_diameter=diameter(reverse_arcs(digraph, witness)), cost=key[0])


def solve_k_reversals(digraph: Digraph,
                      budget: SolveBudget,
                      worker_threads: int = 1,
                      strategy: str = 'branch') -> Union[Solution, Infeasible]:
    """Minimum-cost reversal set bringing the diameter down to ``budget.d``.

    Ties are broken by fewer arcs, then by the lexicographically smallest sorted arc-id sequence,
    so the answer does not depend on ``worker_threads`` or ``strategy``.
    """
    if budget.d < 2:
        raise TargetDiameterError(f"target diameter must be at least 2, got {budget.d}")
    logger.info(f"Solving n={digraph.n} m={digraph.arc_count} d={budget.d} k={budget.k} "
                f"mode={budget.mode.value} strategy={strategy}")
    search = _ReversalSearch(digraph, budget.d, budget.mode, budget.k)
    if strategy == 'branch':
        best = _branch_and_bound(search, worker_threads)
    elif strategy == 'enumerate':
        roots = search.branch(())
        if roots is None:
            best = search.key(())
        else:
            max_size = digraph.arc_count if budget.mode == CostMode.WEIGHT else min(budget.k, digraph.arc_count)
            best = _enumerate(search, max_size, budget.mode == CostMode.CARDINALITY, set(roots))
    else:
        raise ValueError(f"unknown search strategy: {strategy}")

    if best is None:
        return Infeasible(reason=f"no reversal set of {budget.mode.value} cost at most {budget.k} "
                          f"reaches diameter {budget.d}")
    solution = _solution(digraph, best)
    logger.info(f"Found witness {list(solution.witness.arc_ids)} with cost {solution.cost}, "
                f"diameter {solution.achieved_diameter}")
    return solution


def _check_oracle_cap(digraph: Digraph, cap: Optional[int]):
    cap = config.oracle_arc_cap() if cap is None else cap
    if digraph.arc_count > cap:
        raise OracleCapExceeded(f"oracle handles at most {cap} arcs, instance has {digraph.arc_count}; "
                                f"raise {config.ORACLE_CAP_ENV} to allow more")


def oracle_min_reversals(digraph: Digraph,
                         d: int,
                         mode: CostMode = CostMode.CARDINALITY,
                         cap: Optional[int] = None) -> Union[Solution, Infeasible]:
    """Exhaust every reversal subset. Ground truth for small instances."""
    if d < 1:
        raise ValueError(f"target diameter must be positive, got {d}")
    _check_oracle_cap(digraph, cap)
    search = _ReversalSearch(digraph, d, mode, None)
    best = _enumerate(search, digraph.arc_count, mode == CostMode.CARDINALITY)
    if best is None:
        return Infeasible(reason=f"no orientation reaches diameter {d}")
    return _solution(digraph, best)


def oracle_profile(digraph: Digraph,
                   mode: CostMode = CostMode.CARDINALITY,
                   cap: Optional[int] = None) -> Dict[int, Solution]:
    """Best reversal set for every finite diameter some orientation achieves exactly."""
    _check_oracle_cap(digraph, cap)
    search = _ReversalSearch(digraph, 1, mode, None)
    best: Dict[int, SearchKey] = {}
    for size in range(digraph.arc_count + 1):
        for ids in combinations(range(digraph.arc_count), size):
            achieved = search.achieved(ids)
            if not achieved.is_finite:
                continue
            key = search.key(ids)
            if achieved.value not in best or key < best[achieved.value]:
                best[achieved.value] = key
    return {
        value: Solution(witness=ReversalSet(arc_ids=key[2]), achieved_diameter=ExtendedDistance(value), cost=key[0])
        for value, key in sorted(best.items())
    }


def profile_optimum(profile: Dict[int, Solution], d: int) -> Optional[Solution]:
    eligible = [s for value, s in profile.items() if value <= d]
    return min(eligible, key=lambda s: s.key) if eligible else None
