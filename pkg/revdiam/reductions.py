import logging
from itertools import combinations
from typing import Iterable, List, Optional, Set, Tuple, Union

import fsspec
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .digraph import CostMode, Digraph, ReversalSet, diameter, reverse_arcs, to_dot

logger = logging.getLogger('revdiam.reductions')

GADGET_SLOTS = ('u1', 'u2', 'd1', 'd2', 'aux_u1', 'aux_u2', 'aux_d1', 'aux_d2')
AUX_SLOTS = GADGET_SLOTS[4:]
GADGET_SIZE = len(GADGET_SLOTS)
CORE_ARCS = (('u1', 'u2'), ('d1', 'd2'), ('u1', 'd1'), ('d2', 'u2'))
GADGET_DIAMETER = 4


class OddSumError(ValueError):
    pass


class NonConformingWitnessError(ValueError):
    pass


class InvalidWitnessError(ValueError):
    pass


class DominatingSetInstance(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    edges: Tuple[Tuple[int, int], ...] = ()
    ell: int = Field(default=0, ge=0)

    @model_validator(mode='after')
    def _check_edges(self) -> 'DominatingSetInstance':
        seen = set()
        for i, j in self.edges:
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"edge ({i}, {j}) leaves the vertex range [0, {self.n})")
            if i == j:
                raise ValueError(f"edge ({i}, {j}) is a self-loop")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ValueError(f"edge {key} appears twice")
            seen.add(key)
        return self

    @property
    def normalized_edges(self) -> List[Tuple[int, int]]:
        return sorted((min(i, j), max(i, j)) for i, j in self.edges)

    def dominates(self, vertices: Iterable[int]) -> bool:
        covered = set(vertices)
        closed = set(covered)
        for i, j in self.edges:
            if i in covered:
                closed.add(j)
            if j in covered:
                closed.add(i)
        return len(closed) == self.n

    def dominating_set(self, max_size: Optional[int] = None) -> Optional[Tuple[int, ...]]:
        """Smallest dominating set of size at most ``max_size`` by exhaustive search."""
        max_size = self.ell if max_size is None else max_size
        for size in range(min(max_size, self.n) + 1):
            for candidate in combinations(range(self.n), size):
                if self.dominates(candidate):
                    return candidate
        return None


class GadgetVertices(BaseModel):
    model_config = ConfigDict(frozen=True)

    u1: int
    u2: int
    d1: int
    d2: int
    aux_u1: int
    aux_u2: int
    aux_d1: int
    aux_d2: int
    u_arc: int


class GadgetMap(BaseModel):
    model_config = ConfigDict(frozen=True)

    gadgets: Tuple[GadgetVertices, ...]


class PartitionInstance(BaseModel):
    model_config = ConfigDict(frozen=True)

    values: Tuple[int, ...] = Field(min_length=1)

    @field_validator('values')
    @classmethod
    def _positive(cls, value: Tuple[int, ...]) -> Tuple[int, ...]:
        if any(a <= 0 for a in value):
            raise ValueError(f"partition values must be positive, got {list(value)}")
        return value

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def even(self) -> bool:
        return sum(self.values) % 2 == 0

    @property
    def b(self) -> int:
        return sum(self.values) // 2

    def has_balanced_split(self) -> bool:
        reachable = {0}
        for a in self.values:
            reachable |= {s + a for s in reachable}
        return self.even and self.b in reachable


class ReductionInstance(BaseModel):
    """A generated k-Reversals instance with what is needed to map a witness back."""
    model_config = ConfigDict(frozen=True)

    kind: str
    digraph: Digraph
    d: int
    k: int
    mode: CostMode
    gadget_map: Optional[GadgetMap] = None
    partition: Optional[PartitionInstance] = None

    def save(self, prefix: str):
        logger.info(f"Writing {self.kind} instance to {prefix}.json, {prefix}.map.json and {prefix}.dot")
        self.digraph.save_to_json_file(f"{prefix}.json")
        with fsspec.open(f"{prefix}.map.json", "w", encoding="utf-8") as f:
            f.write(self.model_dump_json(indent=4, exclude={'digraph'}))
        with fsspec.open(f"{prefix}.dot", "w", encoding="utf-8") as f:
            f.write(to_dot(self.digraph, name=self.kind.replace('-', '_')))


def _vertex(gadget: int, slot: str) -> int:
    return GADGET_SIZE * gadget + GADGET_SLOTS.index(slot)


def dominating_set_to_kreversals(inst: DominatingSetInstance) -> ReductionInstance:
    n = inst.n
    pairs: List[Tuple[int, int]] = []

    def both_ways(x: int, y: int):
        pairs.append((x, y))
        pairs.append((y, x))

    u_arcs = []
    for i in range(n):
        for tail, head in CORE_ARCS:
            if (tail, head) == ('u1', 'u2'):
                u_arcs.append(len(pairs))
            pairs.append((_vertex(i, tail), _vertex(i, head)))
    for i in range(n):
        for slot in ('u1', 'u2', 'd1', 'd2'):
            both_ways(_vertex(i, slot), _vertex(i, 'aux_' + slot))
        for x, y in combinations(AUX_SLOTS, 2):
            if {x, y} != {'aux_d1', 'aux_d2'}:
                both_ways(_vertex(i, x), _vertex(i, y))
    for i, j in inst.normalized_edges:
        pairs.append((_vertex(i, 'u1'), _vertex(j, 'd1')))
        pairs.append((_vertex(j, 'd2'), _vertex(i, 'u2')))
        pairs.append((_vertex(j, 'u1'), _vertex(i, 'd1')))
        pairs.append((_vertex(i, 'd2'), _vertex(j, 'u2')))
    for i, j in combinations(range(n), 2):
        for x in AUX_SLOTS:
            for y in AUX_SLOTS:
                both_ways(_vertex(i, x), _vertex(j, y))

    digraph = Digraph.from_edges(GADGET_SIZE * n, pairs)
    achieved = diameter(digraph)
    if achieved != GADGET_DIAMETER:
        raise RuntimeError(f"generated gadget graph has diameter {achieved}, expected {GADGET_DIAMETER}")

    gadgets = tuple(
        GadgetVertices(u_arc=u_arcs[i], **{slot: _vertex(i, slot)
                                           for slot in GADGET_SLOTS}) for i in range(n))
    logger.info(f"Built gadget graph with {digraph.n} vertices and {digraph.arc_count} arcs for "
                f"{n} vertices, {len(inst.edges)} edges, ell={inst.ell}")
    return ReductionInstance(kind='dominating-set',
                             digraph=digraph,
                             d=GADGET_DIAMETER - 1,
                             k=inst.ell,
                             mode=CostMode.CARDINALITY,
                             gadget_map=GadgetMap(gadgets=gadgets))


def _arc_ids(witness: Union[ReversalSet, Iterable[int]]) -> Tuple[int, ...]:
    if isinstance(witness, ReversalSet):
        return witness.arc_ids
    return ReversalSet.of(witness).arc_ids


def extract_dominating_set(witness: Union[ReversalSet, Iterable[int]], gadget_map: GadgetMap) -> Set[int]:
    owner = {g.u_arc: i for i, g in enumerate(gadget_map.gadgets)}
    stray = [a for a in _arc_ids(witness) if a not in owner]
    if stray:
        raise NonConformingWitnessError(f"arcs {stray} are not gadget (u1, u2) arcs")
    return {owner[a] for a in _arc_ids(witness)}


def partition_to_weighted_kreversals(inst: PartitionInstance) -> ReductionInstance:
    if not inst.even:
        raise OddSumError(f"values {list(inst.values)} sum to {sum(inst.values)}, which is odd")
    pairs = []
    weights = []
    for i, a in enumerate(inst.values):
        pairs.extend([(i, i + 1), (i, i + 1)])
        weights.extend([1, a + 1])
    digraph = Digraph.from_edges(inst.n + 1, pairs, weights)
    bound = inst.b + inst.n
    logger.info(f"Built partition graph with {digraph.n} vertices, d=k={bound}")
    return ReductionInstance(kind='partition',
                             digraph=digraph,
                             d=bound,
                             k=bound,
                             mode=CostMode.WEIGHT,
                             partition=inst)


def extract_partition(witness: Union[ReversalSet, Iterable[int]], inst: PartitionInstance,
                      digraph: Digraph) -> Set[int]:
    """1-based indices whose heavy arc points forward once the witness is applied."""
    reversal = ReversalSet(arc_ids=_arc_ids(witness)).validate_against(digraph)
    bound = inst.b + inst.n
    weight = reversal.total_weight(digraph)
    if weight > bound:
        raise InvalidWitnessError(f"witness weight {weight} exceeds {bound}")
    achieved = diameter(reverse_arcs(digraph, reversal))
    if achieved > bound:
        raise InvalidWitnessError(f"witness leaves diameter {achieved}, needs at most {bound}")
    chosen = {i + 1 for i in range(inst.n) if 2 * i + 1 not in reversal.arc_ids}
    total = sum(inst.values[i - 1] for i in chosen)
    if total != inst.b:
        raise RuntimeError(f"forward heavy arcs {sorted(chosen)} sum to {total}, expected {inst.b}")
    return chosen
