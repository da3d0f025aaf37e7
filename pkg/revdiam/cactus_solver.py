"""Exact k-Reversals on cactus digraphs.

Every finite-diameter orientation of a bridgeless cactus orients each cycle as a directed cycle, so
the search space is one of two orientations per cycle. The program walks the cycle tree bottom-up.
For an anchor vertex v and the part of the graph hanging below v it keeps a Pareto table

    (to, from) -> minimum reversal cost

where ``to`` is the largest distance from v into that part and ``from`` the largest distance from
that part back to v, over orientations whose internal distances are all within the limit.
A pair of vertices below different children of a cycle position is joined through the cycle,
so the cross term always pairs the ``from`` bound of one side with the ``to`` bound of the other.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, NamedTuple, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict

from .cactus import CycleTree, HasBridge, NotCactus, NotCactusError, cactus_decompose
from .digraph import CostMode, Digraph, ReversalSet, diameter, reverse_arcs
from .solver import Infeasible, Solution, TargetDiameterError

logger = logging.getLogger('revdiam.cactus_solver')


class Orientation(str, Enum):
    CLOCKWISE = 'clockwise'
    COUNTERCLOCKWISE = 'counterclockwise'


class CycleOrientationCost(BaseModel):
    model_config = ConfigDict(frozen=True)

    f: int
    total: int

    @property
    def counterclockwise(self) -> int:
        return self.total - self.f

    def of(self, orientation: Orientation) -> int:
        return self.f if orientation == Orientation.CLOCKWISE else self.counterclockwise


class DpState(NamedTuple):
    d_to: int
    d_from: int


@dataclass(frozen=True)
class DpValue:
    cost: int
    choice: Optional[Orientation]
    # one DpState per child (vertex tables) or per walked cycle position (cycle tables)
    picks: Tuple[DpState, ...]


DpTable = Dict[DpState, DpValue]


def _forward(digraph: Digraph, tree: CycleTree, cycle_idx: int, position: int) -> bool:
    cycle = tree.cycles[cycle_idx]
    arc = digraph.arcs[cycle.arc_ids[position]]
    return arc.tail == tree.vertex_origin[cycle.vertices[position]]


def _arc_cost(digraph: Digraph, arc_id: int, mode: CostMode) -> int:
    return 1 if mode == CostMode.CARDINALITY else digraph.arcs[arc_id].weight


def cycle_costs(digraph: Digraph, tree: CycleTree, mode: CostMode = CostMode.WEIGHT) -> List[CycleOrientationCost]:
    """Cost of making each cycle agree with its stored traversal order (``f``) and the cycle total."""
    costs = []
    for idx, cycle in enumerate(tree.cycles):
        f = 0
        total = 0
        for position, arc_id in enumerate(cycle.arc_ids):
            if arc_id is None:
                continue
            c = _arc_cost(digraph, arc_id, mode)
            total += c
            if not _forward(digraph, tree, idx, position):
                f += c
        costs.append(CycleOrientationCost(f=f, total=total))
    return costs


def _pareto(table: DpTable) -> DpTable:
    kept: DpTable = {}
    for state, value in sorted(table.items(), key=lambda item: (item[1].cost, item[0])):
        if any(k.d_to <= state.d_to and k.d_from <= state.d_from for k in kept):
            continue
        kept[state] = value
    return kept


def _offer(table: DpTable, state: DpState, value: DpValue):
    current = table.get(state)
    if current is None or value.cost < current.cost:
        table[state] = value


class _CactusProgram:

    def __init__(self, digraph: Digraph, tree: CycleTree, limit: int, mode: CostMode):
        self._digraph = digraph
        self._tree = tree
        self._limit = limit
        self._costs = cycle_costs(digraph, tree, mode)
        self._children = tree.children_by_vertex()
        self._vertex_tables: Dict[int, DpTable] = {}
        self._cycle_tables: Dict[int, DpTable] = {}

    def _weight(self, arc_id: Optional[int]) -> int:
        return 0 if arc_id is None else self._digraph.arcs[arc_id].weight

    def _walk(self, cycle_idx: int, orientation: Orientation) -> Tuple[List[Tuple[int, int]], int]:
        """Non-top vertices in travel order with their distance from the top, plus the cycle weight."""
        cycle = self._tree.cycles[cycle_idx]
        weights = [self._weight(a) for a in cycle.arc_ids]
        steps = []
        travelled = 0
        if orientation == Orientation.CLOCKWISE:
            for i in range(1, cycle.length):
                travelled += weights[i - 1]
                steps.append((cycle.vertices[i], travelled))
        else:
            for i in range(cycle.length - 1, 0, -1):
                travelled += weights[i]
                steps.append((cycle.vertices[i], travelled))
        return steps, sum(weights)

    def vertex_table(self, vertex: int) -> DpTable:
        if vertex in self._vertex_tables:
            return self._vertex_tables[vertex]
        limit = self._limit
        table: DpTable = {DpState(0, 0): DpValue(cost=0, choice=None, picks=())}
        for child in self._children.get(vertex, ()):
            merged: DpTable = {}
            for (a, b), acc in table.items():
                for sub, value in self._cycle_tables[child].items():
                    if sub.d_from + a > limit or b + sub.d_to > limit:
                        continue
                    _offer(merged, DpState(max(a, sub.d_to), max(b, sub.d_from)),
                           DpValue(cost=acc.cost + value.cost, choice=None, picks=acc.picks + (sub, )))
            table = _pareto(merged)
            if not table:
                break
        self._vertex_tables[vertex] = table
        return table

    def _oriented_cycle_table(self, cycle_idx: int, orientation: Orientation) -> DpTable:
        limit = self._limit
        steps, total = self._walk(cycle_idx, orientation)
        states: DpTable = {
            DpState(0, 0): DpValue(cost=self._costs[cycle_idx].of(orientation), choice=orientation, picks=())
        }
        for vertex, travelled in steps:
            below = self.vertex_table(vertex)
            nxt: DpTable = {}
            for (a, b), acc in states.items():
                # an earlier vertex x reaches this one through the top unless x is the top itself
                slack = max(0, b - total)
                for sub, value in below.items():
                    to_here = travelled + sub.d_to
                    back = sub.d_from + total - travelled
                    if to_here + slack > limit or back + a > limit:
                        continue
                    _offer(nxt, DpState(max(a, to_here), max(b, back)),
                           DpValue(cost=acc.cost + value.cost, choice=orientation, picks=acc.picks + (sub, )))
            states = _pareto(nxt)
            if not states:
                break
        return states

    def cycle_table(self, cycle_idx: int) -> DpTable:
        table: DpTable = {}
        for orientation in (Orientation.CLOCKWISE, Orientation.COUNTERCLOCKWISE):
            for state, value in self._oriented_cycle_table(cycle_idx, orientation).items():
                _offer(table, state, value)
        return _pareto(table)

    def solve(self) -> Optional[DpValue]:
        # cycles are stored parents first
        for idx in reversed(range(len(self._tree.cycles))):
            self._cycle_tables[idx] = self.cycle_table(idx)
        anchor = self.vertex_table(self._tree.root_vertex)
        if not anchor:
            return None
        return min(anchor.values(), key=lambda v: v.cost)

    def orientations(self, best: DpValue) -> Dict[int, Orientation]:
        chosen: Dict[int, Orientation] = {}
        pending = [(self._tree.root_vertex, best)]
        while pending:
            vertex, value = pending.pop()
            for child, state in zip(self._children.get(vertex, ()), value.picks):
                cycle_value = self._cycle_tables[child][state]
                chosen[child] = cycle_value.choice
                steps, _ = self._walk(child, cycle_value.choice)
                for (step_vertex, _), sub in zip(steps, cycle_value.picks):
                    pending.append((step_vertex, self._vertex_tables[step_vertex][sub]))
        return chosen


def solve_cactus(digraph: Digraph,
                 d: int,
                 k: int,
                 mode: CostMode = CostMode.CARDINALITY,
                 root_vertex: int = 0) -> Union[Solution, Infeasible]:
    if d < 1:
        raise TargetDiameterError(f"target diameter must be positive, got {d}")
    if k < 0:
        raise ValueError(f"budget must be nonnegative, got {k}")
    decomposition = cactus_decompose(digraph, root_vertex=root_vertex)
    if isinstance(decomposition, NotCactus):
        raise NotCactusError(decomposition.reason)
    if isinstance(decomposition, HasBridge):
        return Infeasible(reason=f"bridge arcs {list(decomposition.arc_ids)} cannot lie on a directed cycle")

    tree = decomposition.expanded()
    limit = min(d, digraph.total_weight)
    logger.info(f"Cactus program over {len(tree.cycles)} cycle(s), distance limit {limit}, mode={mode.value}")
    program = _CactusProgram(digraph, tree, limit, mode)
    best = program.solve()
    if best is None:
        return Infeasible(reason=f"no cyclic orientation reaches diameter {d}")
    if best.cost > k:
        return Infeasible(reason=f"reaching diameter {d} costs {best.cost}, budget is {k}")

    flips = []
    for idx, orientation in program.orientations(best).items():
        for position, arc_id in enumerate(tree.cycles[idx].arc_ids):
            if arc_id is None:
                continue
            if _forward(digraph, tree, idx, position) != (orientation == Orientation.CLOCKWISE):
                flips.append(arc_id)
    witness = ReversalSet.of(flips)
    cost = witness.cost(digraph, mode)
    if cost != best.cost:
        raise RuntimeError(f"trace-back cost {cost} differs from the program optimum {best.cost}")
    return Solution(witness=witness, achieved_diameter=diameter(reverse_arcs(digraph, witness)), cost=cost)
