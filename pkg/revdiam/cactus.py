import logging
from collections import deque
from typing import Dict, List, Optional, Tuple, Union

import networkx as nx
from pydantic import BaseModel, ConfigDict

from .digraph import Digraph, to_networkx

logger = logging.getLogger('revdiam.cactus')


class DisconnectedGraphError(ValueError):
    pass


class NotCactusError(ValueError):
    pass


class Cycle(BaseModel):
    """A simple cycle of the underlying multigraph in traversal order.

    ``vertices[0]`` is the vertex closest to the root. ``arc_ids[i]`` joins ``vertices[i]`` and
    ``vertices[(i + 1) % len]``; ``None`` marks a zero-weight arc of an expansion cycle.
    """
    model_config = ConfigDict(frozen=True)

    vertices: Tuple[int, ...]
    arc_ids: Tuple[Optional[int], ...]

    @property
    def top(self) -> int:
        return self.vertices[0]

    @property
    def length(self) -> int:
        return len(self.vertices)

    @property
    def virtual(self) -> bool:
        return all(a is None for a in self.arc_ids)


class CycleTree(BaseModel):
    model_config = ConfigDict(frozen=True)

    vertex_count: int
    cycles: Tuple[Cycle, ...]
    # (parent cycle, child cycle, shared vertex)
    tree_edges: Tuple[Tuple[int, int, int], ...]
    root: Optional[int]
    root_vertex: int
    vertex_origin: Tuple[int, ...]

    def children_by_vertex(self) -> Dict[int, List[int]]:
        children: Dict[int, List[int]] = {}
        for idx, cycle in enumerate(self.cycles):
            children.setdefault(cycle.top, []).append(idx)
        return children

    def arc_multiset(self) -> List[int]:
        return sorted(a for c in self.cycles for a in c.arc_ids if a is not None)

    def expanded(self) -> 'CycleTree':
        """Replace every vertex carrying two or more child cycles by a zero-weight cycle.

        A non-root vertex v with child cycles C_1..C_p gets the cycle (v, v_1, ..., v_p) and C_j
        hangs from the copy v_j. At the root vertex the new cycle (r, r_1, ..., r_q) becomes the root.
        """
        cycles = list(self.cycles)
        origin = list(self.vertex_origin)
        added: List[Cycle] = []
        for vertex, children in sorted(self.children_by_vertex().items()):
            if len(children) < 2:
                continue
            copies = []
            for child in children:
                copy = len(origin)
                origin.append(origin[vertex])
                copies.append(copy)
                c = cycles[child]
                cycles[child] = Cycle(vertices=(copy, ) + c.vertices[1:], arc_ids=c.arc_ids)
            added.append(Cycle(vertices=(vertex, ) + tuple(copies), arc_ids=(None, ) * (len(copies) + 1)))
            logger.debug(f"Expanded vertex {vertex} shared by {len(children)} cycles")
        if not added:
            return self
        return _assemble(len(origin), cycles + added, self.root_vertex, tuple(origin))


class NotCactus(BaseModel):
    reason: str
    arc_ids: Tuple[int, ...] = ()


class HasBridge(BaseModel):
    arc_ids: Tuple[int, ...]


def _assemble(vertex_count: int, cycles: List[Cycle], root_vertex: int, origin: Tuple[int, ...]) -> CycleTree:
    if not cycles:
        return CycleTree(vertex_count=vertex_count,
                         cycles=(),
                         tree_edges=(),
                         root=None,
                         root_vertex=root_vertex,
                         vertex_origin=origin)
    home: Dict[int, int] = {}
    for idx, cycle in enumerate(cycles):
        for v in cycle.vertices[1:]:
            home[v] = idx
    root = next((idx for idx, c in enumerate(cycles) if c.top == root_vertex and root_vertex not in home), None)
    if root is None:
        raise ValueError(f"no cycle starts at root vertex {root_vertex}")

    children: Dict[int, List[int]] = {idx: [] for idx in range(len(cycles))}
    for idx, cycle in enumerate(cycles):
        if idx == root:
            continue
        parent = home.get(cycle.top, root)
        children[parent].append(idx)

    order = []
    queue = deque([root])
    while queue:
        c = queue.popleft()
        order.append(c)
        queue.extend(children[c])
    position = {old: new for new, old in enumerate(order)}
    edges = []
    for parent in order:
        for child in children[parent]:
            edges.append((position[parent], position[child], cycles[child].top))
    return CycleTree(vertex_count=vertex_count,
                     cycles=tuple(cycles[c] for c in order),
                     tree_edges=tuple(edges),
                     root=0,
                     root_vertex=root_vertex,
                     vertex_origin=origin)


def cactus_decompose(digraph: Digraph, root_vertex: int = 0) -> Union[CycleTree, NotCactus, HasBridge]:
    n = digraph.n
    if n == 0:
        raise DisconnectedGraphError("the empty digraph has nothing to decompose")
    if not 0 <= root_vertex < n:
        raise IndexError(f"root vertex {root_vertex} out of range")
    if not nx.is_connected(to_networkx(digraph).to_undirected()):
        raise DisconnectedGraphError(f"underlying multigraph of the {n}-vertex digraph is disconnected")

    neighbours: List[List[Tuple[int, int]]] = [[] for _ in range(n)]
    for idx, arc in enumerate(digraph.arcs):
        neighbours[arc.tail].append((arc.head, idx))
        neighbours[arc.head].append((arc.tail, idx))

    depth = [-1] * n
    parent = [-1] * n
    parent_arc: List[Optional[int]] = [None] * n
    back_arcs: List[Tuple[int, int, int]] = []
    depth[root_vertex] = 0
    stack = [(root_vertex, iter(neighbours[root_vertex]))]
    while stack:
        v, it = stack[-1]
        for w, idx in it:
            if idx == parent_arc[v]:
                continue
            if depth[w] == -1:
                depth[w] = depth[v] + 1
                parent[w] = v
                parent_arc[w] = idx
                stack.append((w, iter(neighbours[w])))
                break
            if depth[w] < depth[v]:
                back_arcs.append((v, w, idx))
        else:
            stack.pop()

    cycles: List[Cycle] = []
    covered: Dict[int, int] = {}
    for low, top, back in back_arcs:
        path = [low]
        arcs = []
        x = low
        while x != top:
            arcs.append(parent_arc[x])
            x = parent[x]
            path.append(x)
        for tree_arc in arcs:
            if tree_arc in covered:
                other = cycles[covered[tree_arc]]
                logger.info(f"Arc {tree_arc} lies on two cycles, not a cactus")
                return NotCactus(reason=f"arc {tree_arc} lies on two cycles through vertices "
                                 f"{sorted(set(path) & set(other.vertices))}",
                                 arc_ids=(tree_arc, ))
            covered[tree_arc] = len(cycles)
        cycles.append(Cycle(vertices=tuple(reversed(path)), arc_ids=tuple(reversed(arcs)) + (back, )))

    bridges = sorted(a for a in parent_arc if a is not None and a not in covered)
    if bridges:
        logger.info(f"Found {len(bridges)} bridge(s): {bridges}")
        return HasBridge(arc_ids=tuple(bridges))

    tree = _assemble(n, cycles, root_vertex, tuple(range(n)))
    logger.debug(f"Decomposed {digraph.arc_count} arcs into {len(tree.cycles)} cycles")
    return tree
