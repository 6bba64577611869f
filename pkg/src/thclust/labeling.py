"""Label assignment via minimum feasible flow over the correspondence graph.

Each unit of flow traces one label's trajectory through the levels; covering
every point with in-flow at least 1 while minimizing total flow yields a
small set of labels whose copies never jump farther than the correspondence
locality.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .metric import MetricSpace, TemporalSampling, ValidationError
from .temporal import (
    Correspondence,
    LocalSolution,
    require_correspondence,
    solve_local,
)

SOURCE = ("source",)
SINK = ("sink",)


def point_node(level: int, point: str) -> tuple:
    return ("point", int(level), str(point))


@dataclass(frozen=True)
class FlowNetwork:
    """Layered flow instance: source, one node per (level, point), sink.

    Edges run source to level 1, correspondence pairs to the next level,
    and the last level to the sink. Every point node carries an implicit
    in-flow lower bound of 1.
    """

    levels: tuple[tuple[str, ...], ...]
    edges: tuple[tuple[tuple, tuple], ...]

    @property
    def point_nodes(self) -> tuple[tuple, ...]:
        return tuple(
            point_node(i, p) for i, level in enumerate(self.levels) for p in level
        )

    @property
    def vertices(self) -> tuple[tuple, ...]:
        return (SOURCE,) + self.point_nodes + (SINK,)

    @property
    def lower_bounds(self) -> dict[tuple, int]:
        return {node: 1 for node in self.point_nodes}

    @property
    def size(self) -> int:
        """Total number of point nodes, the n of the value bound."""
        return sum(len(level) for level in self.levels)


def build_flow_instance(sampling: TemporalSampling,
                        correspondences) -> FlowNetwork:
    """Assemble the layered network for a sampling and its correspondences."""
    corrs = tuple(correspondences)
    if len(corrs) != sampling.t - 1:
        raise ValidationError(
            f"expected {sampling.t - 1} correspondences, got {len(corrs)}"
        )
    edges: list[tuple[tuple, tuple]] = []
    for p in sampling.levels[0]:
        edges.append((SOURCE, point_node(0, p)))
    for i, corr in enumerate(corrs):
        if not isinstance(corr, Correspondence):
            corr = Correspondence.from_pairs(corr)
        require_correspondence(corr, sampling.levels[i], sampling.levels[i + 1])
        for u, v in corr.pairs:
            edges.append((point_node(i, u), point_node(i + 1, v)))
    last = sampling.t - 1
    for p in sampling.levels[last]:
        edges.append((point_node(last, p), SINK))
    return FlowNetwork(levels=sampling.levels, edges=tuple(sorted(edges)))


@dataclass(frozen=True)
class IntegralFlow:
    """Integer flow on a :class:`FlowNetwork` satisfying all lower bounds."""

    network: FlowNetwork
    flow: dict[tuple[tuple, tuple], int] = field(repr=False)
    value: int

    def validate(self) -> None:
        known = set(self.network.edges)
        inflow: dict[tuple, int] = {}
        outflow: dict[tuple, int] = {}
        for edge, amount in self.flow.items():
            if edge not in known:
                raise ValidationError(f"flow on unknown edge {edge}")
            if amount < 0 or amount != int(amount):
                raise ValidationError(f"flow on {edge} must be a nonnegative integer")
            a, b = edge
            outflow[a] = outflow.get(a, 0) + amount
            inflow[b] = inflow.get(b, 0) + amount
        for node in self.network.point_nodes:
            got_in = inflow.get(node, 0)
            if got_in < 1:
                raise ValidationError(f"in-flow below 1 at {node}")
            if got_in != outflow.get(node, 0):
                raise ValidationError(f"flow not conserved at {node}")
        if self.value != outflow.get(SOURCE, 0) or self.value != inflow.get(SINK, 0):
            raise ValidationError("flow value disagrees with terminal throughput")

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "edges": [
                {"from": list(a), "to": list(b), "flow": self.flow[(a, b)]}
                for a, b in self.network.edges
                if self.flow.get((a, b), 0) > 0
            ],
        }


class _MaxFlowGraph:
    """Edmonds-Karp with sorted adjacency, so augmentation is deterministic."""

    def __init__(self):
        self.cap: dict[tuple, dict[tuple, int]] = {}

    def add_edge(self, u: tuple, v: tuple, cap: int) -> None:
        self.cap.setdefault(u, {})[v] = self.cap.setdefault(u, {}).get(v, 0) + cap
        self.cap.setdefault(v, {}).setdefault(u, 0)

    def max_flow(self, source: tuple, sink: tuple) -> int:
        total = 0
        adjacency = {u: sorted(nbrs) for u, nbrs in self.cap.items()}
        while True:
            prev: dict[tuple, tuple] = {source: source}
            queue = deque([source])
            while queue and sink not in prev:
                u = queue.popleft()
                for v in adjacency.get(u, ()):
                    if v not in prev and self.cap[u][v] > 0:
                        prev[v] = u
                        queue.append(v)
            if sink not in prev:
                return total
            bottleneck = None
            v = sink
            while v != source:
                u = prev[v]
                c = self.cap[u][v]
                bottleneck = c if bottleneck is None else min(bottleneck, c)
                v = u
            v = sink
            while v != source:
                u = prev[v]
                self.cap[u][v] -= bottleneck
                self.cap[v][u] += bottleneck
                v = u
            total += bottleneck


def min_feasible_flow(network: FlowNetwork) -> IntegralFlow:
    """Minimum-value integral flow meeting every in-flow lower bound.

    Lower bounds are shifted onto node-splitting edges, feasibility is
    established by saturating the induced excess, and the value is then
    reduced by augmenting from sink back to source in the residual. The
    instance is always feasible (route one unit through every point of the
    widest level); anything else indicates a broken network and raises.
    """
    n = network.size
    cap = n  # no minimal flow needs more than one unit per point
    graph = _MaxFlowGraph()

    def inner(node: tuple) -> tuple:
        return node if node in (SOURCE, SINK) else ("in",) + node

    def outer(node: tuple) -> tuple:
        return node if node in (SOURCE, SINK) else ("out",) + node

    for a, b in network.edges:
        graph.add_edge(outer(a), inner(b), cap)
    # Node split carries the lower bound: cap - 1 here, 1 restored later.
    for node in network.point_nodes:
        graph.add_edge(inner(node), outer(node), cap - 1)
    excess: dict[tuple, int] = {}
    for node in network.point_nodes:
        excess[inner(node)] = excess.get(inner(node), 0) - 1
        excess[outer(node)] = excess.get(outer(node), 0) + 1
    graph.add_edge(SINK, SOURCE, cap)

    super_source = ("feasibility-source",)
    super_sink = ("feasibility-sink",)
    need = 0
    for node, amount in sorted(excess.items()):
        if amount > 0:
            graph.add_edge(super_source, node, amount)
            need += amount
        elif amount < 0:
            graph.add_edge(node, super_sink, -amount)
    pushed = graph.max_flow(super_source, super_sink)
    if pushed != need:
        raise RuntimeError("layered instance unexpectedly infeasible")
    # Freeze the artificial plumbing, then push back value.
    for node in list(graph.cap.get(super_source, {})):
        graph.cap[super_source][node] = 0
        graph.cap[node][super_source] = 0
    for node in list(graph.cap.get(super_sink, {})):
        graph.cap[super_sink][node] = 0
        graph.cap[node][super_sink] = 0
    circulating = graph.cap[SOURCE][SINK]  # residual of the sink->source arc
    graph.cap[SINK][SOURCE] = 0
    graph.cap[SOURCE][SINK] = 0
    returned = graph.max_flow(SINK, SOURCE)

    flow: dict[tuple[tuple, tuple], int] = {}
    for a, b in network.edges:
        u, v = outer(a), inner(b)
        flow[(a, b)] = graph.cap[v][u]  # residual backward cap equals the flow
    value = circulating - returned
    result = IntegralFlow(network=network, flow=flow, value=value)
    result.validate()
    if value > n:
        raise RuntimeError(f"minimum flow value {value} exceeds point count {n}")
    return result


def decompose_paths(flow: IntegralFlow) -> list[tuple[str, ...]]:
    """Split a feasible flow into unit source-to-sink paths.

    Extraction is greedy along the lexicographically smallest positive-flow
    edge, which makes the decomposition, and hence the labels, reproducible.
    Paths are returned as per-level point ids.
    """
    flow.validate()
    remaining = {edge: amount for edge, amount in flow.flow.items() if amount > 0}
    outgoing: dict[tuple, list[tuple]] = {}
    for a, b in sorted(remaining):
        outgoing.setdefault(a, []).append(b)
    paths = []
    for _ in range(flow.value):
        node = SOURCE
        trail: list[str] = []
        while node != SINK:
            nxt = None
            for b in outgoing.get(node, ()):
                if remaining.get((node, b), 0) > 0:
                    nxt = b
                    break
            if nxt is None:
                raise RuntimeError(f"flow decomposition stuck at {node}")
            remaining[(node, nxt)] -= 1
            if nxt != SINK:
                trail.append(nxt[2])
            node = nxt
        paths.append(tuple(trail))
    if any(amount != 0 for amount in remaining.values()):
        raise RuntimeError("flow decomposition left residual flow")
    return paths


@dataclass(frozen=True)
class Labeling:
    """Map from points of one level to label sets partitioning [k]."""

    labels: dict[str, frozenset[int]] = field(repr=False)
    k: int

    def __post_init__(self):
        seen: set[int] = set()
        for point, group in self.labels.items():
            if not group:
                raise ValidationError(f"point {point!r} has no labels")
            if seen & group:
                dup = min(seen & group)
                raise ValidationError(f"label {dup} assigned to two points")
            seen |= group
        if seen != set(range(1, self.k + 1)):
            raise ValidationError(f"labels do not partition 1..{self.k}")

    def label_of(self, point: str) -> frozenset[int]:
        try:
            return self.labels[point]
        except KeyError:
            raise ValidationError(f"unknown point {point!r}") from None

    def holder_of(self, label: int) -> str:
        for point, group in self.labels.items():
            if label in group:
                return point
        raise ValidationError(f"label {label} not in use")

    def to_list(self) -> list[dict]:
        return [
            {"point": p, "labels": sorted(self.labels[p])}
            for p in sorted(self.labels)
        ]

    @classmethod
    def from_list(cls, entries, k: int) -> "Labeling":
        labels = {}
        for entry in entries:
            labels[str(entry["point"])] = frozenset(int(x) for x in entry["labels"])
        return cls(labels=labels, k=k)


def paths_to_labelings(paths) -> tuple[Labeling, ...]:
    """Turn unit paths into per-level labelings.

    Paths are sorted by their visited point ids and numbered 1..k in that
    order; a point's label set is every path that runs through it.
    """
    ordered = sorted(paths)
    if not ordered:
        raise ValidationError("at least one path is required")
    t = len(ordered[0])
    if any(len(path) != t for path in ordered):
        raise ValidationError("paths visit differing level counts")
    k = len(ordered)
    out = []
    for level in range(t):
        assignment: dict[str, set[int]] = {}
        for j, path in enumerate(ordered, start=1):
            assignment.setdefault(path[level], set()).add(j)
        out.append(
            Labeling(labels={p: frozenset(s) for p, s in assignment.items()}, k=k)
        )
    return tuple(out)


@dataclass(frozen=True)
class ContiguityViolation:
    condition: int
    point: str
    label: int


def check_contiguity(l1: Labeling, l2: Labeling, delta: float,
                     ambient: MetricSpace):
    """Do two labelings keep every label within distance ``delta``?

    Condition 1: each point's labels in the first level reappear among the
    second level's points inside its closed delta-ball. Condition 2 is the
    mirror image. Returns (True, None) or (False, first violation).
    """
    slack = delta + 1e-9

    def covered(src: Labeling, dst: Labeling, condition: int):
        for point in sorted(src.labels):
            nearby: set[int] = set()
            for other in dst.labels:
                if ambient.distance(point, other) <= slack:
                    nearby |= dst.labels[other]
            missing = src.labels[point] - nearby
            if missing:
                return ContiguityViolation(
                    condition=condition, point=point, label=min(missing)
                )
        return None

    violation = covered(l1, l2, 1) or covered(l2, l1, 2)
    return (violation is None), violation


@dataclass(frozen=True)
class LabeledSolution:
    """Local solution plus the flow-derived labelings."""

    local: LocalSolution
    flow: IntegralFlow
    paths: tuple[tuple[str, ...], ...]
    labelings: tuple[Labeling, ...]

    @property
    def k(self) -> int:
        return self.flow.value

    def to_dict(self) -> dict:
        return {
            "solution": self.local.to_dict(),
            "k": self.k,
            "labelings": [lab.to_list() for lab in self.labelings],
        }


def solve_labeled(sampling: TemporalSampling, scheme: str = "fkw",
                  workers: int = 1) -> LabeledSolution:
    """Full pipeline: fit levels, connect them, and label by minimum flow.

    Uses at most one label per point overall, and adjacent labelings are
    contiguous at the solution's delta.
    """
    local = solve_local(sampling, scheme=scheme, workers=workers)
    network = build_flow_instance(sampling, local.correspondences)
    flow = min_feasible_flow(network)
    paths = tuple(decompose_paths(flow))
    labelings = paths_to_labelings(paths)
    return LabeledSolution(local=local, flow=flow, paths=paths, labelings=labelings)
