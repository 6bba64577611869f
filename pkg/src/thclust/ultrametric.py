"""Ultrametric fitting, dendrograms, and cut-at-height clustering.

Two fitters are provided: the subdominant (single-linkage) ultrametric, which
is the max-norm-closest approximation from below, and the exact max-norm
nearest ultrametric obtained by the cut-weight procedure (scheme token
``fkw``). Both operate on :class:`~thclust.metric.MetricSpace` inputs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .metric import TOL, MetricSpace, ValidationError, shortest_path_closure

log = logging.getLogger(__name__)


def validate_ultrametric(mu, points=None, tol: float = TOL):
    """Check the strong triangle inequality, returning the first bad triple.

    Returns ``(True, None)`` when every triple satisfies
    ``mu[i][k] <= max(mu[i][j], mu[j][k])`` within ``tol``, else
    ``(False, (i, j, k))`` for the first violating triple in scan order.
    Malformed input (non-square, asymmetric, negative, nonzero diagonal)
    raises :class:`ValidationError` instead of returning False.
    """
    m = np.array(mu, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError("ultrametric matrix must be square")
    n = m.shape[0]
    if points is None:
        names = tuple(range(n))
    else:
        names = tuple(points)
        if len(names) != n:
            raise ValidationError("points do not match matrix size")
    if not np.isfinite(m).all():
        raise ValidationError("ultrametric values must be finite")
    if m.size and m.min() < -tol:
        raise ValidationError("negative ultrametric value")
    if np.abs(m - m.T).max() > tol:
        raise ValidationError("ultrametric matrix must be symmetric")
    if n and np.abs(np.diagonal(m)).max() > tol:
        raise ValidationError("ultrametric diagonal must be zero")
    for i in range(n):
        # max(mu[i][j], mu[j][k]) for all j,k at once; rows j, columns k.
        bound = np.maximum(m[i][:, None], m)
        bad = m[i][None, :] > bound + tol
        if bad.any():
            j, k = np.unravel_index(int(bad.argmax()), bad.shape)
            return False, (names[i], names[j], names[k])
    return True, None


class PseudoUltrametric:
    """Merge heights over a point set: symmetric, nonnegative, zero diagonal,
    and satisfying the strong triangle inequality. Zero height between
    distinct points is allowed."""

    def __init__(self, points, mu, validate=True):
        pts = tuple(str(p) for p in points)
        if not pts:
            raise ValidationError("at least one point is required")
        if len(set(pts)) != len(pts):
            raise ValidationError("duplicate point identifier")
        m = np.array(mu, dtype=float)
        if m.shape != (len(pts), len(pts)):
            raise ValidationError(
                f"height matrix must be {len(pts)}x{len(pts)}, got {m.shape}"
            )
        if validate:
            ok, triple = validate_ultrametric(m, points=pts)
            if not ok:
                raise ValidationError(
                    "strong triangle inequality fails at "
                    f"({triple[0]!r}, {triple[1]!r}, {triple[2]!r})"
                )
        m = np.maximum((m + m.T) / 2.0, 0.0)
        np.fill_diagonal(m, 0.0)
        m.setflags(write=False)
        self.points = pts
        self.mu = m
        self._index = {p: i for i, p in enumerate(pts)}

    def __len__(self) -> int:
        return len(self.points)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PseudoUltrametric):
            return NotImplemented
        return self.points == other.points and np.array_equal(self.mu, other.mu)

    __hash__ = None  # type: ignore[assignment]

    def index_of(self, point: str) -> int:
        try:
            return self._index[point]
        except KeyError:
            raise ValidationError(f"unknown point {point!r}") from None

    def value(self, u: str, v: str) -> float:
        return float(self.mu[self.index_of(u), self.index_of(v)])

    def to_dict(self) -> dict:
        return {
            "points": list(self.points),
            "matrix": [[float(x) for x in row] for row in self.mu],
            "ultrametric": True,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PseudoUltrametric":
        if not isinstance(data, dict) or "points" not in data or "matrix" not in data:
            raise ValidationError("ultrametric document needs 'points' and 'matrix'")
        return cls(data["points"], data["matrix"])


@dataclass(frozen=True)
class MstEdgeList:
    """Edges (u, v, weight) of a minimum spanning tree, u < v, in the
    deterministic selection order (weight, then endpoint ids)."""

    points: tuple[str, ...]
    edges: tuple[tuple[str, str, float], ...]

    def total_weight(self) -> float:
        return float(sum(w for _, _, w in self.edges))


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        root = i
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[i] != root:
            self.parent[i], i = root, self.parent[i]
        return root

    def union(self, i: int, j: int) -> bool:
        ri, rj = self.find(i), self.find(j)
        if ri == rj:
            return False
        self.parent[rj] = ri
        return True


def minimum_spanning_edges(space: MetricSpace) -> MstEdgeList:
    """Kruskal's algorithm on the complete distance graph.

    Equal-weight ties are broken by the lexicographic pair of endpoint ids,
    so the returned tree is unique for a given space.
    """
    pts = space.points
    n = len(pts)
    order = sorted(range(n), key=lambda i: pts[i])
    candidates = []
    for a in range(n):
        for b in range(a + 1, n):
            i, j = order[a], order[b]
            candidates.append((float(space.dist[i, j]), pts[i], pts[j], i, j))
    candidates.sort(key=lambda c: (c[0], c[1], c[2]))
    uf = _UnionFind(n)
    edges = []
    for w, u, v, i, j in candidates:
        if uf.union(i, j):
            edges.append((u, v, w))
            if len(edges) == n - 1:
                break
    return MstEdgeList(points=pts, edges=tuple(edges))


def _path_max_matrix(points: tuple[str, ...], edges) -> np.ndarray:
    """Bottleneck matrix of a spanning tree: entry (x, y) is the maximum
    edge weight on the tree path from x to y. Single linkage over the tree
    edges in ascending order."""
    n = len(points)
    index = {p: i for i, p in enumerate(points)}
    out = np.zeros((n, n))
    uf = _UnionFind(n)
    members: dict[int, list[int]] = {i: [i] for i in range(n)}
    for u, v, w in sorted(edges, key=lambda e: (e[2], e[0], e[1])):
        i, j = index[u], index[v]
        ri, rj = uf.find(i), uf.find(j)
        if ri == rj:
            raise ValidationError("edges contain a cycle")
        a, b = members.pop(ri), members.pop(rj)
        out[np.ix_(a, b)] = w
        out[np.ix_(b, a)] = w
        uf.union(ri, rj)
        members[uf.find(ri)] = a + b
    if len(members) != 1:
        raise ValidationError("edges do not span the point set")
    return out


def subdominant_ultrametric(space: MetricSpace) -> PseudoUltrametric:
    """Largest ultrametric dominated by the given distances.

    Heights are bottleneck weights over the minimum spanning tree, which is
    single linkage in fitting terms. The output never exceeds the input
    entrywise and is the unique max-norm-closest such ultrametric.
    """
    if len(space) == 1:
        return PseudoUltrametric(space.points, np.zeros((1, 1)), validate=False)
    tree = minimum_spanning_edges(space)
    mu = _path_max_matrix(space.points, tree.edges)
    return PseudoUltrametric(space.points, mu, validate=False)


@dataclass(frozen=True)
class FkwFit:
    """Everything produced by the exact nearest-ultrametric procedure."""

    ultrametric: PseudoUltrametric
    subdominant: PseudoUltrametric
    subdominant_error: float
    shift: float
    mst: MstEdgeList
    priorities: tuple[float, ...] = field(repr=False)
    clamped_pairs: tuple[tuple[str, str], ...] = field(repr=False)

    @property
    def error_bound(self) -> float:
        """The guaranteed max-norm error of ``ultrametric``: half the
        subdominant error."""
        return self.shift


def fkw_fit(space: MetricSpace) -> FkwFit:
    """Run the three-step cut-weight procedure and keep the intermediates.

    Step 1 builds the minimum spanning tree. Step 2 assigns each tree edge a
    priority: the largest source distance among pairs whose tree path
    contains the edge and whose bottleneck equals the edge weight (every
    such edge on the path receives the pair, which keeps the figure-style
    pendant edges honest). Step 3 cuts in descending priority; a pair first
    separated at edge e gets height p(e) minus half the subdominant fitting
    error, clamped at zero. The cut order never changes the result, so the
    heights are computed directly as tree path maxima over priorities.
    """
    pts = space.points
    n = len(pts)
    if n == 1:
        trivial = PseudoUltrametric(pts, np.zeros((1, 1)), validate=False)
        return FkwFit(trivial, trivial, 0.0, 0.0, MstEdgeList(pts, ()), (), ())

    tree = minimum_spanning_edges(space)
    musub = _path_max_matrix(pts, tree.edges)
    err = float(np.abs(space.dist - musub).max())
    shift = err / 2.0

    index = {p: i for i, p in enumerate(pts)}
    adj: dict[int, list[int]] = {i: [] for i in range(n)}
    for u, v, _ in tree.edges:
        adj[index[u]].append(index[v])
        adj[index[v]].append(index[u])
    # Root the tree and collect subtree masks for the child side of each edge.
    parent = np.full(n, -1, dtype=int)
    bfs = [0]
    seen = {0}
    for node in bfs:
        for nb in adj[node]:
            if nb not in seen:
                seen.add(nb)
                parent[nb] = node
                bfs.append(nb)
    subtree = np.eye(n, dtype=bool)
    for node in reversed(bfs):
        if parent[node] >= 0:
            subtree[parent[node]] |= subtree[node]

    priorities = []
    for u, v, w in tree.edges:
        i, j = index[u], index[v]
        child = i if parent[i] == j else j
        side_child = subtree[child]
        eligible = musub[i] <= w  # ball that makes the edge the bottleneck
        left = eligible & side_child
        right = eligible & ~side_child
        priorities.append(float(space.dist[np.ix_(left, right)].max()))

    reweighted = [(u, v, p) for (u, v, _), p in zip(tree.edges, priorities)]
    raw = _path_max_matrix(pts, reweighted) - shift
    clamped = np.argwhere(np.triu(raw < 0, 1))
    if len(clamped):
        log.info(
            "clamped %d negative heights at zero (first pair: %s, %s)",
            len(clamped), pts[clamped[0][0]], pts[clamped[0][1]],
        )
    mu = np.maximum(raw, 0.0)
    np.fill_diagonal(mu, 0.0)
    return FkwFit(
        ultrametric=PseudoUltrametric(pts, mu, validate=False),
        subdominant=PseudoUltrametric(pts, musub, validate=False),
        subdominant_error=err,
        shift=shift,
        mst=tree,
        priorities=tuple(priorities),
        clamped_pairs=tuple((pts[i], pts[j]) for i, j in clamped),
    )


def fkw_nearest_ultrametric(space: MetricSpace) -> PseudoUltrametric:
    """Max-norm-nearest ultrametric; its error is half the subdominant's."""
    return fkw_fit(space).ultrametric


@dataclass(frozen=True)
class Dendrogram:
    """Merge tree of an ultrametric.

    ``merges`` lists (height, left, right) with non-decreasing heights; each
    side is a leaf id (str) or the index of an earlier merge (int). Tied
    heights are stored as successive binary merges, smallest leaf id first,
    so there are always ``len(leaves) - 1`` merges.
    """

    leaves: tuple[str, ...]
    merges: tuple[tuple[float, int | str, int | str], ...]

    def __post_init__(self):
        if not self.leaves:
            raise ValidationError("dendrogram needs at least one leaf")
        if len(set(self.leaves)) != len(self.leaves):
            raise ValidationError("duplicate leaf identifier")
        if len(self.merges) != len(self.leaves) - 1:
            raise ValidationError(
                f"expected {len(self.leaves) - 1} merges, got {len(self.merges)}"
            )
        used: set[int | str] = set()
        prev = None
        for idx, (h, a, b) in enumerate(self.merges):
            if prev is not None and h < prev - TOL:
                raise ValidationError(f"merge heights decrease at index {idx}")
            prev = max(h, prev) if prev is not None else h
            for ref in (a, b):
                if isinstance(ref, str):
                    if ref not in self.leaves:
                        raise ValidationError(f"unknown leaf {ref!r} in merge {idx}")
                elif isinstance(ref, (int, np.integer)):
                    if not 0 <= ref < idx:
                        raise ValidationError(f"merge {idx} references invalid index {ref}")
                else:
                    raise ValidationError(f"merge {idx} has malformed reference {ref!r}")
                if ref in used:
                    raise ValidationError(f"merge {idx} reuses node {ref!r}")
                used.add(ref)
        if self.merges:
            expect = set(self.leaves) | set(range(len(self.merges) - 1))
            if used != expect:
                missing = sorted(str(x) for x in expect - used)
                raise ValidationError(f"merge tree not spanning; unused: {missing}")

    def to_ultrametric(self) -> PseudoUltrametric:
        """Replay the merges; the height of two leaves' first shared merge
        becomes their ultrametric value."""
        n = len(self.leaves)
        index = {p: i for i, p in enumerate(self.leaves)}
        mu = np.zeros((n, n))
        clusters: list[list[int]] = []
        for h, a, b in self.merges:
            left = [index[a]] if isinstance(a, str) else clusters[a]
            right = [index[b]] if isinstance(b, str) else clusters[b]
            mu[np.ix_(left, right)] = h
            mu[np.ix_(right, left)] = h
            clusters.append(left + right)
        return PseudoUltrametric(self.leaves, mu)

    def to_dict(self) -> dict:
        return {
            "leaves": list(self.leaves),
            "merges": [[float(h), a, b] for h, a, b in self.merges],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Dendrogram":
        if not isinstance(data, dict) or "leaves" not in data or "merges" not in data:
            raise ValidationError("dendrogram document needs 'leaves' and 'merges'")
        merges = []
        for entry in data["merges"]:
            if not isinstance(entry, (list, tuple)) or len(entry) != 3:
                raise ValidationError(f"malformed merge entry {entry!r}")
            h, a, b = entry
            merges.append((float(h), a, b))
        return cls(tuple(str(p) for p in data["leaves"]), tuple(merges))


def to_dendrogram(ultrametric: PseudoUltrametric) -> Dendrogram:
    """Canonical merge tree of an ultrametric.

    Merge events are emitted in ascending height; a multiway event becomes
    successive binary merges joining its groups smallest leaf id first.
    """
    ok, triple = validate_ultrametric(ultrametric.mu, points=ultrametric.points)
    if not ok:
        raise ValidationError(
            "strong triangle inequality fails at "
            f"({triple[0]!r}, {triple[1]!r}, {triple[2]!r})"
        )
    pts = ultrametric.points
    n = len(pts)
    mu = ultrametric.mu
    uf = _UnionFind(n)
    node_ref: dict[int, int | str] = {i: pts[i] for i in range(n)}
    min_leaf: dict[int, str] = {i: pts[i] for i in range(n)}
    merges: list[tuple[float, int | str, int | str]] = []
    iu, ju = np.triu_indices(n, 1)
    heights = sorted(set(mu[iu, ju].tolist()))
    for h in heights:
        pairs = np.argwhere(np.triu(mu == h, 1))
        # Components linked at this height may chain through several pairs;
        # group by transitive closure over the pair roots.
        chain = _UnionFind(n)
        for i, j in pairs:
            chain.union(uf.find(int(i)), uf.find(int(j)))
        merged: dict[int, list[int]] = {}
        for root in set(uf.find(i) for i in range(n)):
            merged.setdefault(chain.find(root), []).append(root)
        events = [sorted(roots, key=lambda r: min_leaf[r])
                  for roots in merged.values() if len(roots) > 1]
        for roots in sorted(events, key=lambda rs: min_leaf[rs[0]]):
            acc = roots[0]
            for nxt in roots[1:]:
                merges.append((h, node_ref[acc], node_ref[nxt]))
                uf.union(acc, nxt)
                new_root = uf.find(acc)
                node_ref[new_root] = len(merges) - 1
                min_leaf[new_root] = min(min_leaf[acc], min_leaf[nxt])
                acc = new_root
    return Dendrogram(leaves=pts, merges=tuple(merges))


def cut_at_height(ultrametric: PseudoUltrametric, r: float) -> list[list[str]]:
    """Partition the points into the equivalence classes of ``mu <= r``.

    Blocks come back with sorted member ids, ordered by their first member.
    """
    if r < 0:
        raise ValidationError("cut height must be nonnegative")
    pts = ultrametric.points
    n = len(pts)
    uf = _UnionFind(n)
    close = np.argwhere(np.triu(ultrametric.mu <= r + TOL, 1))
    for i, j in close:
        uf.union(int(i), int(j))
    blocks: dict[int, list[str]] = {}
    for i in range(n):
        blocks.setdefault(uf.find(i), []).append(pts[i])
    return sorted((sorted(b) for b in blocks.values()), key=lambda b: b[0])


def instability_family(n: int, eps: float) -> tuple[MetricSpace, MetricSpace]:
    """Paired metric graphs showing the nearest-ultrametric fitter's
    sensitivity to perturbation.

    Both spaces have ``n`` points: a unit-edge base path of ``n - 2`` points
    plus a two-point pendant loop attached near the middle. The two variants
    move a single ``1 + eps`` edge across that loop, so their max-norm
    distance is exactly ``eps``, yet the fitted heights of the pendant pair
    differ by roughly half the diameter. The subdominant fitter moves by at
    most ``eps`` on the same pair, which is the contrast the family exists
    to demonstrate.
    """
    if n < 5:
        raise ValidationError("family needs n >= 5")
    if not 0 <= eps < 1:
        raise ValidationError("eps must lie in [0, 1)")
    chain = n - 3  # unit edges along the base
    j = chain // 2
    width = max(2, len(str(chain)))
    base = [f"b{i:0{width}d}" for i in range(chain + 1)]
    pts = tuple(base + ["u", "v"])

    def build(split_weight: float, pendant_weight: float) -> MetricSpace:
        w = np.full((n, n), np.inf)
        np.fill_diagonal(w, 0.0)
        idx = {p: i for i, p in enumerate(pts)}

        def edge(a, b, weight):
            w[idx[a], idx[b]] = weight
            w[idx[b], idx[a]] = weight

        for i in range(chain):
            edge(base[i], base[i + 1], 1.0)
        edge(base[j], base[j + 1], split_weight)
        edge("u", base[j], 1.0)
        edge("u", "v", 1.0)
        edge("v", base[j + 1], pendant_weight)
        return MetricSpace(pts, dist=shortest_path_closure(w), validate=False)

    return build(1.0, 1.0 + eps), build(1.0 + eps, 1.0)
