"""Finite metric spaces, temporal samplings, and basic distance utilities.

Distances are dense float64 matrices indexed by opaque string point ids.
All numeric comparisons against structural invariants use the shared
tolerance ``TOL``.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

TOL = 1e-9


class ValidationError(ValueError):
    """An input violates a structural invariant (shape, symmetry, metric axioms)."""


def shortest_path_closure(weights: np.ndarray) -> np.ndarray:
    """All-pairs shortest paths of a symmetric weight matrix (Floyd-Warshall).

    ``np.inf`` entries mark absent edges. The result is the largest
    pseudometric dominated by the input, which makes this the canonical
    metric-repair step for perturbed matrices.
    """
    w = np.array(weights, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValidationError("weight matrix must be square")
    np.fill_diagonal(w, 0.0)
    for k in range(w.shape[0]):
        np.minimum(w, w[:, k : k + 1] + w[k : k + 1, :], out=w)
    return w


def _as_point_tuple(points: Iterable[str]) -> tuple[str, ...]:
    pts = tuple(str(p) for p in points)
    if not pts:
        raise ValidationError("at least one point is required")
    if len(set(pts)) != len(pts):
        seen: set[str] = set()
        for p in pts:
            if p in seen:
                raise ValidationError(f"duplicate point identifier {p!r}")
            seen.add(p)
    return pts


class MetricSpace:
    """A finite point set with explicit pairwise distances.

    Parameters
    ----------
    points : sequence of str
        Unique point identifiers.
    dist : array-like, optional
        Symmetric nonnegative matrix with zero diagonal. Derived from
        ``coords`` when omitted.
    coords : array-like, optional
        One row of Euclidean coordinates per point. When both ``dist`` and
        ``coords`` are given they must agree within ``TOL``.
    pseudo : bool
        Permit zero distance between distinct points.
    """

    def __init__(self, points, dist=None, coords=None, pseudo=False, validate=True):
        self.points = _as_point_tuple(points)
        n = len(self.points)
        self._index = {p: i for i, p in enumerate(self.points)}
        self.pseudo = bool(pseudo)

        if coords is not None:
            coords = np.array(coords, dtype=float)
            if coords.ndim != 2 or coords.shape[0] != n:
                raise ValidationError(
                    f"coords must have one row per point ({n}), got shape {coords.shape}"
                )
            coords.setflags(write=False)
        self.coords = coords

        derived = False
        if dist is None:
            if coords is None:
                raise ValidationError("provide dist or coords")
            diff = coords[:, None, :] - coords[None, :, :]
            dist = np.sqrt((diff**2).sum(axis=-1))
            derived = True
        else:
            dist = np.array(dist, dtype=float)

        if dist.shape != (n, n):
            raise ValidationError(f"distance matrix must be {n}x{n}, got {dist.shape}")
        if validate and not derived:
            self._check_matrix(dist)
            if coords is not None:
                diff = coords[:, None, :] - coords[None, :, :]
                eu = np.sqrt((diff**2).sum(axis=-1))
                gap = np.abs(eu - dist)
                if gap.max() > TOL:
                    i, j = np.unravel_index(int(gap.argmax()), gap.shape)
                    raise ValidationError(
                        "coords disagree with distances at pair "
                        f"({self.points[i]!r}, {self.points[j]!r})"
                    )
        # Canonicalize: exact symmetry, exact zero diagonal, no negative dust.
        dist = np.maximum((dist + dist.T) / 2.0, 0.0)
        np.fill_diagonal(dist, 0.0)
        dist.setflags(write=False)
        self.dist = dist
        if validate and not derived:
            self._check_triangle(dist)
        if validate and not self.pseudo:
            off = dist + np.diag(np.full(n, np.inf))
            if n > 1 and off.min() <= TOL:
                i, j = np.unravel_index(int(off.argmin()), off.shape)
                raise ValidationError(
                    f"zero distance between distinct points {self.points[i]!r} "
                    f"and {self.points[j]!r} (use pseudo=True to allow)"
                )

    def _check_matrix(self, dist: np.ndarray) -> None:
        if not np.isfinite(dist).all():
            raise ValidationError("distances must be finite")
        if dist.min() < -TOL:
            i, j = np.unravel_index(int(dist.argmin()), dist.shape)
            raise ValidationError(
                f"negative distance at pair ({self.points[i]!r}, {self.points[j]!r})"
            )
        asym = np.abs(dist - dist.T)
        if asym.max() > TOL:
            i, j = np.unravel_index(int(asym.argmax()), asym.shape)
            raise ValidationError(
                f"asymmetric distances at pair ({self.points[i]!r}, {self.points[j]!r})"
            )
        diag = np.abs(np.diagonal(dist))
        if diag.max() > TOL:
            i = int(diag.argmax())
            raise ValidationError(f"nonzero self-distance at point {self.points[i]!r}")

    def _check_triangle(self, dist: np.ndarray) -> None:
        # One hub at a time keeps memory linear in n^2.
        for k in range(len(self.points)):
            slack = dist - (dist[:, k : k + 1] + dist[k : k + 1, :])
            worst = slack.max()
            if worst > TOL:
                i, j = np.unravel_index(int(slack.argmax()), slack.shape)
                raise ValidationError(
                    "triangle inequality violated for "
                    f"({self.points[i]!r}, {self.points[j]!r}) via {self.points[k]!r}"
                )

    def __len__(self) -> int:
        return len(self.points)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MetricSpace):
            return NotImplemented
        if self.points != other.points or self.pseudo != other.pseudo:
            return False
        if not np.array_equal(self.dist, other.dist):
            return False
        a, b = self.coords, other.coords
        if (a is None) != (b is None):
            return False
        return a is None or np.array_equal(a, b)

    __hash__ = None  # type: ignore[assignment]

    def index_of(self, point: str) -> int:
        try:
            return self._index[point]
        except KeyError:
            raise ValidationError(f"unknown point {point!r}") from None

    def distance(self, u: str, v: str) -> float:
        return float(self.dist[self.index_of(u), self.index_of(v)])

    def restrict(self, points: Sequence[str]) -> "MetricSpace":
        """Sub-space on ``points`` (in the given order) with inherited distances."""
        pts = _as_point_tuple(points)
        idx = [self.index_of(p) for p in pts]
        sub = self.dist[np.ix_(idx, idx)]
        coords = None if self.coords is None else self.coords[idx]
        return MetricSpace(pts, dist=sub, coords=coords, pseudo=self.pseudo, validate=False)

    def to_dict(self) -> dict:
        out: dict = {"points": list(self.points)}
        if self.coords is not None:
            out["coords"] = [[float(x) for x in row] for row in self.coords]
        else:
            out["matrix"] = [[float(x) for x in row] for row in self.dist]
        if self.pseudo:
            out["pseudo"] = True
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "MetricSpace":
        if not isinstance(data, dict):
            raise ValidationError("metric space document must be an object")
        if "points" not in data:
            raise ValidationError("metric space document is missing 'points'")
        return cls(
            data["points"],
            dist=data.get("matrix"),
            coords=data.get("coords"),
            pseudo=bool(data.get("pseudo", False)),
        )


def perturb(space: MetricSpace, eps: float, seed: int) -> MetricSpace:
    """Random symmetric perturbation staying within ``eps`` in the max norm.

    Offsets are drawn i.i.d. uniform in [-eps, eps], one per unordered pair,
    added to the distances, clamped at zero, and repaired to a pseudometric by
    shortest-path closure. The closure of a perturbed matrix can drift more
    than ``eps`` below the original (short detours compound), so the offsets
    are halved until the repaired matrix stays within ``eps``; the procedure
    is deterministic per seed and always terminates because zero offsets
    reproduce the input exactly.
    """
    if eps < 0:
        raise ValidationError("eps must be nonnegative")
    if eps == 0:
        return MetricSpace(
            space.points, dist=space.dist, coords=space.coords,
            pseudo=space.pseudo, validate=False,
        )
    n = len(space.points)
    rng = np.random.default_rng(seed)
    off = rng.uniform(-eps, eps, size=(n, n))
    off = np.triu(off, 1)
    off = off + off.T
    scale = 1.0
    for _ in range(80):
        cand = np.maximum(space.dist + scale * off, 0.0)
        np.fill_diagonal(cand, 0.0)
        repaired = shortest_path_closure(cand)
        if np.abs(repaired - space.dist).max() <= eps:
            mask = ~np.eye(n, dtype=bool)
            pseudo = space.pseudo or bool(n > 1 and repaired[mask].min() <= TOL)
            return MetricSpace(space.points, dist=repaired, pseudo=pseudo, validate=False)
        scale *= 0.5
    return MetricSpace(
        space.points, dist=space.dist, coords=space.coords,
        pseudo=space.pseudo, validate=False,
    )


def _points_and_matrix(obj) -> tuple[tuple[str, ...], np.ndarray]:
    mat = getattr(obj, "dist", None)
    if mat is None:
        mat = getattr(obj, "mu", None)
    if mat is None:
        raise TypeError(f"object {obj!r} exposes neither distances nor ultrametric values")
    return obj.points, mat


def linf_distance(a, b) -> float:
    """Max-norm distance between two matrices over the identical point set.

    Accepts metric spaces and ultrametric fits interchangeably; point order
    may differ, the matrices are aligned by id.
    """
    pa, ma = _points_and_matrix(a)
    pb, mb = _points_and_matrix(b)
    ib = {p: i for i, p in enumerate(pb)}
    for p in pa:
        if p not in ib:
            raise ValidationError(f"point {p!r} missing from second space")
    if len(pa) != len(pb):
        ia = set(pa)
        for p in pb:
            if p not in ia:
                raise ValidationError(f"point {p!r} missing from first space")
    perm = [ib[p] for p in pa]
    aligned = mb[np.ix_(perm, perm)]
    return float(np.abs(ma - aligned).max())


def hausdorff_distance(p_ids: Sequence[str], q_ids: Sequence[str], ambient: MetricSpace) -> float:
    """Hausdorff distance between two non-empty subsets of an ambient space."""
    if not list(p_ids) or not list(q_ids):
        raise ValidationError("Hausdorff distance needs non-empty point sets")
    pi = [ambient.index_of(p) for p in p_ids]
    qi = [ambient.index_of(q) for q in q_ids]
    d = ambient.dist[np.ix_(pi, qi)]
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


class TemporalSampling:
    """An ordered sequence of non-empty levels inside one ambient space.

    Levels are subsets of the ambient point set and may share points across
    levels; inside one level each point appears once.
    """

    def __init__(self, ambient: MetricSpace, levels: Sequence[Sequence[str]]):
        if not isinstance(ambient, MetricSpace):
            raise ValidationError("ambient must be a MetricSpace")
        self.ambient = ambient
        lvls = []
        for i, level in enumerate(levels):
            pts = tuple(str(p) for p in level)
            if not pts:
                raise ValidationError(f"level {i} is empty")
            if len(set(pts)) != len(pts):
                raise ValidationError(f"level {i} repeats a point")
            for p in pts:
                ambient.index_of(p)
            lvls.append(pts)
        if not lvls:
            raise ValidationError("a sampling needs at least one level")
        self.levels: tuple[tuple[str, ...], ...] = tuple(lvls)

    @property
    def t(self) -> int:
        return len(self.levels)

    @property
    def size(self) -> int:
        return sum(len(level) for level in self.levels)

    def level_space(self, i: int) -> MetricSpace:
        return self.ambient.restrict(self.levels[i])

    def to_dict(self) -> dict:
        return {"ambient": self.ambient.to_dict(), "levels": [list(l) for l in self.levels]}

    @classmethod
    def from_dict(cls, data: dict) -> "TemporalSampling":
        if not isinstance(data, dict) or "ambient" not in data or "levels" not in data:
            raise ValidationError("sampling document needs 'ambient' and 'levels'")
        return cls(MetricSpace.from_dict(data["ambient"]), data["levels"])
