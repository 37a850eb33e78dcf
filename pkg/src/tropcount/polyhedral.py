"""Complete simplicial fans, their canonical compactifications, and quotients.

A fan is stored as primitive ray vectors plus cones given by ray-index
sets; the zero cone is the empty set. Membership and location are decided
exactly by solving for nonnegative ray coefficients, and points of the
compactified fan are represented by the stratum they fall in together
with rational coordinates in a deterministically chosen quotient basis.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .exactmath import (
    IntMatrix,
    lattice_quotient,
    primitive_vector,
    rank,
    saturate_columns,
    solve_rational,
)

SCHEMA = "tropcount/1"


class NotSimplicialError(ValueError):
    """A cone's rays are linearly dependent."""


class NotCompleteError(ValueError):
    """No cone of the fan contains the queried point/direction."""


class DependentGeneratorsError(ValueError):
    """Subspace generators are linearly dependent."""


class DirectionOutsideFanError(NotCompleteError):
    """The requested recession direction misses the fan's support."""


Vector = tuple[int, ...]
Point = tuple[Fraction, ...]


@dataclass(frozen=True)
class Fan:
    """A simplicial fan in ZZ^rank, closed under taking faces.

    ``cones`` lists sorted ray-index tuples; the empty tuple is the zero
    cone and is always present. Completeness is assumed for the named
    constructors and spot-checked by random location in the tests rather
    than certified.
    """

    rank: int
    rays: tuple[Vector, ...]
    cones: tuple[tuple[int, ...], ...]
    name: str = ""

    def __post_init__(self):
        for ray in self.rays:
            if len(ray) != self.rank:
                raise ValueError("ray length differs from fan rank")
            if primitive_vector(ray) != tuple(ray):
                raise ValueError(f"ray {ray} is not primitive")
        if len(set(self.rays)) != len(self.rays):
            raise ValueError("duplicate rays")
        seen = set(self.cones)
        if len(seen) != len(self.cones):
            raise ValueError("duplicate cones")
        if () not in seen:
            raise ValueError("zero cone missing; use Fan.make to normalize")
        for cone in self.cones:
            if list(cone) != sorted(set(cone)):
                raise ValueError("cone ray indices must be sorted and distinct")
            if any(i < 0 or i >= len(self.rays) for i in cone):
                raise ValueError("cone refers to a missing ray")
            if cone and rank(self._ray_matrix(cone)) != len(cone):
                raise NotSimplicialError(f"cone {cone} has dependent rays")
            for i in range(len(cone)):
                face = cone[:i] + cone[i + 1 :]
                if face not in seen:
                    raise ValueError("fan is not closed under faces")

    @staticmethod
    def make(rank: int, rays: Sequence[Sequence[int]], cones: Sequence[Sequence[int]], name: str = "") -> "Fan":
        """Normalize input: add all faces, sort, deduplicate."""
        rays = tuple(tuple(int(x) for x in r) for r in rays)
        closed: set[tuple[int, ...]] = {()}
        for cone in cones:
            cone = tuple(sorted(set(int(i) for i in cone)))
            for mask in range(1 << len(cone)):
                closed.add(tuple(c for k, c in enumerate(cone) if mask >> k & 1))
        return Fan(rank, rays, tuple(sorted(closed, key=lambda c: (len(c), c))), name)

    def _ray_matrix(self, cone: Sequence[int]) -> IntMatrix:
        """Rays of the cone as matrix columns (rank x |cone|)."""
        entries = tuple(self.rays[i][r] for r in range(self.rank) for i in cone)
        return IntMatrix(self.rank, len(cone), entries)

    def cone_index(self, cone: Sequence[int]) -> int:
        return self.cones.index(tuple(sorted(cone)))

    def dim(self, cone_idx: int) -> int:
        return len(self.cones[cone_idx])

    def maximal_cones(self) -> list[int]:
        out = []
        for i, c in enumerate(self.cones):
            s = set(c)
            if not any(s < set(d) for d in self.cones):
                out.append(i)
        return out

    def cone_coefficients(self, cone_idx: int, p: Sequence[Fraction]) -> Optional[list[Fraction]]:
        """Coefficients of p in the cone's ray basis, or None if p is off its span."""
        cone = self.cones[cone_idx]
        if not cone:
            return [] if all(x == 0 for x in p) else None
        sol = solve_rational(self._ray_matrix(cone), [Fraction(x) for x in p])
        if sol is None:
            return None
        return list(sol[0])

    def contains(self, cone_idx: int, p: Sequence[Fraction], strict: bool = False) -> bool:
        coeffs = self.cone_coefficients(cone_idx, p)
        if coeffs is None:
            return False
        if strict:
            return all(c > 0 for c in coeffs)
        return all(c >= 0 for c in coeffs)

    def face_indices(self, cone_idx: int) -> list[int]:
        s = set(self.cones[cone_idx])
        return [i for i, c in enumerate(self.cones) if set(c) <= s]

    def facet_indices(self, cone_idx: int) -> list[int]:
        cone = self.cones[cone_idx]
        return [self.cone_index(cone[:i] + cone[i + 1 :]) for i in range(len(cone))]

    def span_projection(self, cone_idx: int) -> IntMatrix:
        """Integral projection with kernel exactly span(cone) ∩ ZZ^rank."""
        cone = self.cones[cone_idx]
        if not cone:
            return IntMatrix.identity(self.rank)
        return lattice_quotient(self._ray_matrix(cone))


@dataclass(frozen=True)
class ExtendedPoint:
    """A point of the compactified fan, lying in the stratum of ``stratum_cone``.

    ``coset`` holds coordinates in the fixed basis of N/span(cone); for the
    zero cone this is an honest point of N_R.
    """

    stratum_cone: int
    coset: Point

    def key(self) -> tuple:
        return (self.stratum_cone, self.coset)


@dataclass(frozen=True)
class QuotientProjection:
    subspace_basis: IntMatrix
    projection: IntMatrix

    def __post_init__(self):
        prod = self.projection @ self.subspace_basis
        if any(e != 0 for e in prod.entries):
            raise ValueError("projection does not kill the subspace")


def fan_projective_space(r: int) -> Fan:
    """The complete fan with rays e_1..e_r and -(e_1+...+e_r)."""
    if r < 1:
        raise ValueError("projective space fan needs rank >= 1")
    rays = [tuple(1 if i == j else 0 for i in range(r)) for j in range(r)]
    rays.append(tuple(-1 for _ in range(r)))
    cones = [c for k in range(1, r + 1) for c in _subsets(range(r + 1), k) if len(c) <= r]
    return Fan.make(r, rays, cones, name=f"p{r}")


def _subsets(items, k):
    items = list(items)
    if k == 0:
        return [()]
    out = []

    def rec(start, acc):
        if len(acc) == k:
            out.append(tuple(acc))
            return
        for i in range(start, len(items)):
            rec(i + 1, acc + [items[i]])

    rec(0, [])
    return out


def fan_product(f: Fan, g: Fan) -> Fan:
    rays = [tuple(r) + (0,) * g.rank for r in f.rays]
    rays += [(0,) * f.rank + tuple(r) for r in g.rays]
    off = len(f.rays)
    cones = [tuple(c) + tuple(i + off for i in d) for c in f.cones for d in g.cones]
    name = f"{f.name}x{g.name}" if f.name and g.name else ""
    return Fan.make(f.rank + g.rank, rays, cones, name=name)


def point_fan() -> Fan:
    return Fan(0, (), ((),), name="pt")


def locate(fan: Fan, p: Sequence[Fraction]) -> int:
    """Index of the unique cone containing p in its relative interior."""
    p = tuple(Fraction(x) for x in p)
    for idx in range(len(fan.cones)):
        if fan.contains(idx, p, strict=True):
            return idx
    raise NotCompleteError(f"no cone contains {p} in its relative interior")


def locate_germ(fan: Fan, base: Sequence[Fraction], direction: Sequence[Fraction]) -> int:
    """The cone whose relative interior contains base + eps*direction for small eps > 0.

    Decided exactly: the coefficients of base + eps*direction in a cone's ray
    basis are affine in eps, so their signs near 0+ are readable from the
    (base, direction) coefficient pairs.
    """
    base = [Fraction(x) for x in base]
    direction = [Fraction(x) for x in direction]
    if all(x == 0 for x in direction):
        return locate(fan, base)
    for idx, cone in enumerate(fan.cones):
        cb = fan.cone_coefficients(idx, base)
        if cb is None:
            continue
        cd = fan.cone_coefficients(idx, direction)
        if cd is None:
            continue
        if all(b > 0 or (b == 0 and d > 0) for b, d in zip(cb, cd)):
            return idx
    raise NotCompleteError(f"no cone carries the germ at {base} toward {direction}")


def quotient_projection(fan: Fan, l_basis: IntMatrix) -> QuotientProjection:
    """Saturate L ∩ ZZ^rank and project onto the quotient lattice."""
    if l_basis.rows != fan.rank:
        raise ValueError("subspace basis lives in the wrong lattice")
    if l_basis.cols == 0:
        return QuotientProjection(IntMatrix(fan.rank, 0, ()), IntMatrix.identity(fan.rank))
    if rank(l_basis) != l_basis.cols:
        raise DependentGeneratorsError("subspace generators are dependent")
    return QuotientProjection(saturate_columns(l_basis), lattice_quotient(l_basis))


def extended_point(fan: Fan, base: Sequence[Fraction], direction: Sequence[int]) -> ExtendedPoint:
    """Limit point of base + t*direction, t -> infinity, in the compactified fan."""
    direction = tuple(int(x) for x in direction)
    if all(x == 0 for x in direction):
        raise ValueError("direction must be nonzero")
    try:
        stratum = locate(fan, [Fraction(x) for x in direction])
    except NotCompleteError as exc:
        raise DirectionOutsideFanError(str(exc)) from exc
    proj = fan.span_projection(stratum)
    coset = tuple(proj.apply([Fraction(x) for x in base]))
    return ExtendedPoint(stratum, coset)


# --- JSON interface -------------------------------------------------------

NAMED_FANS = {
    "p1": lambda: fan_projective_space(1),
    "p2": lambda: fan_projective_space(2),
    "p3": lambda: fan_projective_space(3),
    "p1xp1": lambda: fan_product(fan_projective_space(1), fan_projective_space(1)),
}


def fan_to_json(fan: Fan) -> dict:
    """Canonical form: rays sorted lexicographically, cones sorted."""
    order = sorted(range(len(fan.rays)), key=lambda i: fan.rays[i])
    relabel = {old: new for new, old in enumerate(order)}
    rays = [list(fan.rays[i]) for i in order]
    cones = sorted(tuple(sorted(relabel[i] for i in c)) for c in fan.cones)
    return {
        "schema": SCHEMA,
        "kind": "fan",
        "name": fan.name,
        "rank": fan.rank,
        "rays": rays,
        "cones": [list(c) for c in cones],
    }


def fan_from_json(data: dict) -> Fan:
    if data.get("schema", SCHEMA) != SCHEMA:
        raise ValueError(f"unsupported schema {data.get('schema')!r}")
    return Fan.make(data["rank"], data["rays"], data["cones"], name=data.get("name", ""))


def load_fan(spec: str) -> Fan:
    """Named constructor shorthand or a path to a fan JSON file."""
    if spec in NAMED_FANS:
        return NAMED_FANS[spec]()
    with open(spec) as fh:
        return fan_from_json(json.load(fh))
