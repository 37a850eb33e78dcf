"""Tropical stable maps to a fan: discrete data, combinatorial types, validation.

A combinatorial type records the source tree, a cone for each vertex, a
contact order for each edge (stored for the tail->head orientation with
tail < head) and a carrier cone for every edge and leg.  Vertex cones and
carriers may be ``None`` for the stabilized types used by the counting
engine, where vertices roam freely; the solver fills them in afterwards.

Constructors here are deliberately permissive: broken maps must be
representable so that ``validate`` can report exactly which conditions
fail.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .curves import TropicalCurve
from .exactmath import rational_from_string, rational_to_string
from .polyhedral import (
    Fan,
    NotCompleteError,
    extended_point,
    fan_from_json,
    fan_to_json,
    locate,
    locate_germ,
    ExtendedPoint,
)

Vector = tuple[int, ...]
Point = tuple[Fraction, ...]


class UnknownLabelError(KeyError):
    pass


class InvalidTypeError(ValueError):
    pass


class InfiniteCrossingError(RuntimeError):
    """An edge cannot be threaded through the fan (incomplete support)."""


@dataclass(frozen=True)
class TreeShape:
    """Combinatorial tree with labelled legs and canonically oriented edges."""

    vertices: int
    edges: tuple[tuple[int, int], ...]  # (tail, head) with tail < head
    legs: tuple[tuple[int, int], ...]  # (vertex, label)

    def __post_init__(self):
        for a, b in self.edges:
            if not (0 <= a < b < self.vertices):
                raise ValueError(f"edge ({a},{b}) must satisfy tail < head")
        labels = sorted(lab for _, lab in self.legs)
        if labels != list(range(1, len(labels) + 1)):
            raise ValueError("leg labels must be 1..n+m")

    def valence(self, v: int) -> int:
        return sum(1 for a, b in self.edges if v in (a, b)) + sum(
            1 for w, _ in self.legs if w == v
        )

    def leg_vertex(self, label: int) -> int:
        for v, lab in self.legs:
            if lab == label:
                return v
        raise UnknownLabelError(f"no leg labelled {label}")

    def is_tree(self) -> bool:
        if len(self.edges) != self.vertices - 1 or self.vertices == 0:
            return False
        adj: list[list[int]] = [[] for _ in range(self.vertices)]
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        seen = {0}
        stack = [0]
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.vertices

    def path_edges(self, a: int, b: int) -> list[tuple[int, int]]:
        """Edge indices along the a-b path, each signed by traversal direction."""
        adj: list[list[tuple[int, int]]] = [[] for _ in range(self.vertices)]
        for i, (x, y) in enumerate(self.edges):
            adj[x].append((y, i))
            adj[y].append((x, i))
        parent: dict[int, tuple[int, int]] = {a: (-1, -1)}
        stack = [a]
        while stack:
            v = stack.pop()
            for w, i in adj[v]:
                if w not in parent:
                    parent[w] = (v, i)
                    stack.append(w)
        out = []
        v = b
        while v != a:
            u, i = parent[v]
            sign = 1 if self.edges[i] == (u, v) else -1
            out.append((i, sign))
            v = u
        return out[::-1]


@dataclass(frozen=True)
class DiscreteData:
    """Contact orders for the marked legs of a map to ``fan``."""

    fan: Fan
    contact_legs: tuple[tuple[int, Vector], ...]  # (label, contact order != 0)
    trivial_legs: tuple[int, ...]  # labels

    def __post_init__(self):
        labels = sorted([lab for lab, _ in self.contact_legs] + list(self.trivial_legs))
        if labels != list(range(1, len(labels) + 1)):
            raise ValueError("labels must partition 1..n+m")
        for lab, c in self.contact_legs:
            if len(c) != self.fan.rank:
                raise ValueError("contact order has wrong rank")
            if all(x == 0 for x in c):
                raise ValueError(f"contact leg {lab} has zero contact order")

    @property
    def n(self) -> int:
        return len(self.contact_legs)

    @property
    def m(self) -> int:
        return len(self.trivial_legs)

    def contact(self, label: int) -> Vector:
        for lab, c in self.contact_legs:
            if lab == label:
                return c
        if label in self.trivial_legs:
            return (0,) * self.fan.rank
        raise UnknownLabelError(f"no leg labelled {label}")

    def degree_vector(self) -> dict[int, int]:
        """Per-ray total weight; defined only for torically transverse data."""
        if not torically_transverse(self):
            raise ValueError("degree vector needs torically transverse contacts")
        out = {i: 0 for i in range(len(self.fan.rays))}
        for _, c in self.contact_legs:
            ray_idx = self.fan.cones[locate(self.fan, [Fraction(x) for x in c])][0]
            ray = self.fan.rays[ray_idx]
            w = next(abs(ci) // abs(ri) for ci, ri in zip(c, ray) if ri)
            out[ray_idx] += w
        return out


def torically_transverse(gamma: DiscreteData) -> bool:
    """True iff every nonzero contact order sits on a ray of the fan."""
    for _, c in gamma.contact_legs:
        try:
            idx = locate(gamma.fan, [Fraction(x) for x in c])
        except NotCompleteError:
            return False
        if gamma.fan.dim(idx) != 1:
            return False
    return True


@dataclass(frozen=True)
class CombinatorialType:
    """Discrete skeleton of a tropical stable map.

    ``vertex_cones[v]`` is a cone index or None (vertex unconfined);
    ``edge_contacts[i]`` is the contact order of edge i for its tail->head
    orientation; carriers are cone indices or None when undetermined.
    """

    fan: Fan
    shape: TreeShape
    vertex_cones: tuple[Optional[int], ...]
    edge_contacts: tuple[Vector, ...]
    edge_carriers: tuple[Optional[int], ...]
    leg_contacts: tuple[Vector, ...]  # aligned with shape.legs
    leg_carriers: tuple[Optional[int], ...]

    def __post_init__(self):
        if len(self.vertex_cones) != self.shape.vertices:
            raise ValueError("vertex_cones length mismatch")
        if len(self.edge_contacts) != len(self.shape.edges):
            raise ValueError("edge_contacts length mismatch")
        if len(self.edge_carriers) != len(self.shape.edges):
            raise ValueError("edge_carriers length mismatch")
        if len(self.leg_contacts) != len(self.shape.legs):
            raise ValueError("leg_contacts length mismatch")
        if len(self.leg_carriers) != len(self.shape.legs):
            raise ValueError("leg_carriers length mismatch")

    def outgoing(self, v: int) -> list[Vector]:
        """Contact orders of all edges and legs leaving v."""
        out = []
        for (a, b), c in zip(self.shape.edges, self.edge_contacts):
            if a == v:
                out.append(c)
            elif b == v:
                out.append(tuple(-x for x in c))
        for (w, _), c in zip(self.shape.legs, self.leg_contacts):
            if w == v:
                out.append(c)
        return out

    def is_balanced(self) -> bool:
        r = self.fan.rank
        for v in range(self.shape.vertices):
            total = [0] * r
            for c in self.outgoing(v):
                for i in range(r):
                    total[i] += c[i]
            if any(total):
                return False
        return True

    def check(self) -> None:
        """Raise InvalidTypeError if the structural invariants fail."""
        if not self.shape.is_tree():
            raise InvalidTypeError("shape is not a tree")
        if not self.is_balanced():
            raise InvalidTypeError("balancing fails at some vertex")
        for i, (a, b) in enumerate(self.shape.edges):
            car = self.edge_carriers[i]
            if car is None:
                continue
            for v, sign in ((a, 1), (b, -1)):
                cone_v = self.vertex_cones[v]
                if cone_v is not None and not _is_face(self.fan, cone_v, car):
                    raise InvalidTypeError(f"vertex cone of {v} is not a face of edge {i}'s carrier")
                c = tuple(sign * x for x in self.edge_contacts[i])
                base_cone = cone_v if cone_v is not None else car
                if not _points_into(self.fan, car, base_cone, c):
                    raise InvalidTypeError(f"edge {i} does not point into its carrier from vertex {v}")
        for j, (v, lab) in enumerate(self.shape.legs):
            car = self.leg_carriers[j]
            if car is None:
                continue
            cone_v = self.vertex_cones[v]
            if cone_v is not None and not _is_face(self.fan, cone_v, car):
                raise InvalidTypeError(f"vertex cone of leg {lab}'s vertex is not a face of its carrier")
            c = self.leg_contacts[j]
            if any(c) and not self.fan.contains(car, [Fraction(x) for x in c]):
                raise InvalidTypeError(f"leg {lab} leaves its carrier cone")


def _is_face(fan: Fan, small: int, big: int) -> bool:
    return set(fan.cones[small]) <= set(fan.cones[big])


def _points_into(fan: Fan, carrier: int, base: int, c: Vector) -> bool:
    """c lies in carrier + span(base), the tangent cone along the base face."""
    cone = fan.cones[carrier]
    free = set(fan.cones[base])
    coeffs = fan.cone_coefficients(carrier, [Fraction(x) for x in c])
    if coeffs is None:
        return False
    return all(q >= 0 for ray, q in zip(cone, coeffs) if ray not in free)


@dataclass(frozen=True)
class TropicalStableMap:
    """Vertex positions and edge lengths realizing a combinatorial type."""

    type: CombinatorialType
    positions: tuple[Point, ...]
    lengths: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.positions) != self.type.shape.vertices:
            raise ValueError("positions length mismatch")
        if len(self.lengths) != len(self.type.shape.edges):
            raise ValueError("lengths length mismatch")

    def curve(self) -> TropicalCurve:
        return TropicalCurve(
            self.type.shape.vertices,
            tuple((a, b, l) for (a, b), l in zip(self.type.shape.edges, self.lengths)),
            self.type.shape.legs,
        )


@dataclass(frozen=True)
class Violation:
    condition: str
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def valid(self) -> bool:
        return not self.violations

    def conditions(self) -> set[str]:
        return {v.condition for v in self.violations}


CHECK_ORDER = (
    "tree",
    "smooth",
    "positive-length",
    "vertex-in-cone",
    "edge-equation",
    "edge-in-cone",
    "balancing",
    "stability",
)


def validate(f: TropicalStableMap) -> ValidationReport:
    """Check the defining conditions of a tropical stable map, in order.

    Returns a report listing every violated condition with the offending
    vertex or edge; an empty report means the map is valid.
    """
    fan = f.type.fan
    shape = f.type.shape
    out: list[Violation] = []

    if not shape.is_tree():
        out.append(Violation("tree", "source graph is not a tree"))
        return ValidationReport(tuple(out))

    for i, l in enumerate(f.lengths):
        if not isinstance(l, Fraction):
            out.append(Violation("smooth", f"edge {i} has non-finite length"))
        elif l <= 0:
            out.append(Violation("positive-length", f"edge {i} has length {l} <= 0"))

    for v, cone in enumerate(f.type.vertex_cones):
        if cone is None:
            continue
        if not fan.contains(cone, f.positions[v]):
            out.append(Violation("vertex-in-cone", f"vertex {v} lies outside its cone"))

    for i, ((a, b), c) in enumerate(zip(shape.edges, f.type.edge_contacts)):
        if not isinstance(f.lengths[i], Fraction):
            continue
        expect = tuple(pa + f.lengths[i] * ci for pa, ci in zip(f.positions[a], c))
        if expect != tuple(f.positions[b]):
            out.append(Violation("edge-equation", f"edge {i}: head - tail != length * contact"))

    for i, ((a, b), car) in enumerate(zip(shape.edges, f.type.edge_carriers)):
        if car is None:
            out.append(Violation("edge-in-cone", f"edge {i} has no carrier cone"))
            continue
        # Both endpoints inside the closed simplicial carrier is enough:
        # the segment between them cannot leave it.
        if not (fan.contains(car, f.positions[a]) and fan.contains(car, f.positions[b])):
            out.append(Violation("edge-in-cone", f"edge {i} leaves its carrier cone"))
    for j, ((v, lab), car) in enumerate(zip(shape.legs, f.type.leg_carriers)):
        if car is None:
            out.append(Violation("edge-in-cone", f"leg {lab} has no carrier cone"))
            continue
        c = f.type.leg_contacts[j]
        inside = fan.contains(car, f.positions[v])
        ray_ok = (not any(c)) or fan.contains(car, [Fraction(x) for x in c])
        if not (inside and ray_ok):
            out.append(Violation("edge-in-cone", f"leg {lab} leaves its carrier cone"))

    r = fan.rank
    for v in range(shape.vertices):
        total = [0] * r
        for c in f.type.outgoing(v):
            for i in range(r):
                total[i] += c[i]
        if any(total):
            out.append(Violation("balancing", f"vertex {v} is unbalanced"))

    out.extend(_stability_violations(f))
    order = {name: k for k, name in enumerate(CHECK_ORDER)}
    out.sort(key=lambda viol: order[viol.condition])
    return ValidationReport(tuple(out))


def _stability_violations(f: TropicalStableMap) -> list[Violation]:
    fan = f.type.fan
    shape = f.type.shape
    out = []
    for v in range(shape.vertices):
        branches: list[tuple[Vector, Optional[int]]] = []
        for i, (a, b) in enumerate(shape.edges):
            if a == v:
                branches.append((f.type.edge_contacts[i], f.type.edge_carriers[i]))
            elif b == v:
                branches.append(
                    (tuple(-x for x in f.type.edge_contacts[i]), f.type.edge_carriers[i])
                )
        for j, (w, _) in enumerate(shape.legs):
            if w == v:
                branches.append((f.type.leg_contacts[j], f.type.leg_carriers[j]))

        if all(not any(c) for c, _ in branches):
            # Vertex is contracted to a point; it needs three special points.
            if len(branches) < 3:
                out.append(
                    Violation("stability", f"contracted vertex {v} has only {len(branches)} special points")
                )
            continue
        if len(branches) != 2:
            continue
        (c1, car1), (c2, car2) = branches
        if not (any(c1) and any(c2)):
            continue  # unbalanced; reported elsewhere
        # Divalent image vertex: stable only as a genuine wall crossing.
        try:
            small = locate(fan, f.positions[v])
        except NotCompleteError:
            continue
        ok = (
            car1 is not None
            and car2 is not None
            and car1 != car2
            and _is_face(fan, small, car1)
            and _is_face(fan, small, car2)
            and fan.dim(small) < fan.dim(car1)
            and fan.dim(small) < fan.dim(car2)
        )
        if not ok:
            out.append(Violation("stability", f"divalent vertex {v} is not a wall crossing"))
    return out


def _walk(fan: Fan, start: Point, c: Vector, total: Optional[Fraction]):
    """Cut the segment (or ray, when total is None) from ``start`` along c at wall crossings.

    Yields (carrier cone, length or None) pieces; crossing points follow
    from the accumulated lengths.
    """
    current = list(start)
    remaining = total
    cfrac = [Fraction(x) for x in c]
    for _ in range(len(fan.cones) + 1):
        try:
            germ = locate_germ(fan, current, cfrac)
        except NotCompleteError as exc:
            raise InfiniteCrossingError(str(exc)) from exc
        cb = fan.cone_coefficients(germ, current)
        cd = fan.cone_coefficients(germ, cfrac)
        assert cb is not None and cd is not None
        exit_t: Optional[Fraction] = None
        for b, d in zip(cb, cd):
            if d < 0:
                t = -b / d
                if exit_t is None or t < exit_t:
                    exit_t = t
        if exit_t is None or (remaining is not None and exit_t >= remaining):
            yield germ, remaining
            return
        yield germ, exit_t
        current = [x + exit_t * ci for x, ci in zip(current, cfrac)]
        if remaining is not None:
            remaining -= exit_t
    raise InfiniteCrossingError("crossed more walls than the fan has cones")


def subdivide(f: TropicalStableMap) -> TropicalStableMap:
    """Insert 2-valent vertices exactly where edge segments cross cone walls.

    The output satisfies the one-edge-one-cone condition, restricts to the
    input on surviving vertices, and recomputes vertex cones and carriers
    canonically (smallest cones) from the geometry.
    """
    fan = f.type.fan
    shape = f.type.shape
    positions = [tuple(p) for p in f.positions]
    new_edges: list[tuple[int, int]] = []
    edge_contacts: list[Vector] = []
    edge_carriers: list[int] = []
    lengths: list[Fraction] = []
    legs: list[tuple[int, int]] = []
    leg_contacts: list[Vector] = []
    leg_carriers: list[int] = []

    def add_vertex(p: Point) -> int:
        positions.append(tuple(p))
        return len(positions) - 1

    def add_edge(a: int, b: int, c: Vector, carrier: int, length: Fraction) -> None:
        if a < b:
            new_edges.append((a, b))
            edge_contacts.append(c)
        else:
            new_edges.append((b, a))
            edge_contacts.append(tuple(-x for x in c))
        edge_carriers.append(carrier)
        lengths.append(length)

    for i, (a, b) in enumerate(shape.edges):
        c = f.type.edge_contacts[i]
        if not any(c):
            carrier = locate(fan, positions[a])
            add_edge(a, b, c, carrier, f.lengths[i])
            continue
        pieces = list(_walk(fan, f.positions[a], c, f.lengths[i]))
        cursor = a
        pos = list(f.positions[a])
        for k, (carrier, t) in enumerate(pieces):
            last = k == len(pieces) - 1
            if last:
                add_edge(cursor, b, c, carrier, t)
            else:
                pos = [x + t * ci for x, ci in zip(pos, c)]
                w = add_vertex(tuple(pos))
                add_edge(cursor, w, c, carrier, t)
                cursor = w

    for j, (v, lab) in enumerate(shape.legs):
        c = f.type.leg_contacts[j]
        if not any(c):
            legs.append((v, lab))
            leg_contacts.append(c)
            leg_carriers.append(locate(fan, positions[v]))
            continue
        pieces = list(_walk(fan, f.positions[v], c, None))
        cursor = v
        pos = list(f.positions[v])
        for carrier, t in pieces[:-1]:
            pos = [x + t * ci for x, ci in zip(pos, c)]
            w = add_vertex(tuple(pos))
            add_edge(cursor, w, c, carrier, t)
            cursor = w
        legs.append((cursor, lab))
        leg_contacts.append(c)
        leg_carriers.append(pieces[-1][0])

    vertex_cones = tuple(locate(fan, p) for p in positions)
    new_type = CombinatorialType(
        fan,
        TreeShape(len(positions), tuple(new_edges), tuple(legs)),
        vertex_cones,
        tuple(edge_contacts),
        tuple(edge_carriers),
        tuple(leg_contacts),
        tuple(leg_carriers),
    )
    return TropicalStableMap(new_type, tuple(positions), tuple(lengths))


def ev_trop(f: TropicalStableMap, label: int) -> ExtendedPoint:
    """Image of the infinite point of the marked edge with the given label."""
    fan = f.type.fan
    for (v, lab), c in zip(f.type.shape.legs, f.type.leg_contacts):
        if lab == label:
            if not any(c):
                zero = fan.cone_index(())
                return ExtendedPoint(zero, tuple(f.positions[v]))
            return extended_point(fan, f.positions[v], c)
    raise UnknownLabelError(f"no leg labelled {label}")


# --- JSON interface -------------------------------------------------------


def _cone_ref(fan: Fan, idx: Optional[int]):
    if idx is None:
        return None
    return sorted(list(fan.rays[i]) for i in fan.cones[idx])


def _cone_deref(fan: Fan, ref) -> Optional[int]:
    if ref is None:
        return None
    want = tuple(sorted(tuple(r) for r in ref))
    for i, cone in enumerate(fan.cones):
        if tuple(sorted(fan.rays[j] for j in cone)) == want:
            return i
    raise ValueError(f"no cone with rays {ref}")


def type_to_json(t: CombinatorialType) -> dict:
    return {
        "vertices": t.shape.vertices,
        "vertex_cones": [_cone_ref(t.fan, c) for c in t.vertex_cones],
        "edges": [
            [a, b, list(c), _cone_ref(t.fan, car)]
            for (a, b), c, car in zip(t.shape.edges, t.edge_contacts, t.edge_carriers)
        ],
        "legs": [
            [v, lab, list(c), _cone_ref(t.fan, car)]
            for (v, lab), c, car in zip(t.shape.legs, t.leg_contacts, t.leg_carriers)
        ],
    }


def type_from_json(fan: Fan, data: dict) -> CombinatorialType:
    edges = tuple((a, b) for a, b, _, _ in data["edges"])
    legs = tuple((v, lab) for v, lab, _, _ in data["legs"])
    return CombinatorialType(
        fan,
        TreeShape(data["vertices"], edges, legs),
        tuple(_cone_deref(fan, ref) for ref in data["vertex_cones"]),
        tuple(tuple(c) for _, _, c, _ in data["edges"]),
        tuple(_cone_deref(fan, ref) for _, _, _, ref in data["edges"]),
        tuple(tuple(c) for _, _, c, _ in data["legs"]),
        tuple(_cone_deref(fan, ref) for _, _, _, ref in data["legs"]),
    )


def map_to_json(f: TropicalStableMap) -> dict:
    return {
        "schema": "tropcount/1",
        "kind": "map",
        "fan": fan_to_json(f.type.fan),
        "type": type_to_json(f.type),
        "positions": [[rational_to_string(x) for x in p] for p in f.positions],
        "lengths": [rational_to_string(l) for l in f.lengths],
    }


def map_from_json(data: dict, fan: Optional[Fan] = None) -> TropicalStableMap:
    fan = fan if fan is not None else fan_from_json(data["fan"])
    t = type_from_json(fan, data["type"])
    positions = tuple(tuple(rational_from_string(x) for x in p) for p in data["positions"])
    lengths = tuple(rational_from_string(l) for l in data["lengths"])
    return TropicalStableMap(t, positions, lengths)
