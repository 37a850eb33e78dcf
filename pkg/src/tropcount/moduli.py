"""Moduli cones of combinatorial types and the glued cone complex.

A type's moduli cone lives in the ambient coordinates
(position of every vertex) x (length of every internal edge); the edge
equations head - tail = length * contact and the vertex-span cuts
pos_v in span(cone_v) are integral linear constraints, and the cone is
carved out of their solution lattice by the ray-coefficient and length
inequalities.  Dimensions are exact ranks, never the generic formula.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterator, Optional, Sequence

from . import lp
from .exactmath import (
    IntMatrix,
    integer_kernel,
    lattice_quotient,
    primitive_vector,
    rank as int_rank,
    solve_rational,
    solve_rational_matrix,
)
from .maps import (
    CombinatorialType,
    DiscreteData,
    InvalidTypeError,
    TreeShape,
    TropicalStableMap,
    torically_transverse,
)
from .polyhedral import Fan, locate, locate_germ

Point = tuple[Fraction, ...]


class UnsupportedRankError(ValueError):
    """Complex assembly is only implemented for fans of rank <= 2."""


class NotAssembledError(ValueError):
    pass


class ShapeMismatchError(ValueError):
    pass


# --- moduli cones ----------------------------------------------------------


@dataclass(frozen=True)
class ModuliCone:
    """The cone of maps with a fixed combinatorial type, with integral structure."""

    type: CombinatorialType
    ambient_dim: int
    constraint_matrix: IntMatrix
    span_basis: IntMatrix
    dimension: int

    def ambient_coordinates(self, f: TropicalStableMap) -> list[Fraction]:
        if f.type.shape.edges != self.type.shape.edges or f.type.shape.legs != self.type.shape.legs:
            raise ShapeMismatchError("map shape does not match the type")
        coords: list[Fraction] = []
        for p in f.positions:
            coords.extend(Fraction(x) for x in p)
        coords.extend(Fraction(l) for l in f.lengths)
        return coords

    def inequality_rows(self) -> list[tuple[list[Fraction], str]]:
        """Linear functionals that must be >= 0 on the cone (valid on its span)."""
        fan = self.type.fan
        r = fan.rank
        nv = self.type.shape.vertices
        rows: list[tuple[list[Fraction], str]] = []
        for v, cone_idx in enumerate(self.type.vertex_cones):
            if cone_idx is None or not fan.cones[cone_idx]:
                continue
            left_inv = _left_inverse(fan._ray_matrix(fan.cones[cone_idx]))
            for lam in left_inv:
                row = [Fraction(0)] * self.ambient_dim
                for j in range(r):
                    row[v * r + j] = lam[j]
                rows.append((row, f"vertex {v}"))
        for e in range(len(self.type.shape.edges)):
            row = [Fraction(0)] * self.ambient_dim
            row[nv * r + e] = Fraction(1)
            rows.append((row, f"length {e}"))
        return rows

    def relint_witness(self) -> Optional[list[Fraction]]:
        """A point in the cone with every inequality strict, or None."""
        rows = []
        for row, _ in self.inequality_rows():
            rows.append([
                sum(row[a] * self.span_basis.at(a, j) for a in range(self.ambient_dim))
                for j in range(self.dimension)
            ])
        y = lp.strict_point(rows, self.dimension)
        if y is None:
            return None
        return [
            sum(self.span_basis.at(a, j) * y[j] for j in range(self.dimension))
            for a in range(self.ambient_dim)
        ]


def _left_inverse(ray_matrix: IntMatrix) -> list[list[Fraction]]:
    """Rational L with L . R = identity, valid for coefficient extraction on span(R)."""
    k = ray_matrix.cols
    transpose = ray_matrix.transpose()
    out = []
    for i in range(k):
        rhs = [Fraction(1) if j == i else Fraction(0) for j in range(k)]
        sol = solve_rational(transpose, rhs)
        assert sol is not None
        out.append(list(sol[0]))
    return out


def moduli_cone(theta: CombinatorialType) -> ModuliCone:
    """Assemble the constraint matrix of a type and its saturated solution lattice.

    Rows: per internal edge the vector equation head - tail - length*contact = 0,
    and per confined vertex the integral projection killing span(cone_v).
    """
    theta.check()
    fan = theta.fan
    r = fan.rank
    nv = theta.shape.vertices
    ne = len(theta.shape.edges)
    ambient = r * nv + ne
    rows: list[list[int]] = []
    for e, ((a, b), c) in enumerate(zip(theta.shape.edges, theta.edge_contacts)):
        for i in range(r):
            row = [0] * ambient
            row[b * r + i] += 1
            row[a * r + i] -= 1
            row[nv * r + e] = -c[i]
            rows.append(row)
    for v, cone_idx in enumerate(theta.vertex_cones):
        if cone_idx is None:
            continue
        proj = fan.span_projection(cone_idx)
        for i in range(proj.rows):
            row = [0] * ambient
            for j in range(r):
                row[v * r + j] = proj.at(i, j)
            rows.append(row)
    matrix = IntMatrix.from_rows(rows) if rows else IntMatrix(0, ambient, ())
    basis = integer_kernel(matrix)
    return ModuliCone(theta, ambient, matrix, basis, basis.cols)


def contains(cone: ModuliCone, f: TropicalStableMap) -> str:
    """Classify a map against a moduli cone: 'interior', 'boundary' or 'outside'."""
    fan = cone.type.fan
    coords = cone.ambient_coordinates(f)
    residual = cone.constraint_matrix.apply(coords)
    if any(x != 0 for x in residual):
        return "outside"
    tight = False
    for v, cone_idx in enumerate(cone.type.vertex_cones):
        if cone_idx is None:
            continue
        coeffs = fan.cone_coefficients(cone_idx, f.positions[v])
        if coeffs is None or any(q < 0 for q in coeffs):
            return "outside"
        if any(q == 0 for q in coeffs):
            tight = True
    for l in f.lengths:
        if l < 0:
            return "outside"
        if l == 0:
            tight = True
    return "boundary" if tight else "interior"


# --- canonical forms -------------------------------------------------------


def canonical_form(
    theta: CombinatorialType, identify_contacts: bool = False
) -> tuple[tuple, tuple[int, ...]]:
    """Canonical serialization of a type plus the vertex relabeling achieving it.

    With ``identify_contacts`` legs with nonzero contact order are compared
    by their contact vector instead of their label, so types differing only
    by a permutation of equal-contact legs collapse together.
    """
    shape = theta.shape
    adj: list[list[int]] = [[] for _ in range(shape.vertices)]
    for i, (a, b) in enumerate(shape.edges):
        adj[a].append(i)
        adj[b].append(i)

    def carrier_token(car: Optional[int]) -> int:
        return -1 if car is None else car

    def leg_token(j: int) -> tuple:
        v, lab = shape.legs[j]
        c = theta.leg_contacts[j]
        if identify_contacts and any(c):
            return ("c", c, carrier_token(theta.leg_carriers[j]))
        return ("l", lab, c, carrier_token(theta.leg_carriers[j]))

    def serialize(v: int, come_from: int) -> tuple[tuple, list[int]]:
        legs = sorted(leg_token(j) for j, (w, _) in enumerate(shape.legs) if w == v)
        children = []
        for i in adj[v]:
            if i == come_from:
                continue
            a, b = shape.edges[i]
            w = b if a == v else a
            c = theta.edge_contacts[i]
            away = c if a == v else tuple(-x for x in c)
            child_ser, child_order = serialize(w, i)
            children.append(((away, carrier_token(theta.edge_carriers[i]), child_ser), child_order))
        children.sort(key=lambda t: t[0])
        cone = theta.vertex_cones[v]
        ser = (-1 if cone is None else cone, tuple(legs), tuple(c[0] for c in children))
        order = [v]
        for _, child_order in children:
            order.extend(child_order)
        return ser, order

    best = None
    best_order: list[int] = []
    for root in range(shape.vertices):
        ser, order = serialize(root, -1)
        if best is None or ser < best:
            best, best_order = ser, order
    relabel = [0] * shape.vertices
    for new, old in enumerate(best_order):
        relabel[old] = new
    return best, tuple(relabel)


def relabel_type(theta: CombinatorialType, relabel: Sequence[int]) -> CombinatorialType:
    """Apply a vertex permutation, renormalizing edge orientations."""
    shape = theta.shape
    edges = []
    contacts = []
    order = sorted(
        range(len(shape.edges)),
        key=lambda i: tuple(sorted((relabel[shape.edges[i][0]], relabel[shape.edges[i][1]]))),
    )
    carriers = []
    for i in order:
        a, b = shape.edges[i]
        c = theta.edge_contacts[i]
        na, nb = relabel[a], relabel[b]
        if na < nb:
            edges.append((na, nb))
            contacts.append(c)
        else:
            edges.append((nb, na))
            contacts.append(tuple(-x for x in c))
        carriers.append(theta.edge_carriers[i])
    leg_order = sorted(range(len(shape.legs)), key=lambda j: shape.legs[j][1])
    legs = tuple((relabel[shape.legs[j][0]], shape.legs[j][1]) for j in leg_order)
    inv = [0] * shape.vertices
    for old, new in enumerate(relabel):
        inv[new] = old
    return CombinatorialType(
        theta.fan,
        TreeShape(shape.vertices, tuple(edges), legs),
        tuple(theta.vertex_cones[inv[v]] for v in range(shape.vertices)),
        tuple(contacts),
        tuple(carriers),
        tuple(theta.leg_contacts[j] for j in leg_order),
        tuple(theta.leg_carriers[j] for j in leg_order),
    )


def edge_permutation(old: TreeShape, relabel: Sequence[int]) -> list[int]:
    """old edge index -> new edge index after relabeling by ``relabel``."""
    renamed = [tuple(sorted((relabel[a], relabel[b]))) for a, b in old.edges]
    order = sorted(range(len(renamed)), key=lambda i: renamed[i])
    out = [0] * len(renamed)
    for new, i in enumerate(order):
        out[i] = new
    return out


# --- face enumeration ------------------------------------------------------


@dataclass(frozen=True)
class FaceData:
    """A codimension-one face together with its vertex/edge correspondence."""

    face: CombinatorialType
    vertex_map: tuple[int, ...]  # parent vertex -> face vertex
    edge_map: tuple[Optional[int], ...]  # parent edge -> face edge (None if contracted)


def _contract_edge(theta: CombinatorialType, e: int) -> Optional[FaceData]:
    shape = theta.shape
    a, b = shape.edges[e]
    ca, cb = theta.vertex_cones[a], theta.vertex_cones[b]
    if ca is None or cb is None:
        merged = ca if cb is None else cb
    else:
        rays = set(theta.fan.cones[ca]) & set(theta.fan.cones[cb])
        merged = theta.fan.cone_index(tuple(sorted(rays)))
    vmap = []
    for v in range(shape.vertices):
        w = a if v == b else v
        vmap.append(w - 1 if w > b else w)
    edges = []
    contacts = []
    carriers = []
    emap: list[Optional[int]] = []
    for i, (x, y) in enumerate(shape.edges):
        if i == e:
            emap.append(None)
            continue
        nx, ny = vmap[x], vmap[y]
        if nx == ny:
            return None  # would create a loop; cannot happen in a tree
        emap.append(len(edges))
        if nx < ny:
            edges.append((nx, ny))
            contacts.append(theta.edge_contacts[i])
        else:
            edges.append((ny, nx))
            contacts.append(tuple(-x for x in theta.edge_contacts[i]))
        carriers.append(theta.edge_carriers[i])
    legs = tuple((vmap[v], lab) for v, lab in shape.legs)
    cones = [None] * (shape.vertices - 1)
    for v in range(shape.vertices):
        cones[vmap[v]] = merged if v in (a, b) else theta.vertex_cones[v]
    face = CombinatorialType(
        theta.fan,
        TreeShape(shape.vertices - 1, tuple(edges), legs),
        tuple(cones),
        tuple(contacts),
        tuple(carriers),
        theta.leg_contacts,
        theta.leg_carriers,
    )
    return FaceData(face, tuple(vmap), tuple(emap))


def _specialize_vertex(theta: CombinatorialType, v: int, facet: int) -> FaceData:
    cones = list(theta.vertex_cones)
    cones[v] = facet
    face = CombinatorialType(
        theta.fan,
        theta.shape,
        tuple(cones),
        theta.edge_contacts,
        theta.edge_carriers,
        theta.leg_contacts,
        theta.leg_carriers,
    )
    ident = tuple(range(theta.shape.vertices))
    return FaceData(face, ident, tuple(range(len(theta.shape.edges))))


def face_types(theta: CombinatorialType) -> list[FaceData]:
    """Codimension-one faces via single edge contractions and single facet specializations.

    Candidates whose moduli cone does not drop dimension by exactly one, or
    whose relative interior is empty (a length or coefficient forced to
    zero), are discarded.
    """
    parent = moduli_cone(theta)
    out = []
    seen = set()
    candidates: list[FaceData] = []
    for e in range(len(theta.shape.edges)):
        fd = _contract_edge(theta, e)
        if fd is not None:
            candidates.append(fd)
    for v, cone_idx in enumerate(theta.vertex_cones):
        if cone_idx is None:
            continue
        for facet in theta.fan.facet_indices(cone_idx):
            candidates.append(_specialize_vertex(theta, v, facet))
    for fd in candidates:
        try:
            mc = moduli_cone(fd.face)
        except InvalidTypeError:
            continue
        if mc.dimension != parent.dimension - 1:
            continue
        if mc.relint_witness() is None:
            continue
        key, _ = canonical_form(fd.face)
        if key in seen:
            continue
        seen.add(key)
        out.append(fd)
    return out


def face_inclusion_matrix(
    parent: ModuliCone,
    face_cone: ModuliCone,
    vertex_map: Sequence[int],
    edge_map: Sequence[Optional[int]],
) -> IntMatrix:
    """Integral matrix expressing the face's span lattice inside the parent's.

    ``vertex_map``/``edge_map`` translate parent coordinates to face
    coordinates (a contracted parent edge maps to None and contributes
    length zero).  Solves parent.span_basis . X = iota . face.span_basis.
    """
    fan = parent.type.fan
    r = fan.rank
    pnv = parent.type.shape.vertices
    pne = len(parent.type.shape.edges)
    fnv = face_cone.type.shape.vertices
    emb: list[list[Fraction]] = []
    for v in range(pnv):
        for i in range(r):
            row = [Fraction(0)] * face_cone.ambient_dim
            row[vertex_map[v] * r + i] = Fraction(1)
            emb.append(row)
    for e in range(pne):
        row = [Fraction(0)] * face_cone.ambient_dim
        fe = edge_map[e]
        if fe is not None:
            row[fnv * r + fe] = Fraction(1)
        emb.append(row)
    target = [
        [
            sum(emb[i][a] * face_cone.span_basis.at(a, j) for a in range(face_cone.ambient_dim))
            for j in range(face_cone.dimension)
        ]
        for i in range(parent.ambient_dim)
    ]
    sol = solve_rational_matrix(parent.span_basis, target)
    if sol is None:
        raise InvalidTypeError("face lattice does not inject into the parent span")
    entries = []
    for row in sol:
        for x in row:
            if x.denominator != 1:
                raise InvalidTypeError("face inclusion is not integral")
            entries.append(x.numerator)
    return IntMatrix(parent.dimension, face_cone.dimension, tuple(entries))


# --- complex assembly ------------------------------------------------------


@dataclass(frozen=True)
class ComplexCone:
    type: CombinatorialType
    cone: ModuliCone
    witness: tuple[Fraction, ...]
    key: tuple


@dataclass(frozen=True)
class ConeComplex:
    gamma: DiscreteData
    cones: tuple[ComplexCone, ...]
    face_maps: tuple[tuple[int, int, IntMatrix], ...]  # (small, big, inclusion)

    def f_vector(self) -> tuple[int, ...]:
        top = max((c.cone.dimension for c in self.cones), default=-1)
        counts = [0] * (top + 1)
        for c in self.cones:
            counts[c.cone.dimension] += 1
        return tuple(counts)

    def faces_of(self, idx: int) -> list[int]:
        return [s for s, b, _ in self.face_maps if b == idx]

    def skeleton(self, idx: int, dim: int) -> set[int]:
        """Iterated faces of the given cone having the requested dimension."""
        frontier = {idx}
        seen = {idx}
        while frontier:
            nxt = set()
            for c in frontier:
                for s in self.faces_of(c):
                    if s not in seen:
                        seen.add(s)
                        nxt.add(s)
            frontier = nxt
        return {i for i in seen if self.cones[i].cone.dimension == dim}


def labeled_trees(labels: Sequence[int]) -> list[TreeShape]:
    """All trivalent trees with the given leg labels (single vertex for <= 3)."""
    labels = sorted(labels)
    if not labels:
        raise ValueError("need at least one leg")
    if len(labels) <= 3:
        return [TreeShape(1, (), tuple((0, lab) for lab in labels))]
    shapes = labeled_trees(labels[:3])
    for lab in labels[3:]:
        grown: list[TreeShape] = []
        for shape in shapes:
            w = shape.vertices
            for i, (a, b) in enumerate(shape.edges):
                rest = shape.edges[:i] + shape.edges[i + 1 :]
                edges = rest + ((min(a, w), max(a, w)), (min(b, w), max(b, w)))
                grown.append(TreeShape(w + 1, tuple(sorted(edges)), shape.legs + ((w, lab),)))
            for j, (v, moved) in enumerate(shape.legs):
                rest_legs = shape.legs[:j] + shape.legs[j + 1 :]
                edges = shape.edges + ((min(v, w), max(v, w)),)
                grown.append(
                    TreeShape(w + 1, tuple(sorted(edges)), rest_legs + ((w, moved), (w, lab)))
                )
        shapes = grown
    return shapes


def forced_edge_contacts(shape: TreeShape, leg_contact: dict[int, tuple[int, ...]], rank: int) -> list[tuple[int, ...]]:
    """Edge contact orders implied by balancing: sum of leg contacts on the head side."""
    adj: list[list[tuple[int, int]]] = [[] for _ in range(shape.vertices)]
    for i, (a, b) in enumerate(shape.edges):
        adj[a].append((b, i))
        adj[b].append((a, i))
    out = []
    for i, (a, b) in enumerate(shape.edges):
        seen = {a, b}
        stack = [b]
        total = [0] * rank
        while stack:
            v = stack.pop()
            for w, lab in shape.legs:
                if w == v:
                    for k in range(rank):
                        total[k] += leg_contact[lab][k]
            for w, j in adj[v]:
                if w not in seen and j != i:
                    seen.add(w)
                    stack.append(w)
        out.append(tuple(total))
    return out


def _germ_into(fan: Fan, carrier: int, base: int, c: Sequence[Fraction]) -> bool:
    """Moving off relint(base) along c lands immediately in relint(carrier).

    Requires base to be a face of carrier and the coefficients of c on the
    carrier's rays outside base to be strictly positive, which rules out
    directions running parallel to a wall.
    """
    cone = fan.cones[carrier]
    base_rays = set(fan.cones[base])
    if not base_rays <= set(cone):
        return False
    coeffs = fan.cone_coefficients(carrier, c)
    if coeffs is None:
        return False
    return all(q > 0 for ray, q in zip(cone, coeffs) if ray not in base_rays)


def _walks(fan: Fan, start_cone: int, c: tuple[int, ...], end_cone: Optional[int]) -> Iterator[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Combinatorial wall-crossing patterns for a segment or ray of direction c.

    Yields (carriers, crossing faces): carriers[0] holds the germ at the
    start vertex (whose cone is ``start_cone``), consecutive carriers meet
    transversally in the proper crossing face between them; a ray must end
    in a carrier containing c, a segment in a carrier reached backwards
    from the head vertex.
    """
    cfrac = [Fraction(x) for x in c]
    neg = [-x for x in cfrac]

    def ends_ok(car: int) -> bool:
        if end_cone is None:
            return fan.contains(car, cfrac)
        return _germ_into(fan, car, end_cone, neg)

    def rec(carriers: tuple[int, ...], faces: tuple[int, ...]) -> Iterator:
        cur = carriers[-1]
        if ends_ok(cur):
            yield carriers, faces
        for face in fan.face_indices(cur):
            if face == cur or not _germ_into(fan, cur, face, neg):
                continue
            for nxt in range(len(fan.cones)):
                if nxt in carriers or nxt == face:
                    continue
                if not _germ_into(fan, nxt, face, cfrac):
                    continue
                yield from rec(carriers + (nxt,), faces + (face,))

    for first in range(len(fan.cones)):
        if not _germ_into(fan, first, start_cone, cfrac):
            continue
        yield from rec((first,), ())


def _subdivided_candidates(
    fan: Fan,
    shape: TreeShape,
    leg_contact: dict[int, tuple[int, ...]],
    assignment: tuple[int, ...],
    walk_cache: Optional[dict] = None,
) -> Iterator[CombinatorialType]:
    """All subdivided types over one stabilized tree and vertex-cone assignment."""
    edge_contacts = forced_edge_contacts(shape, leg_contact, fan.rank)

    # contracted edges force equal endpoint cones
    for (a, b), c in zip(shape.edges, edge_contacts):
        if not any(c) and assignment[a] != assignment[b]:
            return

    def walks(start: int, c: tuple[int, ...], end: Optional[int]):
        if walk_cache is None:
            return list(_walks(fan, start, c, end))
        key = (start, c, end)
        got = walk_cache.get(key)
        if got is None:
            got = list(_walks(fan, start, c, end))
            walk_cache[key] = got
        return got

    edge_options: list[list[tuple[tuple[int, ...], tuple[int, ...]]]] = []
    for (a, b), c in zip(shape.edges, edge_contacts):
        if not any(c):
            edge_options.append([((assignment[a],), ())])
            continue
        opts = walks(assignment[a], c, assignment[b])
        if not opts:
            return
        edge_options.append(opts)
    leg_options: list[list[tuple[tuple[int, ...], tuple[int, ...]]]] = []
    for v, lab in shape.legs:
        c = leg_contact[lab]
        if not any(c):
            leg_options.append([((assignment[v],), ())])
            continue
        opts = walks(assignment[v], c, None)
        if not opts:
            return
        leg_options.append(opts)

    for edge_choice in itertools.product(*edge_options):
        for leg_choice in itertools.product(*leg_options):
            vertices = shape.vertices
            cones = list(assignment)
            new_edges: list[tuple[int, int]] = []
            contacts: list[tuple[int, ...]] = []
            carriers: list[int] = []
            legs: list[tuple[int, int]] = []
            leg_cs: list[tuple[int, ...]] = []
            leg_cars: list[int] = []

            def add_edge(x: int, y: int, c: tuple[int, ...], car: int) -> None:
                if x < y:
                    new_edges.append((x, y))
                    contacts.append(c)
                else:
                    new_edges.append((y, x))
                    contacts.append(tuple(-t for t in c))
                carriers.append(car)

            for ((a, b), c), (cars, faces) in zip(
                zip(shape.edges, edge_contacts), edge_choice
            ):
                cursor = a
                for car, face in zip(cars, faces):
                    w = vertices
                    vertices += 1
                    cones.append(face)
                    add_edge(cursor, w, c, car)
                    cursor = w
                add_edge(cursor, b, c, cars[-1])
            for (v, lab), (cars, faces) in zip(shape.legs, leg_choice):
                c = leg_contact[lab]
                cursor = v
                for car, face in zip(cars, faces):
                    w = vertices
                    vertices += 1
                    cones.append(face)
                    add_edge(cursor, w, c, car)
                    cursor = w
                legs.append((cursor, lab))
                leg_cs.append(c)
                leg_cars.append(cars[-1])

            yield CombinatorialType(
                fan,
                TreeShape(vertices, tuple(new_edges), tuple(legs)),
                tuple(cones),
                tuple(contacts),
                tuple(carriers),
                tuple(leg_cs),
                tuple(leg_cars),
            )


def _canonical_carriers(theta: CombinatorialType, witness: Sequence[Fraction]) -> CombinatorialType:
    """Recompute vertex cones and carriers from a relative-interior witness."""
    fan = theta.fan
    r = fan.rank
    nv = theta.shape.vertices
    positions = [tuple(witness[v * r : (v + 1) * r]) for v in range(nv)]
    cones = tuple(locate(fan, p) for p in positions)
    e_cars = []
    for (a, b), c in zip(theta.shape.edges, theta.edge_contacts):
        if not any(c):
            e_cars.append(locate(fan, positions[a]))
        else:
            e_cars.append(locate_germ(fan, positions[a], [Fraction(x) for x in c]))
    l_cars = []
    for (v, lab), c in zip(theta.shape.legs, theta.leg_contacts):
        if not any(c):
            l_cars.append(locate(fan, positions[v]))
        else:
            l_cars.append(locate_germ(fan, positions[v], [Fraction(x) for x in c]))
    return CombinatorialType(
        fan,
        theta.shape,
        cones,
        theta.edge_contacts,
        tuple(e_cars),
        theta.leg_contacts,
        tuple(l_cars),
    )


def assemble_complex(gamma: DiscreteData) -> ConeComplex:
    """Enumerate all combinatorial types with the given discrete data and glue them.

    Works over fans of rank <= 2: stabilized trees are enumerated, every
    vertex-cone assignment and wall-crossing pattern is emitted, infeasible
    candidates are discarded by exact linear programming, and the face
    closure is taken with canonical deduplication.
    """
    fan = gamma.fan
    if fan.rank > 2:
        raise UnsupportedRankError("complex assembly supports fan rank <= 2 only")
    if gamma.contact_legs and not torically_transverse(gamma):
        raise ValueError("assembly requires torically transverse contact data")
    labels = [lab for lab, _ in gamma.contact_legs] + list(gamma.trivial_legs)
    if len(labels) < 2:
        raise ValueError("need at least two marked legs")
    leg_contact = {lab: c for lab, c in gamma.contact_legs}
    for lab in gamma.trivial_legs:
        leg_contact[lab] = (0,) * fan.rank

    by_key: dict[tuple, ComplexCone] = {}

    def admit(theta: CombinatorialType):
        """Store the canonical representative; returns (key, is_new, relabel)."""
        try:
            mc = moduli_cone(theta)
        except InvalidTypeError:
            return None, False, ()
        witness = mc.relint_witness()
        if witness is None:
            return None, False, ()
        canon = _canonical_carriers(theta, witness)
        key, relabel = canonical_form(canon)
        if key in by_key:
            return key, False, relabel
        stored = relabel_type(canon, relabel)
        mc2 = moduli_cone(stored)
        w2 = mc2.relint_witness()
        assert w2 is not None
        by_key[key] = ComplexCone(stored, mc2, tuple(w2), key)
        return key, True, relabel

    walk_cache: dict = {}
    for shape in labeled_trees(labels):
        for assignment in itertools.product(range(len(fan.cones)), repeat=shape.vertices):
            for theta in _subdivided_candidates(fan, shape, leg_contact, assignment, walk_cache):
                admit(theta)

    # face closure, recording pairs and inclusion matrices as we go
    face_rel: dict[tuple[tuple, tuple], IntMatrix] = {}
    queue = list(by_key.keys())
    while queue:
        key = queue.pop()
        parent = by_key[key]
        for fd in face_types(parent.type):
            face_key, is_new, relabel = admit(fd.face)
            if face_key is None:
                continue
            if is_new:
                queue.append(face_key)
            pair = (face_key, key)
            if pair not in face_rel:
                # compose parent -> candidate -> stored canonical labeling
                eperm = edge_permutation(fd.face.shape, relabel)
                vmap = tuple(relabel[fd.vertex_map[v]] for v in range(parent.type.shape.vertices))
                emap = tuple(
                    None if e is None else eperm[e] for e in fd.edge_map
                )
                face_rel[pair] = face_inclusion_matrix(
                    parent.cone, by_key[face_key].cone, vmap, emap
                )

    ordered = sorted(by_key.values(), key=lambda c: (c.cone.dimension, c.key))
    index = {c.key: i for i, c in enumerate(ordered)}
    face_maps = sorted(
        ((index[f], index[p], m) for (f, p), m in face_rel.items()),
        key=lambda t: (t[0], t[1]),
    )
    return ConeComplex(gamma, tuple(ordered), tuple(face_maps))


# --- fan embedding ---------------------------------------------------------


@dataclass(frozen=True)
class EmbeddedFan:
    ambient_rank: int
    cone_images: tuple[tuple[tuple[int, ...], ...], ...]  # per cone: primitive ray images
    lattice_maps: tuple[IntMatrix, ...]  # per cone: embedding on the span basis

    def rays(self) -> list[tuple[int, ...]]:
        out: list[tuple[int, ...]] = []
        for gens in self.cone_images:
            for g in gens:
                if g not in out:
                    out.append(g)
        return sorted(out)

    def to_fan(self, name: str = "embedded") -> Fan:
        rays = self.rays()
        cones = []
        for gens in self.cone_images:
            cones.append(tuple(sorted(rays.index(g) for g in gens)))
        return Fan.make(self.ambient_rank, rays, cones, name=name)


def _stabilized_structure(shape: TreeShape):
    """Straighten 2-valent vertices combinatorially.

    Returns (leg vertex map after stabilization, per original edge either the
    representative stab edge id or None if it vanished into a leg, grouping of
    original edges by stab edge id).
    """
    edges = {i: list(e) for i, e in enumerate(shape.edges)}
    groups = {i: [i] for i in edges}
    legs = {lab: v for v, lab in shape.legs}
    alive = set(range(shape.vertices))

    def incident(v):
        es = [i for i, (a, b) in edges.items() if v in (a, b)]
        ls = [lab for lab, w in legs.items() if w == v]
        return es, ls

    changed = True
    while changed:
        changed = False
        for v in sorted(alive):
            es, ls = incident(v)
            if len(es) + len(ls) != 2:
                continue
            if len(es) == 2:
                i, j = es
                a = edges[i][0] if edges[i][1] == v else edges[i][1]
                b = edges[j][0] if edges[j][1] == v else edges[j][1]
                edges[i] = [a, b]
                groups[i] = groups[i] + groups[j]
                del edges[j], groups[j]
                alive.discard(v)
                changed = True
                break
            if len(es) == 1 and len(ls) == 1:
                i = es[0]
                far = edges[i][0] if edges[i][1] == v else edges[i][1]
                legs[ls[0]] = far
                del edges[i], groups[i]
                alive.discard(v)
                changed = True
                break
    rep = {}
    for i, members in groups.items():
        for k in members:
            rep[k] = i
    edge_of = [rep.get(i) for i in range(len(shape.edges))]
    stab_edges = {i: tuple(e) for i, e in edges.items()}
    return legs, edge_of, stab_edges, groups


def gkm_embedding(complex_: ConeComplex, root_label: int) -> EmbeddedFan:
    """Embed the cone complex linearly into RR^k as a fan.

    A map goes to the position of the (stabilized) vertex carrying the root
    leg together with the pairwise leg-distance vector reduced modulo the
    lattice spanned by per-leg translations.  The quotient basis is fixed by
    the Smith normal form of the translation map.
    """
    if not complex_.cones:
        raise NotAssembledError("empty complex")
    gamma = complex_.gamma
    fan = gamma.fan
    labels = sorted([lab for lab, _ in gamma.contact_legs] + list(gamma.trivial_legs))
    if root_label not in labels:
        raise ValueError(f"root label {root_label} is not a marked leg")
    big_l = len(labels)
    pairs = [(labels[i], labels[j]) for i in range(big_l) for j in range(i + 1, big_l)]
    phi = IntMatrix.from_rows(
        [[1 if lab in pair else 0 for lab in labels] for pair in pairs]
    )
    proj = lattice_quotient(phi) if pairs else IntMatrix(0, 0, ())
    k = fan.rank + comb(big_l, 2) - big_l

    images = []
    lattice_maps = []
    for cc in complex_.cones:
        shape = cc.type.shape
        r = fan.rank
        nv = shape.vertices
        stab_legs, edge_of, stab_edges, groups = _stabilized_structure(shape)
        root_vertex = stab_legs[root_label]
        rows: list[list[int]] = []
        for i in range(r):
            row = [0] * cc.cone.ambient_dim
            row[root_vertex * r + i] = 1
            rows.append(row)
        dist_rows = []
        adj: dict[int, list[tuple[int, int]]] = {}
        for i, (a, b) in stab_edges.items():
            adj.setdefault(a, []).append((b, i))
            adj.setdefault(b, []).append((a, i))
        for la, lb in pairs:
            va, vb = stab_legs[la], stab_legs[lb]
            path = _tree_path(adj, va, vb)
            row = [0] * cc.cone.ambient_dim
            for stab_e in path:
                for orig in groups[stab_e]:
                    row[nv * r + orig] = 1
            dist_rows.append(row)
        for i in range(proj.rows):
            row = [0] * cc.cone.ambient_dim
            for p in range(len(pairs)):
                coef = proj.at(i, p)
                if coef:
                    for a in range(cc.cone.ambient_dim):
                        row[a] += coef * dist_rows[p][a]
            rows.append(row)
        emb = IntMatrix.from_rows(rows) if rows else IntMatrix(0, cc.cone.ambient_dim, ())
        lattice_map = emb @ cc.cone.span_basis
        lattice_maps.append(lattice_map)

    # ray images come from the embedded 1-skeleton
    ray_image: dict[int, tuple[int, ...]] = {}
    for idx, cc in enumerate(complex_.cones):
        if cc.cone.dimension != 1:
            continue
        emb_witness = _apply_rows(lattice_maps[idx], cc.cone, cc.witness)
        ray_image[idx] = primitive_vector(_clear_denominators(emb_witness))
    for idx, cc in enumerate(complex_.cones):
        gens: list[tuple[int, ...]] = []
        for face_idx in sorted(complex_.skeleton(idx, 1)):
            if face_idx in ray_image and ray_image[face_idx] not in gens:
                gens.append(ray_image[face_idx])
        if cc.cone.dimension == 1 and not gens:
            gens.append(ray_image[idx])
        images.append(tuple(gens))
    return EmbeddedFan(k, tuple(images), tuple(lattice_maps))


def _tree_path(adj: dict[int, list[tuple[int, int]]], a: int, b: int) -> list[int]:
    parent: dict[int, tuple[int, int]] = {a: (-1, -1)}
    stack = [a]
    while stack:
        v = stack.pop()
        for w, i in adj.get(v, []):
            if w not in parent:
                parent[w] = (v, i)
                stack.append(w)
    out = []
    v = b
    while v != a:
        u, i = parent[v]
        out.append(i)
        v = u
    return out


def _apply_rows(m: IntMatrix, cone: ModuliCone, ambient_witness: Sequence[Fraction]) -> list[Fraction]:
    """Evaluate the span-lattice map on the witness given in ambient coordinates."""
    sol = solve_rational_matrix(
        cone.span_basis, [[Fraction(x)] for x in ambient_witness]
    )
    assert sol is not None
    y = [row[0] for row in sol]
    return [
        sum(m.at(i, j) * y[j] for j in range(m.cols)) for i in range(m.rows)
    ]


def _clear_denominators(vec: Sequence[Fraction]) -> list[int]:
    from math import lcm

    denom = 1
    for x in vec:
        denom = lcm(denom, Fraction(x).denominator)
    return [int(Fraction(x) * denom) for x in vec]


def unimodular_equivalent(a: Fan, b: Fan) -> Optional[IntMatrix]:
    """A GL_2(ZZ) transform matching ray multisets and cones, if one exists."""
    if a.rank != 2 or b.rank != 2:
        raise UnsupportedRankError("unimodular matching implemented for rank 2")
    if len(a.rays) != len(b.rays) or len(a.cones) != len(b.cones):
        return None
    base_pairs = [
        (i, j)
        for i in range(len(a.rays))
        for j in range(len(a.rays))
        if i != j
    ]
    ra = a.rays
    for i, j in base_pairs:
        m = IntMatrix.from_rows([[ra[i][0], ra[j][0]], [ra[i][1], ra[j][1]]])
        det = determinant2(m)
        if abs(det) != 1:
            continue
        for bi, bj in base_pairs:
            target = IntMatrix.from_rows(
                [[b.rays[bi][0], b.rays[bj][0]], [b.rays[bi][1], b.rays[bj][1]]]
            )
            # g . m = target  =>  g = target . m^{-1}
            inv = IntMatrix.from_rows(
                [[m.at(1, 1) * det, -m.at(0, 1) * det], [-m.at(1, 0) * det, m.at(0, 0) * det]]
            )
            g = target @ inv
            mapped = [tuple(g.apply(list(rr))) for rr in a.rays]
            if sorted(mapped) != sorted(b.rays):
                continue
            perm = {idx: b.rays.index(v) for idx, v in enumerate(mapped)}
            cones_a = {tuple(sorted(perm[x] for x in cone)) for cone in a.cones}
            if cones_a == set(b.cones):
                return g
    return None


def determinant2(m: IntMatrix) -> int:
    return m.at(0, 0) * m.at(1, 1) - m.at(0, 1) * m.at(1, 0)


# --- JSON interface --------------------------------------------------------


def _matrix_json(m: IntMatrix) -> dict:
    return {"rows": m.rows, "cols": m.cols, "entries": [list(m.row(i)) for i in range(m.rows)]}


def _matrix_from_json(data: dict) -> IntMatrix:
    return IntMatrix(
        data["rows"], data["cols"], tuple(x for row in data["entries"] for x in row)
    )


def complex_to_json(complex_: ConeComplex) -> dict:
    from .maps import type_to_json
    from .polyhedral import SCHEMA, fan_to_json

    gamma = complex_.gamma
    return {
        "schema": SCHEMA,
        "kind": "complex",
        "fan": fan_to_json(gamma.fan),
        "contact_legs": [[lab, list(c)] for lab, c in gamma.contact_legs],
        "trivial_legs": list(gamma.trivial_legs),
        "f_vector": list(complex_.f_vector()),
        "cones": [
            {
                "dimension": cc.cone.dimension,
                "type": type_to_json(cc.type),
                "span_basis": _matrix_json(cc.cone.span_basis),
            }
            for cc in complex_.cones
        ],
        "faces": [[s, b, _matrix_json(m)] for s, b, m in complex_.face_maps],
    }


def complex_from_json(data: dict) -> ConeComplex:
    from .maps import DiscreteData, type_from_json
    from .polyhedral import fan_from_json

    fan = fan_from_json(data["fan"])
    gamma = DiscreteData(
        fan,
        tuple((lab, tuple(c)) for lab, c in data["contact_legs"]),
        tuple(data["trivial_legs"]),
    )
    cones = []
    for entry in data["cones"]:
        theta = type_from_json(fan, entry["type"])
        mc = moduli_cone(theta)
        if mc.dimension != entry["dimension"]:
            raise ValueError("stored dimension disagrees with the recomputed cone")
        witness = mc.relint_witness()
        if witness is None:
            raise ValueError("stored type has an empty moduli cone")
        key, _ = canonical_form(theta)
        cones.append(ComplexCone(theta, mc, tuple(witness), key))
    face_maps = tuple((s, b, _matrix_from_json(m)) for s, b, m in data["faces"])
    return ConeComplex(gamma, tuple(cones), face_maps)


def embedding_to_json(emb: EmbeddedFan) -> dict:
    from .polyhedral import SCHEMA

    return {
        "schema": SCHEMA,
        "kind": "embedded_fan",
        "ambient_rank": emb.ambient_rank,
        "rays": [list(r) for r in emb.rays()],
        "cones": [
            {"rays": [list(g) for g in gens], "lattice_map": _matrix_json(m)}
            for gens, m in zip(emb.cone_images, emb.lattice_maps)
        ],
    }


def embedding_from_json(data: dict) -> EmbeddedFan:
    return EmbeddedFan(
        data["ambient_rank"],
        tuple(tuple(tuple(g) for g in entry["rays"]) for entry in data["cones"]),
        tuple(_matrix_from_json(entry["lattice_map"]) for entry in data["cones"]),
    )
