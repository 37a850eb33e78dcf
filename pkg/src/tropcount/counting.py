"""Degrees of tropical evaluation maps: rigid types, lattice multiplicities, counts.

The count of rational curves through seeded generic constraints is the sum
of lattice indices of evaluation matrices over rigid combinatorial types.
Enumeration works with stabilized types (no subdivision vertices): a
skeleton census over the contact legs is grown by inserting the marked
legs one at a time, with sound pruning against the seeded targets; each
surviving type is solved exactly and its solution accepted only in the
interior of the moduli cone.  Boundary solutions abort the whole count so
the caller can reseed.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterator, Optional, Sequence

from .exactmath import IntMatrix, lattice_index, rank as int_rank, solve_rational
from .maps import (
    CombinatorialType,
    DiscreteData,
    TreeShape,
    TropicalStableMap,
    ev_trop,
    subdivide,
    torically_transverse,
    validate,
)
from .moduli import (
    canonical_form,
    labeled_trees,
    moduli_cone,
    relabel_type,
)
from .polyhedral import Fan, locate, quotient_projection

Vec = tuple[int, ...]
Point = tuple[Fraction, ...]


class CodimensionMismatchError(ValueError):
    """Constraint codimensions do not cut the moduli down to dimension zero."""


class SingularError(ValueError):
    """The evaluation matrix of a type is singular against the constraints."""


class NonGenericError(RuntimeError):
    """A solution landed on a cone boundary; reseed and recount."""


class NotPlanarPointProblemError(ValueError):
    pass


MASK64 = (1 << 64) - 1


def _splitmix64(seed: int) -> Iterator[int]:
    state = seed & MASK64
    while True:
        state = (state + 0x9E3779B97F4A7C15) & MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        yield z ^ (z >> 31)


@dataclass(frozen=True)
class Constraint:
    label: int
    subspace: Optional[IntMatrix]  # columns span L; None is a point constraint
    translation: Point


@dataclass(frozen=True)
class ConstraintConfig:
    constraints: tuple[Constraint, ...]
    seed: int
    height_bound: int


@dataclass(frozen=True)
class CountProblem:
    fan: Fan
    gamma: DiscreteData
    constraints: ConstraintConfig

    def __post_init__(self):
        if self.gamma.m < 1:
            raise ValueError("at least one marked point with trivial contact is required")
        if not torically_transverse(self.gamma):
            raise ValueError("counting requires torically transverse contact data")
        labels = {c.label for c in self.constraints.constraints}
        if labels != set(self.gamma.trivial_legs):
            raise ValueError("constraints must cover exactly the trivial legs")

    def projection(self, label: int) -> IntMatrix:
        for c in self.constraints.constraints:
            if c.label == label:
                if c.subspace is None:
                    return IntMatrix.identity(self.fan.rank)
                return quotient_projection(self.fan, c.subspace).projection
        raise KeyError(label)

    def target(self, label: int) -> Point:
        for c in self.constraints.constraints:
            if c.label == label:
                return c.translation
        raise KeyError(label)

    def is_point_problem(self) -> bool:
        return all(c.subspace is None for c in self.constraints.constraints)


@dataclass(frozen=True)
class Contribution:
    type: CombinatorialType  # stabilized rigid type, canonical labeling
    map: TropicalStableMap  # solved and minimally subdivided
    multiplicity: int
    key: tuple


@dataclass(frozen=True)
class CountResult:
    total: int
    contributions: tuple[Contribution, ...]
    seed_echo: int
    rejected_nongeneric: int


def expected_codimension(fan: Fan, gamma: DiscreteData) -> int:
    return fan.rank - 3 + gamma.n + gamma.m


def generate_constraints(
    gamma: DiscreteData,
    subspaces: Optional[dict[int, Optional[IntMatrix]]] = None,
    seed: int = 0,
    height_bound: int = 32,
) -> ConstraintConfig:
    """Seeded generic translations for each trivial leg's constraint.

    Rationals are drawn from a splitmix64 stream, with numerator and
    denominator bounded by ``height_bound``; identical seeds give
    identical configurations on every platform.
    """
    if height_bound < 1:
        raise ValueError("height_bound must be positive")
    fan = gamma.fan
    subspaces = subspaces or {}
    total = 0
    for label in gamma.trivial_legs:
        basis = subspaces.get(label)
        dim_l = 0 if basis is None else basis.cols
        total += fan.rank - dim_l
    if total != expected_codimension(fan, gamma):
        raise CodimensionMismatchError(
            f"constraint codimension {total} != moduli dimension {expected_codimension(fan, gamma)}"
        )
    stream = _splitmix64(seed)
    constraints = []
    for label in sorted(gamma.trivial_legs):
        coords = []
        for _ in range(fan.rank):
            num = next(stream) % (2 * height_bound + 1) - height_bound
            den = next(stream) % height_bound + 1
            coords.append(Fraction(num, den))
        constraints.append(Constraint(label, subspaces.get(label), tuple(coords)))
    return ConstraintConfig(tuple(constraints), seed, height_bound)


def kontsevich_oracle(d: int) -> int:
    """Rational plane curve counts from the associativity recursion, exactly."""
    if d < 1:
        raise ValueError("degree must be positive")
    n = [0, 1]
    for deg in range(2, d + 1):
        total = 0
        for d1 in range(1, deg):
            d2 = deg - d1
            total += (
                n[d1]
                * n[d2]
                * d1 * d1 * d2
                * (d2 * comb(3 * deg - 4, 3 * d1 - 2) - d1 * comb(3 * deg - 4, 3 * d1 - 1))
            )
        n.append(total)
    return n[d]


# --- working tree representation -------------------------------------------
#
# During enumeration a stabilized type is held as a plain tuple
# (nv, edges, legs): edges are bare (a, b) pairs and legs are
# (vertex, contact, label).  Edge contact orders are derived data (the sum
# of leg contacts beyond the head), recomputed when needed so that leaf
# insertions never have to patch them.  Contact labels are interchangeable
# within an equal contact order, so canonical keys replace them by the
# contact vector itself.


def _tree_key(nv: int, edges, legs) -> tuple:
    adj: list[list[int]] = [[] for _ in range(nv)]
    for i, (a, b) in enumerate(edges):
        adj[a].append(i)
        adj[b].append(i)

    def serialize(v: int, come_from: int) -> tuple:
        toks = sorted(
            ("m", lab, c) if not any(c) else ("c", c)
            for w, c, lab in legs
            if w == v
        )
        children = []
        for i in adj[v]:
            if i == come_from:
                continue
            a, b = edges[i]
            w = b if a == v else a
            children.append(serialize(w, i))
        children.sort()
        return (tuple(toks), tuple(children))

    return min(serialize(root, -1) for root in range(nv))


def _derived_contacts(nv: int, edges, legs, rank: int) -> list[Vec]:
    """Contact order of each edge (a, b): sum of leg contacts on the b side."""
    adj: list[list[tuple[int, int]]] = [[] for _ in range(nv)]
    for i, (a, b) in enumerate(edges):
        adj[a].append((b, i))
        adj[b].append((a, i))
    at_vertex: list[list[Vec]] = [[] for _ in range(nv)]
    for v, c, _ in legs:
        at_vertex[v].append(c)
    out: list[Vec] = []
    for i, (a, b) in enumerate(edges):
        total = [0] * rank
        seen = {a, b}
        stack = [b]
        while stack:
            v = stack.pop()
            for c in at_vertex[v]:
                for k in range(rank):
                    total[k] += c[k]
            for w, j in adj[v]:
                if w not in seen and j != i:
                    seen.add(w)
                    stack.append(w)
        out.append(tuple(total))
    return out


def _skeleton_census(rank: int, contacts: Sequence[Vec]) -> list[tuple]:
    """Distinct stabilized trivalent trees over the contact legs, one per symmetry class.

    Trees are grown from the tripod by leaf insertion in a fixed contact
    order with canonical deduplication after every level, so the census
    never holds more than one representative per class.
    """
    contacts = sorted(contacts)
    if len(contacts) < 3:
        raise ValueError("skeleton census needs at least three contact legs")
    trees = [(1, (), tuple((0, c, 0) for c in contacts[:3]))]
    for c in contacts[3:]:
        seen = {}
        for nv, edges, legs in trees:
            grown: list[tuple] = []
            for i, (a, b) in enumerate(edges):
                rest = edges[:i] + edges[i + 1 :]
                grown.append(
                    (nv + 1, rest + ((a, nv), (nv, b)), legs + ((nv, c, 0),))
                )
            for j, (v, c0, lab0) in enumerate(legs):
                rest_legs = legs[:j] + legs[j + 1 :]
                grown.append(
                    (nv + 1, edges + ((v, nv),), rest_legs + ((nv, c0, lab0), (nv, c, 0)))
                )
            for t in grown:
                key = _tree_key(*t)
                if key not in seen:
                    seen[key] = t
        trees = list(seen.values())
    # drop skeletons with a contracted internal edge: their evaluation
    # matrices always carry a zero column
    return [
        t
        for t in trees
        if all(any(c) for c in _derived_contacts(t[0], t[1], t[2], rank))
    ]


def _components(nv: int, edges, marked: set[int]):
    """Connected components of the unmarked vertices; returns (component id per vertex, count)."""
    comp = [-1] * nv
    cid = 0
    for v in range(nv):
        if v in marked or comp[v] != -1:
            continue
        stack = [v]
        comp[v] = cid
        while stack:
            u = stack.pop()
            for a, b in edges:
                if a == u and b not in marked and comp[b] == -1:
                    comp[b] = cid
                    stack.append(b)
                elif b == u and a not in marked and comp[a] == -1:
                    comp[a] = cid
                    stack.append(a)
        cid += 1
    return comp, cid


def _cross(u, v) -> int:
    return u[0] * v[1] - u[1] * v[0]


def _in_closed_cone_2d(v: Point, dirs: list[Vec]) -> bool:
    """Exact membership of v in the nonnegative span of dirs (rank 2)."""
    if all(x == 0 for x in v):
        return True
    for d in dirs:
        if _cross(d, v) == 0 and d[0] * v[0] + d[1] * v[1] > 0:
            return True
    for d1, d2 in itertools.combinations(dirs, 2):
        det = _cross(d1, d2)
        if det == 0:
            continue
        a = _cross(v, d2)
        b = _cross(d1, v)
        if det < 0:
            a, b, det = -a, -b, -det
        if a >= 0 and b >= 0:
            return True
    return False


def _insert_marked(tree, label: int, target_edge: Optional[int], target_leg: Optional[int]):
    """New tree with a trivial leg at a fresh 2-valent point on an edge or a leg."""
    nv, edges, legs = tree
    w = nv
    zero = tuple(0 for _ in legs[0][1])
    if target_edge is not None:
        a, b = edges[target_edge]
        rest = edges[:target_edge] + edges[target_edge + 1 :]
        new_edges = rest + ((a, w), (w, b))
        new_legs = legs + ((w, zero, label),)
    else:
        v, c0, lab0 = legs[target_leg]
        rest_legs = legs[:target_leg] + legs[target_leg + 1 :]
        new_edges = edges + ((v, w),)
        new_legs = rest_legs + ((w, c0, lab0), (w, zero, label))
    return (nv + 1, new_edges, new_legs)


def _integer_targets(problem: CountProblem) -> dict[int, Vec]:
    """Targets rescaled by a common denominator; cone tests are scale-invariant."""
    from math import lcm

    denom = 1
    for c in problem.constraints.constraints:
        for x in c.translation:
            denom = lcm(denom, x.denominator)
    return {
        c.label: tuple(int(x * denom) for x in c.translation)
        for c in problem.constraints.constraints
    }


def _marked_dfs(problem: CountProblem, skeleton, trivial_labels):
    """Yield completed trees over one skeleton, pruning against the targets.

    Two sound prunes for planar point conditions: every component of the
    tree minus the marked vertices must end up with exactly one unbounded
    contact end (checked via subtree end-counts), and every pinned pairwise
    difference must lie in the closed cone of its path's directions.
    Other problems fall back to the raw census.

    Path direction sets are kept as bitmasks over the skeleton's direction
    alphabet and maintained incrementally: subdividing an edge never changes
    the directions a path uses, so only the fresh vertex needs new entries.
    """
    planar_points = problem.is_point_problem() and problem.fan.rank == 2
    rank = problem.fan.rank
    nv0, edges0, legs0 = skeleton
    contacts0 = tuple(_derived_contacts(nv0, edges0, legs0, rank))
    targets = _integer_targets(problem) if planar_points else {}

    # direction alphabet: +-contact of every skeleton edge and leg
    alphabet: dict[Vec, int] = {}
    for c in list(contacts0) + [c for _, c, _ in legs0]:
        for d in (c, tuple(-x for x in c)):
            if any(d) and d not in alphabet:
                alphabet[d] = 1 << len(alphabet)
    dirs_of_mask: dict[int, list[Vec]] = {}

    def unpack(mask: int) -> list[Vec]:
        got = dirs_of_mask.get(mask)
        if got is None:
            got = [d for d, bit in alphabet.items() if mask & bit]
            dirs_of_mask[mask] = got
        return got

    cone_cache: dict[tuple, bool] = {}

    def cone_ok(diff: Vec, mask: int) -> bool:
        key = (diff, mask)
        hit = cone_cache.get(key)
        if hit is None:
            hit = _in_closed_cone_2d(diff, unpack(mask))
            cone_cache[key] = hit
        return hit

    def masks_from(tree, contacts, source: int):
        """Per vertex: depth from source and the direction bitmask of the
        walk vertex -> source (directions oriented along the walk)."""
        nv, edges, legs = tree
        adj: list[list[tuple[int, int, int]]] = [[] for _ in range(nv)]
        for i, (x, y) in enumerate(edges):
            adj[x].append((y, i, 1))
            adj[y].append((x, i, -1))
        depth = [-1] * nv
        mask = [0] * nv
        depth[source] = 0
        stack = [source]
        while stack:
            v = stack.pop()
            for w, i, s in adj[v]:
                if depth[w] == -1:
                    depth[w] = depth[v] + 1
                    # step w -> v traverses edge i against sign s
                    c = contacts[i]
                    d = tuple(-x for x in c) if s > 0 else c
                    mask[w] = mask[v] | (alphabet[d] if any(d) else 0)
                    stack.append(w)
        return depth, mask

    def rec(tree, contacts, marked_vertex, marked_geo, j):
        if j == len(trivial_labels):
            yield tree
            return
        label = trivial_labels[j]
        nv, edges, legs = tree
        marked = set(marked_vertex.values())

        candidates = []
        if planar_points:
            comp, _ = _components(nv, edges, marked)
            below, totals, parent_edge = _subtree_end_counts(nv, edges, legs, marked, comp)
            for i, (a, b) in enumerate(edges):
                if a in marked or b in marked:
                    continue
                child = b if parent_edge[b] == i else a
                if below[child] >= 1 and totals[comp[a]] - below[child] >= 1:
                    candidates.append((i, None))
            for k, (v, c, lab) in enumerate(legs):
                if not any(c) or v in marked:
                    continue
                if totals[comp[v]] >= 2:
                    candidates.append((None, k))
        else:
            candidates.extend((i, None) for i in range(len(edges)))
            candidates.extend(
                (None, k) for k, (v, c, lab) in enumerate(legs) if any(c)
            )

        tj = targets.get(label)
        for te, tl in candidates:
            if planar_points and marked_vertex:
                # O(1) per earlier leg: reuse its depth/mask arrays
                ok = True
                if te is not None:
                    a, b = edges[te]
                    c = contacts[te]
                else:
                    a = legs[tl][0]
                    b = None
                    c = legs[tl][1]
                for lab_i, (depth_i, mask_i) in marked_geo.items():
                    if b is None or depth_i[a] < depth_i[b]:
                        step = tuple(-x for x in c)
                        wmask = mask_i[a] | alphabet[step]
                    else:
                        wmask = mask_i[b] | alphabet[c]
                    ti = targets[lab_i]
                    diff = (ti[0] - tj[0], ti[1] - tj[1])
                    if not cone_ok(diff, wmask):
                        ok = False
                        break
                if not ok:
                    continue
            grown = _insert_marked(tree, label, te, tl)
            if te is not None:
                new_contacts = (
                    contacts[:te] + contacts[te + 1 :] + (contacts[te], contacts[te])
                )
            else:
                new_contacts = contacts + (legs[tl][1],)
            gnv = grown[0]
            new_marked = dict(marked_vertex)
            new_marked[label] = gnv - 1
            if planar_points:
                new_geo = {}
                for lab_i, (depth_i, mask_i) in marked_geo.items():
                    if te is not None:
                        a, b = edges[te]
                        c = contacts[te]
                        if depth_i[a] < depth_i[b]:
                            wd, wm = depth_i[a] + 1, mask_i[a] | alphabet[tuple(-x for x in c)]
                        else:
                            wd, wm = depth_i[b] + 1, mask_i[b] | alphabet[c]
                    else:
                        v, c, _ = legs[tl]
                        wd, wm = depth_i[v] + 1, mask_i[v] | alphabet[tuple(-x for x in c)]
                    new_geo[lab_i] = (depth_i + [wd], mask_i + [wm])
                new_geo[label] = masks_from(grown, new_contacts, gnv - 1)
            else:
                new_geo = marked_geo
            yield from rec(grown, new_contacts, new_marked, new_geo, j + 1)

    yield from rec(skeleton, contacts0, {}, {}, 0)


def _subtree_end_counts(nv, edges, legs, marked, comp):
    """Contact-end totals per component and below each vertex in a rooted forest."""
    ncomp = max((c for c in comp if c >= 0), default=-1) + 1
    own = [0] * nv
    for v, c, _ in legs:
        if any(c) and v not in marked:
            own[v] += 1
    adj: list[list[tuple[int, int]]] = [[] for _ in range(nv)]
    for i, (a, b) in enumerate(edges):
        if a not in marked and b not in marked:
            adj[a].append((b, i))
            adj[b].append((a, i))
    totals = [0] * ncomp
    below = [0] * nv
    parent_vertex = [-1] * nv
    parent_edge = [-1] * nv
    seen = [False] * nv
    for root in range(nv):
        if root in marked or seen[root]:
            continue
        order = []
        stack = [root]
        seen[root] = True
        while stack:
            v = stack.pop()
            order.append(v)
            for w, i in adj[v]:
                if not seen[w]:
                    seen[w] = True
                    parent_vertex[w] = v
                    parent_edge[w] = i
                    stack.append(w)
        for v in reversed(order):
            below[v] += own[v]
            if parent_vertex[v] >= 0:
                below[parent_vertex[v]] += below[v]
        totals[comp[root]] = below[root]
    return below, totals, parent_edge


def _tree_to_type(problem: CountProblem, tree) -> CombinatorialType:
    """Stabilized combinatorial type (unconfined vertices) from a working tree.

    Contact legs in the census carry placeholder labels; the original labels
    are reassigned per contact order in a deterministic sweep, which is
    harmless because equally-decorated legs are interchangeable.
    """
    nv, edges, legs = tree
    pool: dict[Vec, list[int]] = {}
    for lab, c in sorted(problem.gamma.contact_legs):
        pool.setdefault(c, []).append(lab)
    pool = {c: sorted(labs, reverse=True) for c, labs in pool.items()}
    labelled = []
    for v, c, lab in legs:
        if lab:
            labelled.append((v, lab, c))
        else:
            labelled.append((v, pool[c].pop(), c))
    labelled.sort(key=lambda t: t[1])
    derived = _derived_contacts(nv, edges, legs, problem.fan.rank)
    shape_edges = []
    contacts = []
    order = sorted(range(len(edges)), key=lambda i: (min(edges[i]), max(edges[i])))
    for i in order:
        a, b = edges[i]
        c = derived[i]
        if a < b:
            shape_edges.append((a, b))
            contacts.append(c)
        else:
            shape_edges.append((b, a))
            contacts.append(tuple(-x for x in c))
    shape = TreeShape(nv, tuple(shape_edges), tuple((v, lab) for v, lab, _ in labelled))
    return CombinatorialType(
        problem.fan,
        shape,
        (None,) * nv,
        tuple(contacts),
        (None,) * len(shape_edges),
        tuple(c for _, _, c in labelled),
        (None,) * len(labelled),
    )


def enumerate_rigid_types(problem: CountProblem, prune: bool = True) -> Iterator[CombinatorialType]:
    """Stabilized types whose moduli cone dimension matches the constraint codimension.

    Duplicates are eliminated by a canonical form that treats legs with
    equal contact order as interchangeable.  With ``prune`` the stream is
    filtered by sound necessary conditions against the problem's seeded
    targets (a pruned-away type can never contribute to this problem).
    """
    codim = expected_codimension(problem.fan, problem.gamma)
    seen = set()
    for tree in _candidate_trees(problem, prune):
        theta = _tree_to_type(problem, tree)
        key, _ = canonical_form(theta, identify_contacts=True)
        if key in seen:
            continue
        seen.add(key)
        if problem.fan.rank + len(theta.shape.edges) != codim:
            continue
        yield theta


def _candidate_trees(problem: CountProblem, prune: bool) -> Iterator[tuple]:
    gamma = problem.gamma
    fan = problem.fan
    trivial = sorted(gamma.trivial_legs)
    fast = prune and problem.is_point_problem() and gamma.n >= 3
    if fast:
        contacts = [c for _, c in gamma.contact_legs]
        for skeleton in _skeleton_census(fan.rank, contacts):
            yield from _marked_dfs(problem, skeleton, trivial)
        return
    # small census over all legs; used for subspace constraints and degree 0
    zero = (0,) * fan.rank
    contact_of = {lab: c for lab, c in gamma.contact_legs}
    for lab in trivial:
        contact_of[lab] = zero
    for shape in labeled_trees(sorted(contact_of)):
        yield (
            shape.vertices,
            shape.edges,
            tuple((v, contact_of[lab], lab) for v, lab in shape.legs),
        )


def _evaluation_rows(problem: CountProblem, theta: CombinatorialType, root_label: int):
    """Rows of the constrained evaluation map in (root position, lengths) coordinates."""
    fan = problem.fan
    r = fan.rank
    shape = theta.shape
    ne = len(shape.edges)
    root_vertex = shape.leg_vertex(root_label)
    rows: list[list[int]] = []
    rhs: list[Fraction] = []
    for label in sorted(problem.gamma.trivial_legs):
        proj = problem.projection(label)
        v = shape.leg_vertex(label)
        path = shape.path_edges(root_vertex, v)
        block = [[0] * (r + ne) for _ in range(r)]
        for i in range(r):
            block[i][i] = 1
        for e, sign in path:
            c = theta.edge_contacts[e]
            for i in range(r):
                block[i][r + e] = sign * c[i]
        target = proj.apply(list(problem.target(label)))
        for i in range(proj.rows):
            row = [0] * (r + ne)
            for j in range(r + ne):
                row[j] = sum(proj.at(i, k) * block[k][j] for k in range(r))
            rows.append(row)
        rhs.extend(target)
    return rows, rhs, root_vertex


def evaluation_matrix(theta: CombinatorialType, problem: CountProblem) -> IntMatrix:
    """Matrix of the stacked constrained evaluations on the moduli span lattice."""
    fan = problem.fan
    r = fan.rank
    shape = theta.shape
    nv = shape.vertices
    ne = len(shape.edges)
    mc = moduli_cone(theta)
    rows: list[list[int]] = []
    for label in sorted(problem.gamma.trivial_legs):
        proj = problem.projection(label)
        v = shape.leg_vertex(label)
        for i in range(proj.rows):
            row = [0] * mc.ambient_dim
            for j in range(r):
                row[v * r + j] = proj.at(i, j)
            rows.append(row)
    stacked = IntMatrix.from_rows(rows) if rows else IntMatrix(0, mc.ambient_dim, ())
    return stacked @ mc.span_basis


def multiplicity(theta: CombinatorialType, problem: CountProblem) -> int:
    """Lattice index of the evaluation matrix; the type's contribution weight."""
    m = evaluation_matrix(theta, problem)
    if m.rows != m.cols or int_rank(m) < m.rows:
        raise SingularError("type is not rigid against this constraint pattern")
    return lattice_index(m)


def mikhalkin_multiplicity(theta: CombinatorialType) -> int:
    """Product over trivalent image vertices of |det| of two outgoing directions.

    Defined for planar point conditions: the fan has rank 2 and forgetting
    the trivial legs leaves a trivalent tree.
    """
    if theta.fan.rank != 2:
        raise NotPlanarPointProblemError("vertex multiplicities need a rank-2 fan")
    nv = theta.shape.vertices
    star: list[list[Vec]] = [[] for _ in range(nv)]
    for (a, b), c in zip(theta.shape.edges, theta.edge_contacts):
        star[a].append(c)
        star[b].append(tuple(-x for x in c))
    for (v, _), c in zip(theta.shape.legs, theta.leg_contacts):
        if any(c):
            star[v].append(c)
    total = 1
    for v in range(nv):
        outs = star[v]
        if len(outs) == 2:
            continue  # straightened away by stabilization
        if len(outs) != 3:
            raise NotPlanarPointProblemError(
                f"vertex {v} has {len(outs)} non-contracted branches"
            )
        total *= abs(_cross(outs[0], outs[1]))
    return total


def _solve_type(problem: CountProblem, theta: CombinatorialType):
    """Solve the evaluation system for one type.

    Returns (map, multiplicity) for an interior solution, None for a miss,
    raises SingularError or NonGenericError as appropriate.
    """
    fan = problem.fan
    r = fan.rank
    shape = theta.shape
    ne = len(shape.edges)
    root_label = min(problem.gamma.trivial_legs)
    rows, rhs, root_vertex = _evaluation_rows(problem, theta, root_label)
    matrix = IntMatrix.from_rows(rows) if rows else IntMatrix(0, r + ne, ())
    if matrix.rows != r + ne:
        raise SingularError("evaluation system is not square")
    sol = solve_rational(matrix, rhs)
    if sol is None:
        raise SingularError("evaluation matrix is singular (inconsistent)")
    values, unique = sol
    if not unique:
        raise NonGenericError("constraints meet a positive-dimensional family")
    x = values[:r]
    lengths = values[r:]
    for l in lengths:
        if l < 0:
            return None
        if l == 0:
            raise NonGenericError("a solved edge length is exactly zero")
    # propagate positions from the root vertex
    positions: list[Optional[Point]] = [None] * shape.vertices
    positions[root_vertex] = tuple(x)
    changed = True
    while changed:
        changed = False
        for e, ((a, b), c) in enumerate(zip(shape.edges, theta.edge_contacts)):
            if positions[a] is not None and positions[b] is None:
                positions[b] = tuple(p + lengths[e] * ci for p, ci in zip(positions[a], c))
                changed = True
            elif positions[b] is not None and positions[a] is None:
                positions[a] = tuple(p - lengths[e] * ci for p, ci in zip(positions[b], c))
                changed = True
    stab_cones = []
    for p in positions:
        cone = locate(fan, p)
        if fan.dim(cone) != fan.rank:
            raise NonGenericError("a stabilized vertex landed on a wall")
        stab_cones.append(cone)
    concrete = CombinatorialType(
        fan,
        shape,
        tuple(stab_cones),
        theta.edge_contacts,
        (None,) * ne,
        theta.leg_contacts,
        (None,) * len(shape.legs),
    )
    solved = TropicalStableMap(concrete, tuple(positions), tuple(lengths))
    full = subdivide(solved)
    for v in range(shape.vertices, full.type.shape.vertices):
        if fan.dim(full.type.vertex_cones[v]) != fan.rank - 1:
            raise NonGenericError("an edge crossed a stratum of codimension > 1")
    report = validate(full)
    if not report.valid:
        raise AssertionError(f"solved map fails validation: {report}")
    mult = multiplicity(theta, problem)
    for label in problem.gamma.trivial_legs:
        ep = ev_trop(full, label)
        proj = problem.projection(label)
        want = proj.apply(list(problem.target(label)))
        got = proj.apply(list(ep.coset))
        if want != got:
            raise AssertionError("solved map misses its constraint translate")
    return full, mult


def _check_problem_genericity(problem: CountProblem) -> None:
    if problem.is_point_problem():
        for c in problem.constraints.constraints:
            cone = locate(problem.fan, c.translation)
            if problem.fan.dim(cone) != problem.fan.rank:
                raise NonGenericError(f"target for leg {c.label} lies on a wall")


def count(problem: CountProblem, threads: int = 1) -> CountResult:
    """Sum lattice multiplicities of rigid types solved against the constraints.

    The result is independent of the seed for generic seeds and of the
    worker count; contribution lists are canonically sorted.
    """
    _check_problem_genericity(problem)
    if threads > 1:
        results = _map_workers(problem, threads)
    else:
        results = [_count_worker((problem, 0, 1))]
    merged: dict = {}
    rejected = 0
    for items, rej in results:
        rejected += rej
        for key, contribution in items:
            if key not in merged:
                merged[key] = contribution
    contributions = sorted(merged.values(), key=lambda c: c.key)
    total = sum(c.multiplicity for c in contributions)
    return CountResult(total, tuple(contributions), problem.constraints.seed, rejected)


def _process_type(problem: CountProblem, theta: CombinatorialType, out: dict, state: dict) -> None:
    key, relabel = canonical_form(theta, identify_contacts=True)
    seen = state.setdefault("seen", set())
    if key in seen:
        return
    seen.add(key)
    try:
        solved = _solve_type(problem, theta)
    except SingularError:
        state["rejected"] = state.get("rejected", 0) + 1
        return
    if solved is None:
        return
    full, mult = solved
    canon_theta = relabel_type(theta, relabel)
    out[key] = Contribution(canon_theta, full, mult, key)


def _count_worker(args):
    """Process one deterministic chunk of the skeleton census.

    Distinct final types never cross skeleton classes, so chunking by
    skeleton index keeps per-worker deduplication globally valid.
    """
    problem, chunk_index, threads = args
    out: dict = {}
    state: dict = {}
    gamma = problem.gamma
    trivial = sorted(gamma.trivial_legs)
    codim = expected_codimension(problem.fan, gamma)
    if problem.is_point_problem() and gamma.n >= 3:
        contacts = [c for _, c in gamma.contact_legs]
        skeletons = _skeleton_census(problem.fan.rank, contacts)
        for i, skeleton in enumerate(skeletons):
            if i % threads != chunk_index:
                continue
            for tree in _marked_dfs(problem, skeleton, trivial):
                theta = _tree_to_type(problem, tree)
                if problem.fan.rank + len(theta.shape.edges) != codim:
                    continue
                _process_type(problem, theta, out, state)
    elif chunk_index == 0:
        for tree in _candidate_trees(problem, prune=True):
            theta = _tree_to_type(problem, tree)
            if problem.fan.rank + len(theta.shape.edges) != codim:
                continue
            _process_type(problem, theta, out, state)
    return list(out.items()), state.get("rejected", 0)


def _map_workers(problem: CountProblem, threads: int):
    import multiprocessing as mp

    with mp.Pool(threads) as pool:
        return pool.map(_count_worker, [(problem, i, threads) for i in range(threads)])


# --- JSON interface --------------------------------------------------------


def count_result_to_json(problem: CountProblem, result: CountResult) -> dict:
    from .maps import map_to_json, type_to_json
    from .polyhedral import SCHEMA, fan_to_json

    return {
        "schema": SCHEMA,
        "kind": "count",
        "fan": fan_to_json(problem.fan),
        "contact_legs": [[lab, list(c)] for lab, c in problem.gamma.contact_legs],
        "trivial_legs": list(problem.gamma.trivial_legs),
        "seed": result.seed_echo,
        "height_bound": problem.constraints.height_bound,
        "total": result.total,
        "rejected_nongeneric": result.rejected_nongeneric,
        "contributions": [
            {
                "multiplicity": c.multiplicity,
                "type": type_to_json(c.type),
                "map": map_to_json(c.map),
            }
            for c in result.contributions
        ],
    }


def count_result_from_json(data: dict) -> CountResult:
    from .maps import map_from_json, type_from_json
    from .polyhedral import fan_from_json

    fan = fan_from_json(data["fan"])
    contributions = []
    for entry in data["contributions"]:
        theta = type_from_json(fan, entry["type"])
        solved = map_from_json(entry["map"])
        key, _ = canonical_form(theta, identify_contacts=True)
        contributions.append(Contribution(theta, solved, entry["multiplicity"], key))
    total = data["total"]
    if total != sum(c.multiplicity for c in contributions):
        raise ValueError("stored total disagrees with the contributions")
    return CountResult(total, tuple(contributions), data["seed"], data["rejected_nongeneric"])
