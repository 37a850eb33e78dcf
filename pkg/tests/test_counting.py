import pytest
from fractions import Fraction

from tropcount.counting import (
    CodimensionMismatchError,
    CountProblem,
    NonGenericError,
    NotPlanarPointProblemError,
    SingularError,
    count,
    enumerate_rigid_types,
    evaluation_matrix,
    generate_constraints,
    kontsevich_oracle,
    mikhalkin_multiplicity,
    multiplicity,
)
from tropcount.exactmath import IntMatrix
from tropcount.maps import CombinatorialType, DiscreteData, TreeShape, ev_trop, validate
from tropcount.moduli import contains, moduli_cone
from tropcount.polyhedral import fan_product, fan_projective_space

P2 = fan_projective_space(2)
P1 = fan_projective_space(1)
P1P1 = fan_product(P1, P1)
U1, U2, U3 = (1, 0), (0, 1), (-1, -1)


def p2_gamma(d, m=None):
    contacts = tuple((i + 1, [U1, U2, U3][i // d]) for i in range(3 * d))
    m = 3 * d - 1 if m is None else m
    return DiscreteData(P2, contacts, tuple(range(3 * d + 1, 3 * d + 1 + m)))


def p2_problem(d, seed):
    gamma = p2_gamma(d)
    return CountProblem(P2, gamma, generate_constraints(gamma, None, seed))


def test_kontsevich_oracle_values():
    assert kontsevich_oracle(1) == 1
    assert kontsevich_oracle(2) == 1
    assert kontsevich_oracle(3) == 12
    assert kontsevich_oracle(4) == 620
    assert kontsevich_oracle(5) == 87304


def test_generate_constraints_deterministic():
    gamma = p2_gamma(1)
    a = generate_constraints(gamma, None, 42)
    b = generate_constraints(gamma, None, 42)
    assert a == b
    c = generate_constraints(gamma, None, 43)
    assert a != c
    for constraint in a.constraints:
        for x in constraint.translation:
            assert abs(x.numerator) <= 32 * 32 and x.denominator <= 32


def test_generate_constraints_codimension_balance():
    gamma = p2_gamma(1)  # dim = 2 - 3 + 2 + 3 = 4 = two point constraints
    generate_constraints(gamma, None, 1)
    too_many = DiscreteData(P2, p2_gamma(1).contact_legs, (4, 5, 6))
    with pytest.raises(CodimensionMismatchError):
        generate_constraints(too_many, None, 1)


def test_enumerate_census_degree_one():
    prob = p2_problem(1, 7)
    unpruned = list(enumerate_rigid_types(prob, prune=False))
    assert len(unpruned) == 15  # (2*5-5)!! labeled trivalent trees
    pruned = list(enumerate_rigid_types(prob))
    assert 1 <= len(pruned) <= 15
    pruned_keys = {t.shape.legs for t in pruned}
    assert pruned_keys <= {t.shape.legs for t in unpruned} | pruned_keys


def test_enumerate_p1_single_path_type():
    gamma = DiscreteData(P1, ((1, (1,)), (2, (-1,))), (3,))
    prob = CountProblem(P1, gamma, generate_constraints(gamma, None, 5))
    types = list(enumerate_rigid_types(prob, prune=False))
    assert len(types) == 1
    assert count(prob).total == 1


def test_degree_zero_m3_single_contracted_type():
    gamma = DiscreteData(P2, (), (1, 2, 3))
    subspaces = {1: None, 2: IntMatrix.identity(2), 3: IntMatrix.identity(2)}
    cfg = generate_constraints(gamma, subspaces, 11)
    prob = CountProblem(P2, gamma, cfg)
    types = list(enumerate_rigid_types(prob, prune=False))
    assert len(types) == 1
    res = count(prob)
    assert res.total == 1


def test_evaluation_matrix_point_legs_on_root():
    # both point legs at the single vertex: the matrix stacks two identities
    gamma = p2_gamma(1)
    prob = CountProblem(P2, gamma, generate_constraints(gamma, None, 3))
    shape = TreeShape(1, (), tuple((0, lab) for lab in range(1, 6)))
    theta = CombinatorialType(
        P2, shape, (None,), (), (), (U1, U2, U3, (0, 0), (0, 0)), (None,) * 5
    )
    m = evaluation_matrix(theta, prob)
    assert m.rows == 4 and m.cols == 2
    cols = {m.column(0), m.column(1)}
    assert cols == {(1, 0, 1, 0), (0, 1, 0, 1)}
    with pytest.raises(SingularError):
        multiplicity(theta, prob)  # 4x2 cannot be rigid


def test_evaluation_matrix_leg_across_an_edge():
    # point leg 5 across a bounded edge of contact u1 from the root leg 4
    gamma = p2_gamma(1)
    prob = CountProblem(P2, gamma, generate_constraints(gamma, None, 3))
    shape = TreeShape(
        2, ((0, 1),), ((0, 1), (1, 2), (1, 3), (0, 4), (1, 5))
    )
    theta = CombinatorialType(
        P2,
        shape,
        (None, None),
        ((-1, 0),),  # contacts beyond the head: u2 + u3
        (None,),
        (U1, U2, U3, (0, 0), (0, 0)),
        (None,) * 5,
    )
    m = evaluation_matrix(theta, prob)
    # rows: ev4 = pos_0, ev5 = pos_1; span basis is rank 3
    assert m.rows == 4 and m.cols == 3
    mc = moduli_cone(theta)
    assert mc.dimension == 3


def test_multiplicity_weighted_vertex():
    # weighted directions (2,1) and (1,2) meeting (-3,-3): vertex factor 3
    shape = TreeShape(1, (), ((0, 1), (0, 2), (0, 3)))
    theta = CombinatorialType(
        P2, shape, (None,), (), (), ((2, 1), (1, 2), (-3, -3)), (None,) * 3
    )
    assert mikhalkin_multiplicity(theta) == 3


def test_mikhalkin_rejects_higher_rank():
    p3 = fan_projective_space(3)
    shape = TreeShape(1, (), ((0, 1), (0, 2)))
    theta = CombinatorialType(
        p3, shape, (None,), (), (), ((1, 0, 0), (-1, 0, 0)), (None, None)
    )
    with pytest.raises(NotPlanarPointProblemError):
        mikhalkin_multiplicity(theta)


@pytest.mark.parametrize("d,expected", [(1, 1), (2, 1)])
def test_plane_counts_small_degrees(d, expected):
    seeds = {1: (7, 8, 9), 2: (0, 1, 3)}[d]
    totals = set()
    for seed in seeds:
        res = count(p2_problem(d, seed))
        totals.add(res.total)
        for c in res.contributions:
            assert validate(c.map).valid
            assert mikhalkin_multiplicity(c.type) == c.multiplicity
    assert totals == {expected}


def test_quadric_bidegree_one_one():
    contacts = ((1, (1, 0)), (2, (-1, 0)), (3, (0, 1)), (4, (0, -1)))
    totals = set()
    for seed in (0, 1, 2):
        gamma = DiscreteData(P1P1, contacts, (5, 6, 7))
        res = count(CountProblem(P1P1, gamma, generate_constraints(gamma, None, seed)))
        totals.add(res.total)
    assert totals == {1}


def test_quadric_count_matches_bilinear_kernel_oracle():
    # independent oracle: bilinear forms a+bx+cy+dxy through 3 generic points
    # form a 3-dimensional kernel condition with exactly one curve
    from tropcount.counting import _splitmix64

    stream = _splitmix64(123)
    pts = []
    for _ in range(3):
        x = Fraction(next(stream) % 41 - 20, next(stream) % 7 + 1)
        y = Fraction(next(stream) % 41 - 20, next(stream) % 7 + 1)
        pts.append((x, y))
    rows = [[Fraction(1), x, y, x * y] for x, y in pts]
    from tropcount.exactmath import _row_echelon

    pivots, _ = _row_echelon([r[:] for r in rows])
    assert len(pivots) == 3  # one-dimensional kernel: exactly one (1,1)-curve


def test_count_contributions_are_interior_and_on_target():
    prob = p2_problem(2, 0)
    res = count(prob)
    assert res.seed_echo == 0
    assert res.total == sum(c.multiplicity for c in res.contributions)
    for c in res.contributions:
        stab_cone = moduli_cone(c.type)
        # rebuild the stabilized map from the solved one by dropping carriers
        for label in prob.gamma.trivial_legs:
            ep = ev_trop(c.map, label)
            assert ep.coset == prob.target(label)


def test_nongeneric_seed_detected():
    # seed 2 puts a solved edge length at exactly zero for degree 3; use a
    # cheap handmade collision instead: a target on a wall of the fan
    gamma = p2_gamma(1)
    cfg = generate_constraints(gamma, None, 0)
    from tropcount.counting import Constraint, ConstraintConfig

    bad = ConstraintConfig(
        (
            Constraint(4, None, (Fraction(1), Fraction(0))),  # on the ray u1
            cfg.constraints[1],
        ),
        0,
        32,
    )
    with pytest.raises(NonGenericError):
        count(CountProblem(P2, gamma, bad))


def test_seed_and_thread_determinism():
    prob = p2_problem(2, 1)
    r1 = count(prob, threads=1)
    r2 = count(prob, threads=2)
    r3 = count(prob, threads=1)
    assert r1.total == r2.total == r3.total
    assert [c.key for c in r1.contributions] == [c.key for c in r2.contributions]
    assert [c.key for c in r1.contributions] == [c.key for c in r3.contributions]


def test_subspace_constraint_line_through_two_points():
    # degree 1 with two point constraints and one subtorus-line constraint:
    # the line through the two points is unique and meets the translate once
    gamma = DiscreteData(P2, p2_gamma(1).contact_legs, (4, 5, 6))
    subspaces = {4: None, 5: None, 6: IntMatrix.from_rows([[1], [1]])}
    cfg = generate_constraints(gamma, subspaces, 9)
    prob = CountProblem(P2, gamma, cfg)
    res = count(prob)
    assert res.total == 1


def test_count_requires_marked_point():
    from tropcount.counting import ConstraintConfig

    gamma = DiscreteData(P2, p2_gamma(1).contact_legs, ())
    with pytest.raises(ValueError):
        CountProblem(P2, gamma, ConstraintConfig((), 0, 32))


def test_contributions_interior_to_their_moduli_cone():
    prob = p2_problem(2, 0)
    for c in count(prob).contributions:
        assert contains(moduli_cone(c.map.type), c.map) == "interior"
