import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tropcount.exactmath import (
    IntMatrix,
    RankDeficientError,
    determinant,
    integer_kernel,
    lattice_index,
    lattice_quotient,
    primitive_vector,
    rank,
    rational_from_string,
    rational_to_string,
    saturate_columns,
    smith_normal_form,
    solve_rational,
)


def cofactor_det(rows):
    """Independent determinant oracle by cofactor expansion."""
    n = len(rows)
    if n == 0:
        return 1
    if n == 1:
        return rows[0][0]
    total = 0
    for j in range(n):
        minor = [r[:j] + r[j + 1 :] for r in rows[1:]]
        sign = -1 if j % 2 else 1
        total += sign * rows[0][j] * cofactor_det(minor)
    return total


def reduction_oracle_diagonal(rows):
    """Brute-force elementary row/column reduction, no transform tracking."""
    m = [list(r) for r in rows]
    nr, nc = len(m), len(m[0])
    t = 0
    while t < min(nr, nc):
        nz = [(abs(m[i][j]), i, j) for i in range(t, nr) for j in range(t, nc) if m[i][j]]
        if not nz:
            break
        _, pi, pj = min(nz)
        m[t], m[pi] = m[pi], m[t]
        for row in m:
            row[t], row[pj] = row[pj], row[t]
        done = False
        while not done:
            done = True
            for i in range(t + 1, nr):
                if m[i][t]:
                    q = m[i][t] // m[t][t]
                    m[i] = [x - q * y for x, y in zip(m[i], m[t])]
                    if m[i][t]:
                        m[t], m[i] = m[i], m[t]
                        done = False
            for j in range(t + 1, nc):
                if m[t][j]:
                    q = m[t][j] // m[t][t]
                    for row in m:
                        row[j] -= q * row[t]
                    if m[t][j]:
                        for row in m:
                            row[t], row[j] = row[j], row[t]
                        done = False
            if done:
                bad = [(i, j) for i in range(t + 1, nr) for j in range(t + 1, nc) if m[i][j] % m[t][t]]
                if bad:
                    i = bad[0][0]
                    m[t] = [x + y for x, y in zip(m[t], m[i])]
                    done = False
        t += 1
    return tuple(abs(m[i][i]) for i in range(min(nr, nc)))


def check_snf(a: IntMatrix):
    snf = smith_normal_form(a)
    assert snf.left @ a @ snf.right == snf.diag
    assert abs(cofactor_det(snf.left.to_lists())) == 1
    assert abs(cofactor_det(snf.right.to_lists())) == 1
    diag = snf.diagonal()
    for i in range(a.rows):
        for j in range(a.cols):
            if i != j:
                assert snf.diag.at(i, j) == 0
    assert all(d >= 0 for d in diag)
    nonzero = [d for d in diag if d]
    assert list(diag[: len(nonzero)]) == nonzero, "zero entries must trail"
    for x, y in zip(nonzero, nonzero[1:]):
        assert y % x == 0
    return snf


def test_snf_identity():
    a = IntMatrix.identity(2)
    snf = check_snf(a)
    assert snf.diagonal() == (1, 1)
    assert snf.left == IntMatrix.identity(2)
    assert snf.right == IntMatrix.identity(2)


def test_snf_worked_example():
    a = IntMatrix.from_rows([[2, 4], [6, 8]])
    snf = check_snf(a)
    assert snf.diagonal() == (2, 4)
    assert snf.diagonal() == reduction_oracle_diagonal([[2, 4], [6, 8]])


def test_snf_zero_matrix():
    snf = check_snf(IntMatrix.from_rows([[0]]))
    assert snf.diagonal() == (0,)


def test_snf_matches_reduction_oracle_randomized():
    rng = random.Random(7)
    for _ in range(200):
        nr, nc = rng.randint(1, 4), rng.randint(1, 4)
        rows = [[rng.randint(-9, 9) for _ in range(nc)] for _ in range(nr)]
        snf = check_snf(IntMatrix.from_rows(rows))
        assert snf.diagonal() == reduction_oracle_diagonal(rows)


def test_lattice_index_examples():
    assert lattice_index(IntMatrix.identity(2)) == 1
    assert lattice_index(IntMatrix.from_rows([[2, 0], [0, 3]])) == 6
    assert lattice_index(IntMatrix.from_rows([[1, 0], [1, 2]])) == 2
    assert lattice_index(IntMatrix.from_rows([[1, 0], [1, 2]])) == abs(
        cofactor_det([[1, 0], [1, 2]])
    )


def test_lattice_index_rejects_rank_deficient():
    with pytest.raises(RankDeficientError):
        lattice_index(IntMatrix.from_rows([[1, 2], [2, 4]]))


def test_integer_kernel_examples():
    k = integer_kernel(IntMatrix.from_rows([[1, 1]]))
    assert k.cols == 1
    assert k.column(0) in {(1, -1), (-1, 1)}

    assert integer_kernel(IntMatrix.identity(2)).cols == 0

    k = integer_kernel(IntMatrix.from_rows([[2, -1, 0], [0, 1, -2]]))
    assert k.cols == 1
    assert k.column(0) in {(1, 2, 1), (-1, -2, -1)}
    # Oracle: small integer vectors solving A x = 0 are all multiples.
    sols = [
        (x, y, z)
        for x in range(-4, 5)
        for y in range(-4, 5)
        for z in range(-4, 5)
        if 2 * x - y == 0 and y - 2 * z == 0 and (x, y, z) != (0, 0, 0)
    ]
    v = k.column(0)
    assert all(x * v[1] == y * v[0] and y * v[2] == z * v[1] for x, y, z in sols)


@given(
    st.integers(1, 4),
    st.integers(1, 4),
    st.data(),
)
@settings(max_examples=150, deadline=None)
def test_kernel_is_saturated_and_annihilated(nr, nc, data):
    rows = [
        [data.draw(st.integers(-9, 9)) for _ in range(nc)] for _ in range(nr)
    ]
    a = IntMatrix.from_rows(rows)
    k = integer_kernel(a)
    if k.cols:
        prod = a @ k
        assert all(e == 0 for e in prod.entries)
        assert all(d == 1 for d in smith_normal_form(k).diagonal())
    assert rank(a) + k.cols == a.cols


def test_solve_rational_examples():
    sol = solve_rational(IntMatrix.identity(2), [Fraction(1, 2), Fraction(3)])
    assert sol == ((Fraction(1, 2), Fraction(3)), True)

    sol = solve_rational(IntMatrix.from_rows([[1, 1]]), [Fraction(0)])
    assert sol is not None and sol[1] is False
    assert sol[0][0] + sol[0][1] == 0

    assert solve_rational(IntMatrix.from_rows([[1, 0], [1, 0]]), [Fraction(0), Fraction(1)]) is None


@given(st.integers(1, 4), st.integers(1, 4), st.data())
@settings(max_examples=100, deadline=None)
def test_solve_rational_roundtrip(nr, nc, data):
    rows = [[data.draw(st.integers(-6, 6)) for _ in range(nc)] for _ in range(nr)]
    b = [Fraction(data.draw(st.integers(-6, 6)), data.draw(st.integers(1, 4))) for _ in range(nr)]
    a = IntMatrix.from_rows(rows)
    sol = solve_rational(a, b)
    if sol is not None:
        assert a.apply(list(sol[0])) == b


def test_determinant_matches_cofactor():
    rng = random.Random(12)
    for _ in range(100):
        n = rng.randint(1, 5)
        rows = [[rng.randint(-9, 9) for _ in range(n)] for _ in range(n)]
        assert determinant(IntMatrix.from_rows(rows)) == cofactor_det(rows)


def test_lattice_quotient_kills_span_and_is_onto():
    basis = IntMatrix.from_rows([[1], [1]])
    proj = lattice_quotient(basis)
    assert proj.rows == 1 and proj.cols == 2
    assert all(e == 0 for e in (proj @ basis).entries)
    assert all(d == 1 for d in smith_normal_form(proj).diagonal())


def test_saturate_columns():
    sat = saturate_columns(IntMatrix.from_rows([[2], [4]]))
    assert sat.cols == 1
    assert sat.column(0) in {(1, 2), (-1, -2)}


def test_primitive_vector():
    assert primitive_vector([2, -4, 6]) == (1, -2, 3)
    with pytest.raises(ValueError):
        primitive_vector([0, 0])


def test_rational_strings():
    assert rational_to_string(Fraction(3, 1)) == "3"
    assert rational_to_string(Fraction(-3, 7)) == "-3/7"
    assert rational_from_string("-3/7") == Fraction(-3, 7)
