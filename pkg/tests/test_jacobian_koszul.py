import random
import pytest
from hypothesis import given, settings, strategies as st

from corpus import random_simplices, reeve
from loghodge import _linalg as la
from loghodge.jacobian_koszul import (
    DegenerateEquation, LaurentPolynomial, barycentric, box_points, fermat_equation,
    generic_equation, intro_formula_dims, jacobian_dims_linear, koszul_cohomology_dims,
    koszul_complex, koszul_report, r0_dims_box, r1_dims_linear, r_dims_coker,
)
from loghodge.lattice_core import LatticePolytope, dilate, faces, lattice_points, relint_points

TRI5 = LatticePolytope([(0, 0), (5, 0), (0, 5)])
UNIT2 = LatticePolytope([(0, 0), (1, 0), (0, 1)])
UNIT3 = LatticePolytope([(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)])
SEG2 = LatticePolytope([(0,), (2,)])
SEG5 = LatticePolytope([(0,), (5,)])
SQUARE = LatticePolytope([(0, 0), (2, 0), (0, 2), (2, 2)])


def sparse_composition_is_zero(first, second):
    by_col = {}
    for (k, i), w in second.items():
        by_col.setdefault(i, []).append((k, w))
    acc = {}
    for (i, j), v in first.items():
        for k, w in by_col.get(i, ()):
            acc[(k, j)] = acc.get((k, j), 0) + w * v
    return not any(acc.values())


@st.composite
def small_simplices(draw, max_coord=3):
    d = draw(st.integers(1, 3))
    coords = st.integers(0, max_coord if d < 3 else 2)
    pts = draw(st.lists(st.tuples(*[coords] * d), min_size=d + 1, max_size=d + 1, unique=True))
    vol = la.det([[a - b for a, b in zip(p, pts[0])] for p in pts[1:]])
    if vol == 0:
        pts = [tuple(int(i == j) for j in range(d)) for i in range(d)] + [(0,) * d]
    return LatticePolytope(pts)


class TestBoxPoints:
    def test_examples(self):
        assert len(box_points(TRI5, 1)) == 18
        assert set(box_points(TRI5, 1)) == set(lattice_points(TRI5)) - set(TRI5.vertices)
        assert len(box_points(TRI5, 2)) == 6
        assert box_points(TRI5, 3) == []

    def test_level_two_reflects_interior(self):
        # m -> (sum of vertices) - m carries box(2) onto the interior points
        total = tuple(map(sum, zip(*TRI5.vertices)))
        flipped = {tuple(a - b for a, b in zip(total, m)) for m in box_points(TRI5, 2)}
        assert flipped == set(relint_points(TRI5))

    def test_barycentric_coordinates_in_box(self):
        for l in range(3):
            for p in box_points(TRI5, l):
                lam = barycentric(TRI5, p, l)
                assert all(0 <= x < 1 for x in lam) and sum(lam) == l

    def test_non_simplex_rejected(self):
        with pytest.raises(ValueError):
            box_points(SQUARE, 1)
        with pytest.raises(ValueError):
            r0_dims_box(SQUARE, 2)

    @pytest.mark.parametrize("P, dims", [(TRI5, (1, 18, 6, 0)), (SEG5, (1, 4, 0)), (UNIT2, (1, 0, 0))])
    def test_r0_box(self, P, dims):
        assert r0_dims_box(P, len(dims) - 1).dims == dims

    @given(small_simplices())
    @settings(max_examples=30, deadline=None)
    def test_empty_beyond_vertex_count(self, D):
        assert all(box_points(D, l) == [] for l in range(D.dim + 1, D.dim + 3))

    def test_face_compatibility(self):
        for D in random_simplices()[:12]:
            for k in range(D.dim + 1):
                for _, F in faces(D, k):
                    for l in range(D.dim + 1):
                        lF = dilate(F, l)
                        inside = {p for p in box_points(D, l) if lF.contains(p)}
                        assert inside == set(box_points(F, l))

    def test_disjoint_union_over_faces(self):
        # each box point lies in the relative interior of exactly one face;
        # level 0 holds only the origin, which belongs to the empty face
        for D in random_simplices()[:12]:
            for l in range(1, D.dim + 1):
                total = 0
                for k in range(1, D.dim + 1):
                    for _, F in faces(D, k):
                        interior = set(relint_points(dilate(F, l)))
                        total += sum(1 for p in box_points(F, l) if p in interior)
                assert total == len(box_points(D, l))


class TestEquations:
    def test_unit_simplex_is_fermat(self):
        f = generic_equation(UNIT2, seed=3)
        assert f.as_dict() == fermat_equation(UNIT2).as_dict()

    def test_segment_shape(self):
        f = generic_equation(SEG2, seed=5).as_dict()
        assert set(f) == {(0,), (1,), (2,)} and f[(0,)] == f[(2,)] == 1 and f[(1,)] != 0

    def test_seeded(self):
        assert generic_equation(TRI5, seed=7) == generic_equation(TRI5, seed=7)
        assert len(generic_equation(TRI5, seed=7).terms) == 21
        assert generic_equation(TRI5, seed=7) != generic_equation(TRI5, seed=8)

    def test_vertex_coefficients_required(self):
        with pytest.raises(ValueError):
            LaurentPolynomial.from_dict({(0,): 1, (1,): 3}, SEG2)
        with pytest.raises(ValueError):
            LaurentPolynomial.from_dict({(0,): 1, (2,): 1, (3,): 1}, SEG2)

    def test_degenerate_equation_exceeds_box_count(self):
        # (1 + z)^2 has a double root: every element of the Jacobian ideal is
        # divisible by 1 + z, so degree 2 survives although no box point does
        sq = LaurentPolynomial.from_dict({(0,): 1, (1,): 2, (2,): 1}, SEG2)
        assert jacobian_dims_linear(SEG2, sq, 2).dims[2] > len(box_points(SEG2, 2)) == 0


class TestLinearRoutes:
    def test_jacobian_examples(self):
        assert jacobian_dims_linear(TRI5, generic_equation(TRI5), 3).dims == (1, 18, 6, 0)
        assert jacobian_dims_linear(SEG5, fermat_equation(SEG5), 2).dims == (1, 4, 0)
        assert jacobian_dims_linear(UNIT2, fermat_equation(UNIT2), 2).dims == (1, 0, 0)

    def test_r1_examples(self):
        R = reeve(2)
        assert r1_dims_linear(R, generic_equation(R), 3).dims == (0, 0, 1, 0)
        assert r1_dims_linear(UNIT2, fermat_equation(UNIT2), 2).dims == (0, 0, 0)
        assert r1_dims_linear(TRI5, generic_equation(TRI5), 1).dims[1] == 6

    def test_coker_examples(self):
        assert r_dims_coker(TRI5, generic_equation(TRI5), 3).dims == (1, 18, 6, 0)
        assert r_dims_coker(SEG2, generic_equation(SEG2), 2).dims == (1, 1, 0)
        point = LatticePolytope([(0, 0)])
        assert r_dims_coker(point, fermat_equation(point), 3).dims == (1, 0, 0, 0)

    def test_intro_formula_examples(self):
        assert intro_formula_dims(TRI5, 3).dims == (1, 18, 6, 0)
        assert intro_formula_dims(SEG5, 2).dims == (1, 4, 0)
        assert intro_formula_dims(UNIT2, 2).dims == (1, 0, 0)

    def test_non_simplex_linear_routes(self):
        f = generic_equation(SQUARE, seed=1)
        assert jacobian_dims_linear(SQUARE, f, 3).dims == r_dims_coker(SQUARE, f, 3).dims

    @given(small_simplices(), st.integers(0, 1000))
    @settings(max_examples=25, deadline=None)
    def test_oracle_triangle(self, D, seed):
        L = D.dim + 1
        f = generic_equation(D, seed=seed)
        box = r0_dims_box(D, L).dims
        assert jacobian_dims_linear(D, f, L).dims == box
        assert r_dims_coker(D, f, L).dims == box
        assert intro_formula_dims(D, L).dims == box

    @given(small_simplices(max_coord=2), st.integers(0, 1000), st.floats(0, 1))
    @settings(max_examples=25, deadline=None)
    def test_box_count_is_a_lower_bound(self, D, seed, zero_rate):
        # any coefficients, including degenerate ones, as long as vertices are nonzero
        rng = random.Random(seed)
        coeffs = {m: (1 if m in D.vertices else (0 if rng.random() < zero_rate else rng.randint(-3, 3)))
                  for m in lattice_points(D)}
        f = LaurentPolynomial.from_dict(coeffs, D)
        L = D.dim + 1
        lin = jacobian_dims_linear(D, f, L).dims
        box = r0_dims_box(D, L).dims
        assert all(a >= b for a, b in zip(lin, box))

    @pytest.mark.parametrize("t", [2, 3, 4])
    def test_interior_part_of_reeve(self, t):
        R = reeve(t)
        f = generic_equation(R, seed=t)
        r1 = r1_dims_linear(R, f, 4).dims
        r0 = jacobian_dims_linear(R, f, 4).dims
        assert r1[1:] == r0[1:]
        assert all(x == 0 for k, x in enumerate(r1) if k != 2)


class TestKoszul:
    def test_segment_examples(self):
        f = generic_equation(SEG2, seed=0)
        rep = koszul_report(SEG2, f, 0, 0)
        assert rep.term_dims == (1, 6, 5) and rep.cohomology_dims == (0, 0, 0) and rep.verdict
        rep = koszul_report(SEG2, f, -1, 0)
        assert rep.term_dims == (0, 2, 3) and rep.cohomology_dims == (0, 0, 1) and rep.verdict
        rep = koszul_report(SEG2, f, -1, 1)
        assert rep.cohomology_dims == (0, 0, 1, 0) and rep.expected == (0, 0, 1, 0)

    def test_triangle(self):
        rep = koszul_report(TRI5, generic_equation(TRI5), -1, 0)
        assert rep.cohomology_dims == (0, 0, 0, 6) and rep.verdict

    def test_unit_simplex_vanishing(self):
        f = fermat_equation(UNIT3)
        for m in range(-3, 2):
            assert koszul_report(UNIT3, f, m, 0).cohomology_dims[1:] == (0,) * 4

    def test_zero_differentials_give_term_dims(self):
        cx = koszul_complex(SEG2, generic_equation(SEG2), -1, 0)
        empty = type(cx)(cx.n, cx.twist, cx.extra_rank, cx.bases, [{} for _ in cx.differentials])
        assert koszul_cohomology_dims(empty) == cx.term_dims

    @pytest.mark.parametrize("b", [0, 1, 2])
    def test_composition_and_euler(self, b):
        D = LatticePolytope([(0, 0), (2, 1), (1, 3)])
        f = generic_equation(D, seed=2)
        for m in range(-3, 2):
            cx = koszul_complex(D, f, m, b)
            for l in range(len(cx.differentials) - 1):
                assert sparse_composition_is_zero(cx.differentials[l], cx.differentials[l + 1])
            rep = koszul_report(D, f, m, b)
            alt = lambda xs: sum((-1) ** i * x for i, x in enumerate(xs))
            assert alt(rep.term_dims) == alt(rep.cohomology_dims)
            assert rep.verdict

    def test_support_violation(self):
        f = generic_equation(TRI5)
        with pytest.raises(ValueError):
            koszul_complex(UNIT2, f, 0, 0)


class TestComplexRanks:
    @given(st.integers(0, 10 ** 6), st.integers(1, 5), st.integers(1, 5), st.integers(1, 5))
    @settings(max_examples=40, deadline=None)
    def test_matches_exact_rank(self, seed, a, b, c):
        rng = random.Random(seed)
        C = [[rng.randint(-2, 2) for _ in range(b)] for _ in range(c)]
        ker = la.nullspace(C, b)
        # columns of B are random combinations of the kernel of C
        coef = [[rng.randint(-2, 2) for _ in ker] for _ in range(a)]
        B = [[sum(x * k[i] for x, k in zip(coef[j], ker)) for j in range(a)] for i in range(b)]
        dB = {(i, j): x for i, row in enumerate(B) for j, x in enumerate(row) if x}
        dC = {(i, j): x for i, row in enumerate(C) for j, x in enumerate(row) if x}
        assert la.complex_ranks([a, b, c], [dB, dC]) == [la.rank(B), la.rank(C)]

    def test_rejects_non_complex(self):
        with pytest.raises(ValueError):
            la.complex_ranks([1, 1, 1], [{(0, 0): 1}, {(0, 0): 1}])


def test_twist_range_outputs_are_deterministic():
    f = generic_equation(TRI5, seed=4)
    a = [koszul_report(TRI5, f, m, 1) for m in range(-3, 2)]
    b = [koszul_report(TRI5, f, m, 1) for m in range(-3, 2)]
    assert a == b


def test_corpus_generator_is_seeded():
    assert [D.vertices for D in random_simplices()] == [D.vertices for D in random_simplices()]
    assert all(max(abs(x) for v in D.vertices for x in v) <= 6 for D in random_simplices())
    assert len({D.dim for D in random_simplices()}) == 3
