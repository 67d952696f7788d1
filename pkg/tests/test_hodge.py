from fractions import Fraction
from math import comb

import flint
import pytest
from hypothesis import given, settings, strategies as st

from loghodge.hodge import (
    HodgeTable, HypothesisError, affine_hodge, d1, e1_page, e2_page, flags, invariant_sections,
    log_hodge, log_hypotheses, mirror_check, quotient_sections, render_diamond, twisted_closed_form,
    twisted_sectors, wedge_of_invariants,
)
from loghodge.tropical_model import build_abstract, build_fermat, model_to_json


def _q(x):
    x = Fraction(x)
    return flint.fmpq(x.numerator, x.denominator)


def compose_is_zero(a, b):
    """b @ a == 0 for matrices given as lists of rows (rows = target)."""
    if not a or not a[0] or not b or not b[0]:
        return True
    A = flint.fmpq_mat(len(a), len(a[0]), [_q(x) for row in a for x in row])
    B = flint.fmpq_mat(len(b), len(b[0]), [_q(x) for row in b for x in row])
    C = B * A
    return all(C[i, j] == 0 for i in range(C.nrows()) for j in range(C.ncols()))


def trivial_abstract(model):
    cells = [{"id": c.id, "dim": c.dim, "vertices": [list(model.coords(v)) for v in c.vertices],
              "faces": sorted(model.faces_of(c.id))} for c in model.cells]
    return build_abstract(cells, {})


class TestSections:
    @pytest.mark.parametrize("r, dim", [(0, 1), (1, 2), (2, 1), (3, 1)])
    def test_edge_invariants(self, quintic, r, dim):
        w = quintic.cells_of_dim(1)[0]
        assert invariant_sections(quintic, (w,), r).dim == dim

    @pytest.mark.parametrize("r", range(4))
    def test_vertex_outside_discriminant_is_full(self, quintic, r):
        v = quintic.cells_of_dim(0)[0]
        assert invariant_sections(quintic, (v,), r).dim == comb(3, r)

    def test_wedge_and_quotient_on_edge(self, quintic):
        w = quintic.cells_of_dim(1)[0]
        assert [wedge_of_invariants(quintic, (w,), r).dim for r in range(4)] == [1, 2, 1, 0]
        assert [quotient_sections(quintic, (w,), r).dim for r in range(4)] == [0, 0, 0, 1]

    @pytest.mark.parametrize("name", ["quartic", "quintic"])
    def test_algorithms_agree(self, request, name):
        m = request.getfixturevalue(name)
        for chain in flags(m):
            for r in range(m.dim_B + 1):
                a = invariant_sections(m, chain, r, "A")
                b = invariant_sections(m, chain, r, "B")
                assert a.space == b.space

    def test_unknown_algorithm(self, quartic):
        with pytest.raises(ValueError):
            invariant_sections(quartic, (0,), 1, "C")

    def test_restriction_along_longer_flags(self, quartic):
        # sections over a flag contain those over any flag extending it at the top
        for chain in flags(quartic, 2):
            for r in range(3):
                big = invariant_sections(quartic, chain[:1], r).dim
                assert invariant_sections(quartic, chain, r).dim >= big


class TestSpectralSequence:
    @pytest.mark.parametrize("name", ["quartic", "quintic", "octahedron"])
    def test_differential_squares_to_zero(self, request, name):
        m = request.getfixturevalue(name)
        n = m.dim_B
        for r in range(n + 1):
            page = e1_page(m, r)
            for (p, q), d in page.differentials.items():
                if (p + 1, q) in page.differentials:
                    assert compose_is_zero(d, page.differentials[(p + 1, q)])

    def test_differential_shapes(self, quartic):
        page = e1_page(quartic, 1)
        for (p, q), d in page.differentials.items():
            if page.dim(p, q) and page.dim(p + 1, q):
                assert len(d) == page.dim(p + 1, q) and len(d[0]) == page.dim(p, q)

    def test_single_differential(self, quartic):
        assert d1(quartic, 1, 0, 0) == e1_page(quartic, 1).differentials[(0, 0)]

    @pytest.mark.parametrize("r, entries", [
        (1, {(0, 1): 80, (0, 2): 60, (1, 1): 120, (0, 0): 60, (1, 0): 420}),
        (2, {(0, 1): 220, (1, 1): 120, (2, 1): 0}),
    ])
    def test_quintic_first_page(self, quintic, r, entries):
        page = e1_page(quintic, r)
        assert {k: page.dim(*k) for k in entries} == entries

    def test_quartic_first_page(self, quartic):
        page = e1_page(quartic, 1)
        assert [page.dim(p, 0) for p in range(3)] == [22, 72, 48]
        assert page.dim(0, 1) == 18

    @pytest.mark.parametrize("name", ["cubic", "quartic", "octahedron"])
    def test_euler_characteristic_of_rows(self, request, name):
        m = request.getfixturevalue(name)
        for r in range(m.dim_B + 1):
            e1, e2 = e1_page(m, r), e2_page(m, r)
            for q in range(m.dim_B + 1):
                chi = lambda pg: sum((-1) ** p * pg.dim(p, q) for p in range(m.dim_B + 1))
                assert chi(e1) == chi(e2)

    @pytest.mark.parametrize("name", ["cubic", "quartic", "octahedron"])
    def test_bottom_row_is_affine(self, request, name):
        m = request.getfixturevalue(name)
        af = affine_hodge(m)
        for r in range(m.dim_B + 1):
            e2 = e2_page(m, r)
            assert tuple(e2.dim(q, 0) for q in range(m.dim_B + 1)) == af[r]

    def test_abstract_model_rejected(self, quartic):
        from loghodge.tropical_model import ModelError
        with pytest.raises(ModelError):
            e1_page(trivial_abstract(quartic), 1)


class TestTables:
    def test_cubic(self, cubic):
        assert affine_hodge(cubic).table == ((1, 1), (1, 1))
        assert log_hodge(cubic).table == ((1, 1), (1, 1))
        assert twisted_closed_form(cubic).table == ((0, 0), (0, 0))

    def test_quartic(self, quartic):
        assert affine_hodge(quartic).table == ((1, 0, 1), (0, 2, 0), (1, 0, 1))
        assert log_hodge(quartic).table == ((1, 0, 1), (0, 20, 0), (1, 0, 1))
        assert twisted_sectors(quartic) == twisted_closed_form(quartic)
        assert twisted_sectors(quartic).table[1][1] == 18

    def test_octahedron(self, octahedron):
        lg = log_hodge(octahedron)
        assert lg[1][1] == 20
        assert twisted_sectors(octahedron).table == twisted_closed_form(octahedron).table

    @pytest.mark.parametrize("name", ["cubic", "quartic", "octahedron"])
    def test_serre_symmetry(self, request, name):
        t = log_hodge(request.getfixturevalue(name))
        n = t.n
        assert all(t[p][q] == t[n - p][n - q] for p in range(n + 1) for q in range(n + 1))

    @pytest.mark.parametrize("name", ["cubic", "quartic", "octahedron"])
    def test_mirror(self, request, name):
        rep = mirror_check(request.getfixturevalue(name))
        assert rep.verdict and rep.mismatches == ()

    @given(st.permutations(list(range(4))))
    @settings(max_examples=4, deadline=None)
    def test_vertex_order_invariance(self, perm):
        quartic = build_fermat(4)
        order = tuple(quartic.vertex_order[i] for i in perm)
        m = quartic.with_vertex_order(order)
        assert affine_hodge(m) == affine_hodge(quartic)
        assert log_hodge(m) == log_hodge(quartic)


class TestHypotheses:
    def test_satisfied(self, cubic, quartic, quintic, octahedron):
        for m in (cubic, quartic, quintic, octahedron):
            assert log_hypotheses(m) == []

    def test_abstract(self, quartic):
        assert log_hypotheses(trivial_abstract(quartic)) == ["embedded_model"]

    def test_four_dimensional_fermat(self):
        m = build_fermat(6)
        assert log_hypotheses(m) == ["elementary_simplices"]
        with pytest.raises(HypothesisError) as err:
            log_hodge(m)
        assert err.value.conditions == ("elementary_simplices",)

    def test_dimension_bound(self):
        with pytest.raises(HypothesisError) as err:
            twisted_closed_form(build_fermat(7))
        assert "dimension_bound" in err.value.conditions


class TestRendering:
    def test_diamond(self, quartic):
        text = render_diamond(log_hodge(quartic))
        lines = text.splitlines()
        assert len(lines) == 5
        assert lines[2].split() == ["1", "20", "1"]
        assert lines[0].strip() == "1" and lines[-1].strip() == "1"

    def test_json(self):
        t = HodgeTable(1, ((1, 2), (3, 4)), "log")
        assert t.as_json() == {"kind": "log", "dim": 1, "table": [[1, 2], [3, 4]]}

    def test_model_json_is_plain(self, quartic):
        import json
        json.dumps(model_to_json(quartic))
