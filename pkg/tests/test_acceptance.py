"""Acceptance criteria, one test each.

Every test records a ``criterion N: PASS|FAIL ...`` line (shown in the
terminal summary) before asserting, so a failing criterion still reports
what it measured.
"""
import random
import time
from itertools import permutations

import pytest

import conftest
from corpus import random_simplices, reeve, triangles
from loghodge import _linalg as la
from loghodge.hodge import (
    affine_hodge, e1_page, e2_page, flags, log_hodge, mirror_check, twisted_closed_form,
    twisted_sectors,
)
from loghodge.jacobian_koszul import (
    box_points, generic_equation, intro_formula_dims, jacobian_dims_linear, koszul_report,
    r0_dims_box, r1_dims_linear, r_dims_coker,
)
from loghodge.lattice_core import LatticePolytope, bend_data, is_standard, normal_fan, same_up_to_translation
from loghodge.tropical_model import (
    BendData, build_fermat, build_reflexive_boundary, inner_monodromy_polytope, legendre_dual,
    monodromy_operator, outer_monodromy_polytope, phi_change_of_vertex, reconstruct_from_bends,
)
from test_hodge import compose_is_zero

QUINTIC_AFFINE = ((1, 0, 0, 1), (0, 1, 1, 0), (0, 1, 1, 0), (1, 0, 0, 1))


def record(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def quintic5():
    return build_fermat(5)


def test_criterion_01_quintic_affine():
    start = time.perf_counter()
    table = affine_hodge(build_fermat(5)).table
    elapsed = time.perf_counter() - start
    record(1, table == QUINTIC_AFFINE and elapsed < 60, f"affine={table} time={elapsed:.1f}s (limit 60s)")


def test_criterion_02_quintic_log():
    start = time.perf_counter()
    t = log_hodge(build_fermat(5))
    elapsed = time.perf_counter() - start
    ok = t[2][1] == 101 and t[1][2] == 101 and t[1][1] == 1 and elapsed < 300
    record(2, ok, f"h21={t[2][1]} h12={t[1][2]} h11={t[1][1]} time={elapsed:.1f}s (limit 300s)")


def test_criterion_03_twisted_closed_form(quintic5):
    quartic = build_fermat(4)
    ts5, cf5 = twisted_sectors(quintic5).table, twisted_closed_form(quintic5).table
    ts4, cf4 = twisted_sectors(quartic).table, twisted_closed_form(quartic).table
    want5 = tuple(tuple(100 if (p, q) in ((1, 2), (2, 1)) else 0 for q in range(4)) for p in range(4))
    want4 = ((0, 0, 0), (0, 18, 0), (0, 0, 0))
    ok = ts5 == cf5 == want5 and ts4 == cf4 == want4
    record(3, ok, f"fermat5 twisted={ts5} closed={cf5}; fermat4 twisted={ts4} closed={cf4}")


def test_criterion_04_quartic_k3():
    start = time.perf_counter()
    t = log_hodge(build_fermat(4))
    elapsed = time.perf_counter() - start
    euler = sum((-1) ** (p + q) * t[p][q] for p in range(3) for q in range(3))
    ok = t[1][1] == 20 and euler == 24 and elapsed < 30
    record(4, ok, f"h11={t[1][1]} euler={euler} time={elapsed:.1f}s (limit 30s)")


def test_criterion_05_mirror(quintic5):
    rep = mirror_check(quintic5)
    dual = legendre_dual(quintic5)
    ts = twisted_sectors(dual).table
    cf = twisted_closed_form(dual).table
    zero = all(x == 0 for row in ts for x in row) and ts == cf
    record(5, rep.verdict and zero, f"mismatches={list(rep.mismatches)} dual affine={rep.dual_table.table} "
                                    f"dual twisted={ts}")


def test_criterion_06_jacobian_oracles():
    corpus = random_simplices()
    start = time.perf_counter()
    bad = []
    for i, D in enumerate(corpus):
        L = D.dim + 1
        f = generic_equation(D, seed=i)
        dims = {"box": r0_dims_box(D, L).dims, "linear": jacobian_dims_linear(D, f, L).dims,
                "coker": r_dims_coker(D, f, L).dims, "intro": intro_formula_dims(D, L).dims}
        if len(set(map(tuple, dims.values()))) != 1:
            bad.append((i, D.vertices, dims))
    elapsed = time.perf_counter() - start
    ok = len(corpus) >= 25 and not bad and elapsed < 120
    record(6, ok, f"simplices={len(corpus)} disagreements={bad} time={elapsed:.1f}s (limit 120s)")


def test_criterion_07_koszul():
    corpus = random_simplices()
    start = time.perf_counter()
    bad, count = [], 0
    for i, D in enumerate(corpus):
        f = generic_equation(D, seed=i)
        n = D.dim + 1
        R = r_dims_coker(D, f, n + 4)
        for b in (0, 1, 2):
            for m in range(-n, 2):
                rep = koszul_report(D, f, m, b, R)
                count += 1
                if not rep.verdict:
                    bad.append((i, b, m, rep.cohomology_dims, rep.expected))
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed < 300
    record(7, ok, f"complexes={count} failures={bad} time={elapsed:.1f}s (limit 300s)")


def _edge_det(D):
    v0 = D.vertices[0]
    rows = [[a - b for a, b in zip(v, v0)] for v in D.vertices[1:]]
    return abs(la.det(rows))


def test_criterion_08_standard_equivalence():
    corpus = triangles(4) + [reeve(t) for t in range(1, 5)]
    bad = []
    for D in corpus:
        a = _edge_det(D) == 1
        b = is_standard(D)
        c = all(not box_points(D, l) for l in range(1, D.dim + 2))
        if not a == b == c:
            bad.append((D.vertices, a, b, c))
    record(8, not bad, f"simplices={len(corpus)} disagreements={bad}")


def test_criterion_09_reeve():
    bad = []
    for t in (2, 3, 4):
        D = reeve(t)
        L = D.dim + 1
        f = generic_equation(D, seed=t)
        r0 = jacobian_dims_linear(D, f, L).dims
        r1 = r1_dims_linear(D, f, L).dims
        if any(r1[l] != r0[l] for l in range(1, L + 1)) or any(r1[l] for l in range(L + 1) if l != 2):
            bad.append((t, r0, r1))
    record(9, not bad, f"t in (2,3,4) failures={bad}")


def _built_models():
    cube = LatticePolytope([(a, b, c) for a in (1, -1) for b in (1, -1) for c in (1, -1)])
    octa = LatticePolytope([(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)])
    square = LatticePolytope([(1, 0), (-1, 0), (0, 1), (0, -1)])
    out = {f"fermat{d}": build_fermat(d) for d in (3, 4, 5)}
    out.update(octahedron=build_reflexive_boundary(octa), cube=build_reflexive_boundary(cube),
               square=build_reflexive_boundary(square))
    for name in list(out):
        out[name + "_dual"] = legendre_dual(out[name])
    return out


def test_criterion_10_tropical_round_trips(quintic5):
    models = _built_models()
    corpus = random_simplices() + [reeve(t) for t in range(1, 5)] + triangles(4)
    for m in models.values():
        if m.dim_B < 2:
            continue
        for r in m.cells_of_dim(m.dim_B - 1):
            corpus.append(inner_monodromy_polytope(m, r))
        for w in m.cells_of_dim(1):
            corpus.append(outer_monodromy_polytope(m, w))
    trips = [P for P in corpus if P.dim >= 1]
    bad_trip = [P.vertices for P in trips
                if not same_up_to_translation(reconstruct_from_bends(BendData(normal_fan(P), bend_data(P))),
                                              LatticePolytope(P._local_vertices))]

    bad_kappa = []
    for name, m in models.items():
        n = m.dim_B
        for (w, r), k in m.kappa.items():
            if k != m.a[w] * m.a_check.get(r, 0):
                bad_kappa.append((name, w, r, "factorization"))
            for s in m.cofaces(r, n):
                op = monodromy_operator(m, w, r, s)
                d, dd = op.direction, op.dual
                shear = tuple(tuple(int(i == j) + k * d[i] * dd[j] for j in range(n)) for i in range(n))
                if op.matrix != shear or sum(x * y for x, y in zip(d, dd)):
                    bad_kappa.append((name, w, r, s, "shear"))

    bad_phi, checked = [], 0
    m = quintic5
    for chain in flags(m, 2):
        vs = m.vertex_ids(chain[0])
        sigmas = m.cofaces(chain[-1], m.dim_B)
        for v, w in permutations(vs, 2):
            mats = {phi_change_of_vertex(m, chain, v, w, s).ambient_matrix for s in sigmas}
            checked += 1
            if len(mats) != 1:
                bad_phi.append((chain, v, w, "h-dependent"))
        for u, v, w in permutations(vs, 3):
            for s in sigmas:
                uv = phi_change_of_vertex(m, chain, u, v, s).chart_matrix
                vw = phi_change_of_vertex(m, chain, v, w, s).chart_matrix
                uw = phi_change_of_vertex(m, chain, u, w, s).chart_matrix
                prod = tuple(tuple(sum(vw[i][k] * uv[k][j] for k in range(len(uv))) for j in range(len(uv[0])))
                             for i in range(len(vw)))
                if prod != uw:
                    bad_phi.append((chain, u, v, w, s, "composition"))
    ok = not bad_trip and not bad_kappa and not bad_phi
    record(10, ok, f"round trips={len(trips)} bad={len(bad_trip)}; models={len(models)} kappa/shear bad={bad_kappa}; "
                   f"phi pairs={checked} bad={len(bad_phi)}")


def test_criterion_11_structure(quintic5):
    models = {"fermat3": build_fermat(3), "fermat4": build_fermat(4), "fermat5": quintic5}
    bad = []
    for name, m in models.items():
        n = m.dim_B
        af = affine_hodge(m)
        for r in range(n + 1):
            page = e1_page(m, r)
            for (p, q), d in page.differentials.items():
                if (p + 1, q) in page.differentials and not compose_is_zero(d, page.differentials[(p + 1, q)]):
                    bad.append((name, r, p, q, "d1^2"))
            e2 = e2_page(m, r)
            if tuple(e2.dim(p, 0) for p in range(n + 1)) != af[r]:
                bad.append((name, r, "bottom row"))

    rng = random.Random(11)
    for name in ("fermat4", "fermat5"):
        m = models[name]
        n = m.dim_B
        base = [(e1_page(m, r).entries, e2_page(m, r).entries) for r in range(n + 1)]
        orders = [tuple(reversed(m.vertex_order)), tuple(rng.sample(m.vertex_order, len(m.vertex_order)))]
        for order in orders:
            pm = m.with_vertex_order(order)
            got = [(e1_page(pm, r).entries, e2_page(pm, r).entries) for r in range(n + 1)]
            if got != base:
                bad.append((name, order, "vertex order"))
    record(11, not bad, f"models={list(models)} permuted orders=2 per model failures={bad}")


def test_criterion_12_excluded():
    line = "criterion 12: EXCLUDED  not computable at desk scale; covered only by the property suites"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    pytest.skip("excluded by definition")
