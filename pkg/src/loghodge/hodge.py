"""Section spaces, the barycentric spectral sequence and Hodge tables.

For a strict flag e = (t_0 < ... < t_p) of cells the relevant data depend
only on the extremes: the inner polytope of t_0 and the outer polytope of
t_p (both trivial when e misses the discriminant).

Row q = 0 of the first page holds the monodromy invariant r-forms on the
star of e, written in the cotangent chart at the base vertex of t_0.  Rows
q > 0 hold box monomials of the outer polytope at level q tensored with a
quotient of exterior powers.  Those quotients are written chart-free in
(r+q+1)-forms on Q^{n+1}: the extra direction is the facet normal of a
maximal cell, which makes the change of base vertex the identity.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Optional

from . import _linalg as la
from .jacobian_koszul import box_points
from .lattice_core import (
    LatticePolytope, Subspace, ideal_degree_piece, intersect, is_elementary, is_simplex,
    relint_points, same_up_to_translation, span_of, subspace_sum, wedge_power,
)
from .tropical_model import (
    ModelError, TropicalModel, chart_at_vertex, cotangent_monodromy, cotransport,
    delta0_components, in_discriminant_by_chain, is_ht, legendre_dual,
)

__all__ = [
    "HypothesisError", "SectionSpace", "SpectralPage", "HodgeTable", "MirrorReport",
    "flags", "invariant_sections", "wedge_of_invariants", "quotient_sections",
    "e1_page", "d1", "e2_page", "log_hypotheses", "log_hodge", "affine_hodge",
    "twisted_sectors", "twisted_closed_form", "mirror_check", "render_diamond",
]


class HypothesisError(ValueError):
    """A precondition of a computation fails; ``conditions`` names them."""

    def __init__(self, conditions):
        self.conditions = tuple(conditions)
        super().__init__("hypothesis check failed: " + ", ".join(self.conditions))


@dataclass(frozen=True)
class SectionSpace:
    flag: tuple
    degree: int
    space: Subspace
    variant: str
    base: int
    sub: Optional[Subspace] = None   # quotient variant: the subspace divided out

    @property
    def dim(self) -> int:
        return self.space.dim - (self.sub.dim if self.sub is not None else 0)


@dataclass
class SpectralPage:
    r: int
    n: int
    entries: dict = field(default_factory=dict)          # (p, q) -> dimension
    differentials: dict = field(default_factory=dict)    # (p, q) -> matrix into (p+1, q)

    def dim(self, p, q) -> int:
        return self.entries.get((p, q), 0)


@dataclass(frozen=True)
class HodgeTable:
    n: int
    table: tuple
    kind: str

    def __getitem__(self, p):
        return self.table[p]

    def as_json(self) -> dict:
        return {"kind": self.kind, "dim": self.n, "table": [list(r) for r in self.table]}


@dataclass(frozen=True)
class MirrorReport:
    table: HodgeTable
    dual_table: HodgeTable
    mismatches: tuple

    @property
    def verdict(self) -> bool:
        return not self.mismatches


def _cache(model, key, make):
    store = model.__dict__.setdefault("_hodge_cache", {})
    if key not in store:
        store[key] = make()
    return store[key]


def flags(model: TropicalModel, length: Optional[int] = None) -> list:
    """Strict chains of cells, sorted; ``length`` = number of cells."""
    def build():
        out = {}
        frontier = [(c.id,) for c in model.cells]
        k = 1
        while frontier:
            out[k] = sorted(frontier)
            frontier = [ch + (d.id,) for ch in frontier for d in model.cells
                        if d.dim > model.dim(ch[-1]) and model.is_face(ch[-1], d.id)]
            k += 1
        return out
    table = _cache(model, "flags", build)
    if length is None:
        return [ch for k in sorted(table) for ch in table[k]]
    return table.get(length, [])


def _in_delta(model, chain):
    return _cache(model, ("in", chain[0], chain[-1]),
                  lambda: in_discriminant_by_chain(model, (chain[0], chain[-1]) if len(chain) > 1 else chain))


def _full(n, r):
    return Subspace(comb(n, r), [[int(i == j) for j in range(comb(n, r))] for i in range(comb(n, r))])


def _zero(n, r):
    return Subspace(comb(n, r), [])


# --- q = 0: invariant forms in the base chart ------------------------------------

def _chart_data(model, t0, tl):
    """(base vertex, perp of the inner polytope, tangent of the outer polytope) in the chart."""
    def make():
        v = model.base_vertex(t0)
        ch = chart_at_vertex(model, v)
        n = model.dim_B
        inner = model.delta(t0)
        tangents = [[sum(row[j] * x[j] for j in range(len(x))) for row in ch.proj]
                    for x in inner.vertices if any(x)]
        perp = Subspace(n, la.nullspace(tangents, n)) if tangents else _full(n, 1)
        outer = model.delta_check(tl)
        covs = [[sum(ch.section[j][k] * m[j] for j in range(len(m))) for k in range(n)]
                for m in outer.vertices if any(m)]
        return v, perp, span_of(covs, n)
    return _cache(model, ("chart", t0, tl), make)


def invariant_sections(model: TropicalModel, chain, r: int, algorithm: str = "A") -> SectionSpace:
    """Monodromy invariant r-forms on the star of the flag, in the base chart.

    ``A`` uses the closed form (wedge powers of the perp of the inner
    polytope plus the ideal of the top wedge of the outer tangent space);
    ``B`` intersects kernels of the local monodromies.
    """
    chain = tuple(chain)
    n = model.dim_B
    t0, tl = chain[0], chain[-1]
    v = model.base_vertex(t0)
    if not 0 <= r <= n:
        return SectionSpace(chain, r, _zero(n, r) if r >= 0 else Subspace(1, []), "invariants", v)
    if algorithm == "A":
        space = _cache(model, ("A", t0, tl, r), lambda: _sections_a(model, chain, r))
    elif algorithm == "B":
        space = _cache(model, ("B", t0, tl, r), lambda: _sections_b(model, chain, r))
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    return SectionSpace(chain, r, space, "invariants", v)


def _sections_a(model, chain, r):
    n = model.dim_B
    if not _in_delta(model, chain):
        return _full(n, r)
    _, perp, tan = _chart_data(model, chain[0], chain[-1])
    space = wedge_power(perp, r)
    if tan.dim <= r:
        space = subspace_sum(space, ideal_degree_piece(tan, _full(n, 1), tan.dim, r))
    return space


def _sections_b(model, chain, r):
    n = model.dim_B
    t0, tl = chain[0], chain[-1]
    v = model.base_vertex(t0)
    rows = []
    for (w, rho), k in model.kappa.items():
        if not k or not (model.is_face(w, t0) and model.is_face(tl, rho)):
            continue
        for s in model.cofaces(rho, n):
            L = cotangent_monodromy(model, w, rho, base=v, sigma=s)
            W = la.wedge_matrix([list(row) for row in L], r)
            rows.extend([[x - int(i == j) for j, x in enumerate(row)] for i, row in enumerate(W)])
    if not rows:
        return _full(n, r)
    return Subspace(comb(n, r), la.nullspace(rows, comb(n, r)))


def wedge_of_invariants(model: TropicalModel, chain, r: int) -> SectionSpace:
    """r-th wedge power of the invariant 1-forms, in the base chart."""
    chain = tuple(chain)
    one = invariant_sections(model, chain, 1, "A").space
    return SectionSpace(chain, r, wedge_power(one, r), "wedge_of_invariants", model.base_vertex(chain[0]))


def quotient_sections(model: TropicalModel, chain, r: int) -> SectionSpace:
    chain = tuple(chain)
    inv = invariant_sections(model, chain, r, "A")
    sub = wedge_of_invariants(model, chain, r).space
    if not inv.space.contains_space(sub):
        raise ModelError("section_inclusion", "wedge of invariants is not invariant")
    return SectionSpace(chain, r, inv.space, "quotient", inv.base, sub)


# --- q > 0: hatted quotients -----------------------------------------------------

def _dual_face(model, tl):
    """conv{u_sigma : sigma contains tl}, checked against the reduced outer polytope."""
    def make():
        n = model.dim_B
        pts = [model.facet_normals[s] for s in model.cofaces(tl, n)]
        F = LatticePolytope(pts)
        if not same_up_to_translation(F, model.delta_check(tl)):
            raise ModelError("outer_polytope", f"dual face of cell {tl} differs from its reduced outer polytope")
        return F
    return _cache(model, ("face", tl), make)


def _hat_quotient(model, t0, tl, s):
    """(representatives, solver basis) of the degree-s quotient for the extremes (t0, tl).

    Lives in wedge^(s+1) Q^(n+1).  The solver basis lists the
    representatives first, then a basis of the part divided out.
    """
    def make():
        N = model.ambient_rank
        if s + 1 > N:
            return [], []
        F = _dual_face(model, tl)
        that = span_of([list(u) for u in F.vertices], N)
        lin = span_of([list(model.coords(x)) for x in model.vertex_ids(t0)], N)
        dhat = subspace_sum(Subspace(N, la.nullspace([list(b) for b in lin.basis], N)), that)
        if that.dim > s + 1:
            return [], []
        ideal = ideal_degree_piece(that, _full(N, 1), that.dim, s + 1)
        kill = intersect(ideal, wedge_power(dhat, s + 1))
        reps, current = [], [list(b) for b in kill.basis]
        for b in ideal.basis:
            if la.rank(current + [list(b)]) > len(current):
                reps.append(list(b))
                current.append(list(b))
        return reps, reps + [list(b) for b in kill.basis]
    return _cache(model, ("hat", t0, tl, s), make)


def _box(model, tl, q):
    return _cache(model, ("box", tl, q), lambda: box_points(_dual_face(model, tl), q))


def _require_simplices(model):
    bad = [t for t in model.cells_of_dim(1) if not is_simplex(model.delta_check(t))]
    if bad:
        raise HypothesisError(["simplex_hypothesis"])


# --- pages ------------------------------------------------------------------------------

def _row_blocks(model, r, q, p, threads=1):
    """Per flag of length p+1: (flag, basis) for the given row."""
    chains = flags(model, p + 1)
    if q == 0:
        def block(ch):
            return ch, [list(b) for b in invariant_sections(model, ch, r).space.basis]
    else:
        def block(ch):
            if not _in_delta(model, ch):
                return ch, []
            reps, _ = _hat_quotient(model, ch[0], ch[-1], r + q)
            pts = _box(model, ch[-1], q) if reps else []
            return ch, [(m, j) for m in pts for j in range(len(reps))]
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(block, chains))
    return [block(ch) for ch in chains]


def _offsets(blocks):
    out, k = {}, 0
    for ch, basis in blocks:
        out[ch] = (k, basis)
        k += len(basis)
    return out, k


def _differential(model, r, q, src, dst):
    """Matrix (rows: target basis, columns: source basis) of the alternating face map."""
    n = model.dim_B
    src_off, ncols = _offsets(src)
    dst_off, nrows = _offsets(dst)
    mat = [[Fraction(0)] * ncols for _ in range(nrows)]
    for e, (row0, tbasis) in dst_off.items():
        if not tbasis:
            continue
        for i in range(len(e)):
            eh = e[:i] + e[i + 1:]
            col0, sbasis = src_off[eh]
            if not sbasis:
                continue
            sign = -1 if i % 2 else 1
            if q == 0:
                block = _q0_block(model, r, e, eh, i, tbasis, sbasis)
            else:
                block = _hat_block(model, r + q, e, eh, tbasis, sbasis)
            for a, row in enumerate(block):
                for b, x in enumerate(row):
                    if x:
                        mat[row0 + a][col0 + b] += sign * x
    return mat


def _q0_block(model, r, e, eh, i, tbasis, sbasis):
    n = model.dim_B
    images = [list(map(Fraction, b)) for b in sbasis]
    if i == 0:
        v_from, v_to = model.base_vertex(eh[0]), model.base_vertex(e[0])
        if v_from != v_to:
            sigma = model.cofaces(e[-1], n)[0]
            T = la.wedge_matrix([list(row) for row in cotransport(model, v_from, v_to, sigma)], r)
            images = [la.mat_vec(T, b) for b in images]
    cols = []
    for img in images:
        c = la.solve_in_rows(tbasis, img)
        if c is None:
            raise ModelError("restriction", f"restriction {eh} -> {e} leaves the section space")
        cols.append(c)
    return la.transpose(cols, len(tbasis))


def _hat_block(model, s, e, eh, tbasis, sbasis):
    reps_e, solver_e = _hat_quotient(model, e[0], e[-1], s)
    reps_h, _ = _hat_quotient(model, eh[0], eh[-1], s)
    k = len(reps_e)
    images = []
    for rep in reps_h:
        c = la.solve_in_rows(solver_e, rep)
        if c is None:
            raise ModelError("restriction", f"ideal of {eh} is not inside the ideal of {e}")
        images.append(c[:k])
    index = {key: a for a, key in enumerate(tbasis)}
    block = [[Fraction(0)] * len(sbasis) for _ in tbasis]
    for b, (m, j) in enumerate(sbasis):
        for jj, x in enumerate(images[j]):
            a = index.get((m, jj))
            if a is not None and x:
                block[a][b] = x
    return block


def e1_page(model: TropicalModel, r: int, threads: int = 1, rows=None) -> SpectralPage:
    """First page for r-forms: entries and differentials d1 for every (p, q)."""
    model._need_embedded()
    if not is_ht(model):
        raise HypothesisError(["hypersurface_type"])
    n = model.dim_B
    qs = range(n + 1) if rows is None else rows
    if any(q > 0 for q in qs):
        _require_simplices(model)
    page = SpectralPage(r, n)
    for q in qs:
        blocks = [_row_blocks(model, r, q, p, threads) for p in range(n + 1)]
        for p in range(n + 1):
            page.entries[(p, q)] = sum(len(b) for _, b in blocks[p])
        for p in range(n):
            page.differentials[(p, q)] = _differential(model, r, q, blocks[p], blocks[p + 1])
    return page


def d1(model: TropicalModel, r: int, p: int, q: int) -> list:
    """The differential E1^{p,q} -> E1^{p+1,q} as an exact rational matrix."""
    return e1_page(model, r, rows=[q]).differentials.get((p, q), [])


def e2_page(model: TropicalModel, r: int, threads: int = 1, rows=None) -> SpectralPage:
    e1 = _cache(model, ("e1", r, None if rows is None else tuple(rows)),
                lambda: e1_page(model, r, threads, rows))
    out = SpectralPage(r, e1.n)
    ranks = {key: la.rank(m) if m and m[0] else 0 for key, m in e1.differentials.items()}
    for (p, q), d in e1.entries.items():
        out.entries[(p, q)] = d - ranks.get((p, q), 0) - ranks.get((p - 1, q), 0)
    return out


# --- tables -----------------------------------------------------------------------------

def log_hypotheses(model: TropicalModel) -> list:
    """Names of the violated conditions for reading log numbers off the second page."""
    bad = []
    if model.form != "embedded":
        return ["embedded_model"]
    if not is_ht(model):
        return ["hypersurface_type"]
    n = model.dim_B
    if any(not is_simplex(model.delta_check(t)) for t in model.cells_of_dim(1)):
        bad.append("simplex_hypothesis")
    outer = [model.delta_check(c.id) for c in model.cells if 1 <= c.dim <= n - 1]
    if n <= 2:
        return bad
    if n == 3:
        if not all(is_simplex(P) for P in outer):
            bad.append("outer_polytopes_simplices")
        elif not all(c.is_contractible for c in delta0_components(model)):
            bad.append("component_contractibility")
        return bad
    if n == 4:
        if not all(is_simplex(P) and is_elementary(P) for P in outer):
            bad.append("elementary_simplices")
        return bad
    return bad + ["dimension_bound"]


def _check(model):
    bad = log_hypotheses(model)
    if bad:
        raise HypothesisError(bad)


def affine_hodge(model: TropicalModel, threads: int = 1) -> HodgeTable:
    """table[p][q] = dim H^q(B, i_* wedge^p of the cotangent local system)."""
    model._need_embedded()
    n = model.dim_B
    rows = []
    for p in range(n + 1):
        e2 = e2_page(model, p, threads, rows=[0])
        rows.append(tuple(e2.dim(q, 0) for q in range(n + 1)))
    return HodgeTable(n, tuple(rows), "affine")


def log_hodge(model: TropicalModel, threads: int = 1) -> HodgeTable:
    """table[r][m] = sum over p + q = m of the second page for r-forms."""
    _check(model)
    n = model.dim_B
    rows = []
    for r in range(n + 1):
        e2 = e2_page(model, r, threads)
        rows.append(tuple(sum(e2.dim(p, m - p) for p in range(m + 1)) for m in range(n + 1)))
    return HodgeTable(n, tuple(rows), "log")


def twisted_sectors(model: TropicalModel, threads: int = 1) -> HodgeTable:
    lg = log_hodge(model, threads)
    af = affine_hodge(model, threads)
    n = model.dim_B
    return HodgeTable(n, tuple(tuple(lg[p][q] - af[p][q] for q in range(n + 1)) for p in range(n + 1)),
                      "twisted")


def twisted_closed_form(model: TropicalModel) -> HodgeTable:
    """Twisted sectors from box counts of outer polytopes and discriminant components."""
    _check(model)
    n = model.dim_B
    t = [[0] * (n + 1) for _ in range(n + 1)]

    def box(c, l):
        P = model.delta_check(c)
        return len(box_points(P, l)) if P.dim > 0 else 0

    edges = model.cells_of_dim(1)
    if n == 2:
        t[1][1] = sum(box(w, 1) for w in edges)
    elif n == 3:
        comps = sum(box(c.representative, 1) for c in delta0_components(model))
        t[1][2] = sum(box(w, 2) for w in edges) + comps
        t[2][1] = sum(len(relint_points(model.delta_check(w))) for w in edges
                      if model.delta_check(w).dim > 0) + comps
    elif n == 4:
        t[2][2] = sum(box(c, 2) for c in model.cells_of_dim(2))
    elif n > 4:
        raise HypothesisError(["dimension_bound"])
    return HodgeTable(n, tuple(tuple(r) for r in t), "twisted")


def mirror_check(model: TropicalModel, threads: int = 1) -> MirrorReport:
    """Compare affine tables of the model and its Legendre dual under p -> n - p."""
    a = affine_hodge(model, threads)
    b = affine_hodge(legendre_dual(model), threads)
    n = model.dim_B
    bad = tuple((p, q, a[p][q], b[n - p][q]) for p in range(n + 1) for q in range(n + 1)
                if a[p][q] != b[n - p][q])
    return MirrorReport(a, b, bad)


def render_diamond(table: HodgeTable) -> str:
    """Hodge diamond with h^{n,n} on top and h^{0,0} at the bottom."""
    n = table.n
    lines = []
    width = max(len(str(x)) for row in table.table for x in row)
    for s in range(2 * n, -1, -1):
        cells = [str(table[p][s - p]).rjust(width) for p in range(n, -1, -1) if 0 <= s - p <= n]
        pad = " " * ((width + 1) * (n + 1 - len(cells)) // 2)
        lines.append(pad + " ".join(cells))
    return "\n".join(lines)
