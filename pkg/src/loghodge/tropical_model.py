"""Integral affine models of boundaries of reflexive polytopes.

A model is the boundary B of a reflexive polytope ``xi`` (the *embedded*
form) or a purely combinatorial description with declared kink numbers
(the *abstract* form).  Cells are the proper faces.  Tangent vectors at a
vertex v live in the chart Z^{n+1}/<v>; crossing a maximal cell sigma with
facet normal u (u = 1 on sigma) identifies the charts of two vertices.
Going around a codimension-two cell gives a unipotent shear whose
coefficient is the kink kappa.

Everything is exact.  Derived tables are computed lazily and cached on the
(otherwise immutable) model object.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from collections import deque
from functools import cached_property
from itertools import combinations
from math import gcd
from typing import Optional

from . import _linalg as la
from .lattice_core import (
    LatticePolytope, PolyhedralFan, dual_polytope, face_poset, integral_length,
    is_reflexive, normal_fan, translation_normal_form, span_of, subspace_sum,
)

__all__ = [
    "ModelError", "Cell", "Chart", "TropicalModel", "BendData", "MonodromyOperator",
    "ReducedCell", "DiscriminantGraph", "DiscriminantComponent", "FlagData", "PhiMap",
    "build_fermat", "build_reflexive_boundary", "build_abstract",
    "chart_at_vertex", "transport", "cotransport", "monodromy_operator",
    "cotangent_monodromy", "kappa_extract", "reconstruct_from_bends",
    "outer_monodromy_polytope", "inner_monodromy_polytope", "reduction",
    "classes_are_ht", "classes_are_cit", "is_ht", "is_cit",
    "discriminant", "delta0_components", "flag_data", "in_discriminant_by_chain",
    "in_discriminant_by_simplex", "vert_selection", "phi_change_of_vertex",
    "legendre_dual", "cayley_cone", "model_to_json", "model_from_json",
    "load_model", "save_model",
]


class ModelError(ValueError):
    """Validation failure; ``invariant`` names the violated condition."""

    def __init__(self, invariant: str, message: str):
        super().__init__(f"{invariant}: {message}")
        self.invariant = invariant


@dataclass(frozen=True)
class Cell:
    id: int
    dim: int
    vertices: tuple          # vertex cell ids (embedded) or local coordinates (abstract)
    polytope: LatticePolytope


@dataclass(frozen=True)
class Chart:
    """Projection Z^{n+1} -> Z^{n+1}/<v> = Z^n with a section."""
    vertex: int
    proj: tuple      # n rows of length n+1
    section: tuple   # n+1 rows of length n


@dataclass(frozen=True)
class BendData:
    fan: PolyhedralFan
    k: dict          # wall index -> nonnegative integer

    def __post_init__(self):
        if not self.fan.complete:
            raise ValueError("bend data needs a complete fan")
        missing = [w for w in range(len(self.fan.walls)) if w not in self.k]
        if missing:
            raise ValueError(f"walls without a bend value: {missing}")
        if any(v < 0 for v in self.k.values()):
            raise ValueError("bend values must be nonnegative")


@dataclass(frozen=True)
class MonodromyOperator:
    """x -> x + kappa * <x, dual> * direction, in the chart at ``base``."""
    matrix: tuple
    direction: tuple
    dual: tuple
    kappa: int
    base: int = -1
    omega: int = -1
    rho: int = -1


@dataclass(frozen=True)
class ReducedCell:
    cell: int
    inner: tuple                 # translation classes of reduced inner polytopes
    outer: tuple                 # translation classes of reduced outer polytopes
    rho_sets: tuple              # frozensets of codim-one cells per inner class
    omega_sets: tuple            # frozensets of edges per outer class
    inner_labels: tuple = ()     # per class: {vertex id: point}
    outer_labels: tuple = ()     # per class: {maximal cell id: point}


@dataclass(frozen=True)
class DiscriminantGraph:
    nodes: frozenset
    simplices: tuple             # chains of cell ids
    edges: tuple                 # pairs of cell ids
    delta0: Optional[frozenset]  # None when not determined


@dataclass(frozen=True)
class DiscriminantComponent:
    nodes: frozenset
    edges: tuple
    dangling: tuple
    is_contractible: bool
    representative: int


@dataclass(frozen=True)
class FlagData:
    chain: tuple
    delta: LatticePolytope
    delta_check: LatticePolytope
    in_discriminant: bool


@dataclass(frozen=True)
class PhiMap:
    """Change of base vertex on k*m_hat + cotangent space.

    ``chart_matrix`` acts on (cotangent chart coordinates at v, hat
    coefficient) column vectors.  ``ambient_matrix`` is the same map after
    identifying both sides with Q^{n+1} through m_hat -> u_sigma.
    """
    chart_matrix: tuple
    ambient_matrix: tuple


def _ivec(v):
    return tuple(int(x) for x in v)


def _imat(m):
    return tuple(tuple(int(x) for x in row) for row in m)


def _dot(a, b):
    return sum(x * y for x, y in zip(a, b))


class TropicalModel:
    """Cell complex with kink data.  Use the builders rather than this constructor."""

    def __init__(self, form: str, dim_B: int, cells: list, faces_of: dict,
                 xi: Optional[LatticePolytope] = None, kappa_input: Optional[dict] = None,
                 a_override: Optional[dict] = None, vertex_order: Optional[tuple] = None):
        self.form = form
        self.dim_B = dim_B
        self.cells = tuple(cells)
        self.xi = xi
        self._faces_of = {k: frozenset(v) for k, v in faces_of.items()}
        self._kappa_input = dict(kappa_input or {})
        self._a_override = dict(a_override or {})
        verts = [c.id for c in self.cells if c.dim == 0]
        if vertex_order is None:
            vertex_order = tuple(verts)
        if sorted(vertex_order) != sorted(verts):
            raise ModelError("vertex_order", "must be a permutation of the vertex ids")
        self.vertex_order = tuple(vertex_order)
        self._rank = {v: i for i, v in enumerate(self.vertex_order)}

    # --- combinatorics ----------------------------------------------------
    @property
    def ambient_rank(self) -> int:
        return self.xi.ambient_rank if self.xi is not None else self.dim_B + 1

    def cells_of_dim(self, k: int) -> list:
        return [c.id for c in self.cells if c.dim == k]

    def dim(self, c: int) -> int:
        return self.cells[c].dim

    def is_face(self, small: int, big: int) -> bool:
        """True when ``small`` is a face of ``big`` (equality allowed)."""
        return small == big or small in self._faces_of[big]

    def faces_of(self, c: int) -> frozenset:
        return self._faces_of[c]

    def cofaces(self, c: int, k: int) -> list:
        return [d for d in self.cells_of_dim(k) if self.is_face(c, d)]

    def vertex_ids(self, c: int) -> list:
        return [v for v in self.cells_of_dim(0) if self.is_face(v, c)]

    def base_vertex(self, c: int) -> int:
        return min(self.vertex_ids(c), key=self._rank.__getitem__)

    def coords(self, v: int) -> tuple:
        self._need_embedded()
        return self.xi.vertices[v]

    def cell_counts(self) -> tuple:
        return tuple(len(self.cells_of_dim(k)) for k in range(self.dim_B + 1))

    def with_vertex_order(self, order) -> "TropicalModel":
        return TropicalModel(self.form, self.dim_B, list(self.cells), self._faces_of, self.xi,
                             self._kappa_input, self._a_override, tuple(order))

    def _need_embedded(self):
        if self.form != "embedded":
            raise ModelError("embedded_only", "operation needs an embedded model")

    # --- embedded geometry --------------------------------------------------
    @cached_property
    def facet_normals(self) -> dict:
        """Maximal cell id -> integral covector u with u = 1 on the cell."""
        self._need_embedded()
        out = {}
        ineq = self.xi.ambient_inequalities
        for c in self.cells_of_dim(self.dim_B):
            pts = [self.coords(v) for v in self.cells[c].vertices]
            match = [a for a, b in ineq if b == 1 and all(_dot(a, p) == 1 for p in pts)]
            if len(match) != 1:
                raise ModelError("reflexivity", f"cell {c} is not at lattice distance one")
            out[c] = match[0]
        return out

    @cached_property
    def _charts(self) -> dict:
        return {v: _make_chart(v, self.coords(v)) for v in self.cells_of_dim(0)}

    # --- kink data ----------------------------------------------------------
    @cached_property
    def incident_pairs(self) -> list:
        """(omega, rho) with omega an edge, rho a codim-one cell, omega inside rho."""
        n = self.dim_B
        if n < 2:
            return []
        return [(w, r) for r in self.cells_of_dim(n - 1) for w in self.cells_of_dim(1)
                if self.is_face(w, r)]

    @cached_property
    def kappa(self) -> dict:
        if self.form == "embedded":
            return {(w, r): monodromy_operator(self, w, r).kappa for w, r in self.incident_pairs}
        return {p: self._kappa_input.get(p, 0) for p in self.incident_pairs}

    @cached_property
    def a(self) -> dict:
        out = {}
        for w in self.cells_of_dim(1):
            if w in self._a_override:
                out[w] = self._a_override[w]
            elif self.form == "embedded":
                p, q = (self.coords(v) for v in self.cells[w].vertices)
                out[w] = integral_length(p, q)
            else:
                g = 0
                for (w2, _), k in self.kappa.items():
                    if w2 == w and k:
                        g = gcd(g, k)
                out[w] = g or 1
        if any(v <= 0 for v in out.values()):
            raise ModelError("a_positivity", "a values must be positive")
        return out

    @cached_property
    def a_check(self) -> dict:
        out = {}
        for (w, r), k in self.kappa.items():
            if k == 0:
                continue
            if k % self.a[w]:
                raise ModelError("kappa_divisibility", f"kappa({w},{r}) = {k} not divisible by a({w}) = {self.a[w]}")
            ratio = k // self.a[w]
            if out.setdefault(r, ratio) != ratio:
                raise ModelError("ratio_consistency", f"kappa/a is not constant around cell {r}")
        return out

    def validate(self) -> "TropicalModel":
        if any(k < 0 for k in self.kappa.values()):
            raise ModelError("kappa_positivity", "negative kink")
        self.a_check
        return self

    def zero_point(self) -> LatticePolytope:
        return LatticePolytope([(0,) * self.ambient_rank])

    # --- reductions -------------------------------------------------------------
    @cached_property
    def reductions(self) -> dict:
        return reduction(self)

    def delta(self, c: int) -> LatticePolytope:
        """The reduced inner polytope of a cell (a point when trivial)."""
        classes = self.reductions[c].inner
        if len(classes) > 1:
            raise ModelError("single_class", f"cell {c} has several inner classes")
        return classes[0] if classes else self.zero_point()

    def delta_check(self, c: int) -> LatticePolytope:
        classes = self.reductions[c].outer
        if len(classes) > 1:
            raise ModelError("single_class", f"cell {c} has several outer classes")
        return classes[0] if classes else self.zero_point()

    def __repr__(self):
        return f"TropicalModel(form={self.form!r}, dim_B={self.dim_B}, cells={self.cell_counts()})"


# --- builders ----------------------------------------------------------------------

def build_reflexive_boundary(xi: LatticePolytope, vertex_order=None) -> TropicalModel:
    """Model on the boundary of a reflexive polytope; cells are its proper faces."""
    if not is_reflexive(xi):
        raise ModelError("reflexivity", "polytope is not reflexive")
    poset = face_poset(xi)
    top = frozenset(range(len(xi.vertices)))
    keys = sorted((k for k in poset if k != top), key=lambda k: (poset[k], sorted(k)))
    ids = {k: i for i, k in enumerate(keys)}
    cells = [Cell(ids[k], poset[k], tuple(sorted(k)),
                  LatticePolytope([xi.vertices[i] for i in k])) for k in keys]
    faces_of = {ids[k]: {ids[j] for j in keys if j < k} for k in keys}
    model = TropicalModel("embedded", xi.dim - 1, cells, faces_of, xi=xi, vertex_order=vertex_order)
    for v in model.cells_of_dim(0):
        if model.cells[v].vertices != (v,):
            raise AssertionError("vertex cells must come first")
    model.facet_normals
    return model.validate()


def build_fermat(d: int) -> TropicalModel:
    """Model of the degree-d Fermat degeneration: boundary of the standard reflexive simplex."""
    if d < 3:
        raise ValueError("need at least three components (d >= 3)")
    r = d - 1
    pts = [tuple(int(i == j) for j in range(r)) for i in range(r)] + [(-1,) * r]
    return build_reflexive_boundary(LatticePolytope(pts))


def build_abstract(cells: list, kappa: dict, a: Optional[dict] = None) -> TropicalModel:
    """Abstract model from (id, dim, local vertex coordinates, face ids) records."""
    order = sorted(cells, key=lambda c: c["id"])
    if [c["id"] for c in order] != list(range(len(order))):
        raise ModelError("cell_ids", "cell ids must be 0..N-1")
    built, faces_of = [], {}
    for c in order:
        poly = LatticePolytope(c["vertices"])
        if poly.dim != c["dim"]:
            raise ModelError("graded_poset", f"cell {c['id']} has dimension {poly.dim}, declared {c['dim']}")
        built.append(Cell(c["id"], c["dim"], tuple(map(tuple, c["vertices"])), poly))
    for c in order:
        closure, stack = set(), list(c.get("faces", []))
        while stack:
            f = stack.pop()
            if f in closure:
                continue
            if not 0 <= f < len(order):
                raise ModelError("graded_poset", f"unknown face id {f}")
            closure.add(f)
            stack.extend(order[f].get("faces", []))
        for f in closure:
            if built[f].dim >= c["dim"]:
                raise ModelError("graded_poset", f"face {f} of cell {c['id']} is not of smaller dimension")
        faces_of[c["id"]] = closure
    dim_B = max(c.dim for c in built)
    model = TropicalModel("abstract", dim_B, built, faces_of, kappa_input=kappa, a_override=a)
    pairs = set(model.incident_pairs)
    for key, k in kappa.items():
        if key not in pairs:
            raise ModelError("kappa_incidence", f"{key} is not an incident (edge, codim-one cell) pair")
        if k < 0:
            raise ModelError("kappa_positivity", f"negative kink at {key}")
    return model.validate()


# --- charts and transport ----------------------------------------------------------

def _make_chart(vid: int, v: tuple) -> Chart:
    N = len(v)
    unit = next((i for i, x in enumerate(v) if abs(x) == 1), None)
    if unit is not None:
        s = v[unit]
        keep = [j for j in range(N) if j != unit]
        proj = []
        for j in keep:
            row = [0] * N
            row[j] = 1
            row[unit] -= s * v[j]
            proj.append(tuple(row))
        section = tuple(tuple(int(j == k) for k in keep) for j in range(N))
        return Chart(vid, tuple(proj), section)
    if gcd(*v) != 1:
        raise ModelError("chart_unimodularity", f"vertex {v} is not primitive")
    b, vmat = la.unimodular_completion([list(v)])
    # coordinates of x are x @ V; column 0 pairs to the v direction
    proj = tuple(tuple(vmat[j][k] for j in range(N)) for k in range(1, N))
    section = tuple(tuple(b[j][k] for k in range(1, N)) for j in range(N))
    return Chart(vid, proj, section)


def chart_at_vertex(model: TropicalModel, v: int) -> Chart:
    model._need_embedded()
    if model.dim(v) != 0:
        raise ValueError(f"cell {v} is not a vertex")
    return model._charts[v]


def _mm(a, b):
    return [[sum(x * y for x, y in zip(row, col)) for col in zip(*b)] for row in a]


def _check_on(model, sigma, *verts):
    if model.dim(sigma) != model.dim_B:
        raise ValueError(f"cell {sigma} is not maximal")
    for v in verts:
        if not model.is_face(v, sigma):
            raise ValueError(f"vertex {v} is not on cell {sigma}")


def transport(model: TropicalModel, v: int, w: int, sigma: int) -> tuple:
    """Chart at v -> chart at w through the maximal cell sigma (tangent vectors)."""
    _check_on(model, sigma, v, w)
    u = model.facet_normals[sigma]
    cv, cw = chart_at_vertex(model, v), chart_at_vertex(model, w)
    vv = model.coords(v)
    N = len(u)
    lift = [[int(i == j) - vv[i] * u[j] for j in range(N)] for i in range(N)]
    out = _mm(_mm(cw.proj, lift), cv.section)
    return _imat(out)


def cotransport(model: TropicalModel, v: int, w: int, sigma: int) -> tuple:
    """Cotangent chart at v -> cotangent chart at w through sigma.

    Cotangent chart coordinates of a covector m with m(v) = 0 are
    ``section^T m``; the inverse is ``proj^T c``.
    """
    _check_on(model, sigma, v, w)
    u = model.facet_normals[sigma]
    cv, cw = chart_at_vertex(model, v), chart_at_vertex(model, w)
    ww = model.coords(w)
    N = len(u)
    shift = [[int(i == j) - u[i] * ww[j] for j in range(N)] for i in range(N)]
    sec_t = [list(col) for col in zip(*cw.section)]
    proj_t = [list(col) for col in zip(*cv.proj)]
    return _imat(_mm(_mm(sec_t, shift), proj_t))


def covector_to_chart(model, v, m) -> tuple:
    c = chart_at_vertex(model, v)
    if _dot(m, model.coords(v)) != 0:
        raise ValueError("covector does not vanish on the vertex")
    return tuple(_dot(col, m) for col in zip(*c.section))


def chart_to_covector(model, v, c) -> tuple:
    ch = chart_at_vertex(model, v)
    return tuple(sum(ci * ch.proj[i][j] for i, ci in enumerate(c)) for j in range(model.ambient_rank))


def _loop(model, omega, rho, sigma):
    n = model.dim_B
    if model.dim(omega) != 1 or model.dim(rho) != n - 1 or not model.is_face(omega, rho):
        raise ValueError("need an edge inside a codimension-one cell")
    sigmas = model.cofaces(rho, n)
    if len(sigmas) != 2:
        raise ModelError("graded_poset", f"cell {rho} is not in exactly two maximal cells")
    if sigma is None:
        sigma = sigmas[0]
    if sigma not in sigmas:
        raise ValueError(f"cell {sigma} does not contain cell {rho}")
    other = sigmas[1] if sigma == sigmas[0] else sigmas[0]
    a = model.base_vertex(omega)
    b = next(x for x in model.vertex_ids(omega) if x != a)
    return a, b, sigma, other


def _synthetic_shear(n, k):
    m = [[int(i == j) for j in range(n)] for i in range(n)]
    if n >= 2:
        m[0][n - 1] += k
    d = tuple(int(i == 0) for i in range(n))
    dd = tuple(int(i == n - 1) for i in range(n))
    return MonodromyOperator(_imat(m), d, dd, k)


def monodromy_operator(model: TropicalModel, omega: int, rho: int, sigma: Optional[int] = None) -> MonodromyOperator:
    """Transport around the loop of (omega, rho), in the chart at the base vertex of omega.

    The loop runs from a to b inside ``sigma`` and back inside the other
    maximal cell containing rho.  Abstract models return a normal-form
    shear carrying the declared kink.
    """
    if model.form == "abstract":
        if (omega, rho) not in set(model.incident_pairs):
            raise ValueError("need an edge inside a codimension-one cell")
        op = _synthetic_shear(model.dim_B, model.kappa[(omega, rho)])
        return MonodromyOperator(op.matrix, op.direction, op.dual, op.kappa, -1, omega, rho)
    a, b, s1, s2 = _loop(model, omega, rho, sigma)
    there = transport(model, a, b, s1)
    back = transport(model, b, a, s2)
    mat = _mm(back, there)
    n = model.dim_B
    chart = chart_at_vertex(model, a)
    pa = model.coords(a)

    def tangent(x):
        diff = [p - q for p, q in zip(model.coords(x), pa)]
        return [_dot(row, diff) for row in chart.proj]

    d = la.primitive(tangent(b))
    # dual: primitive annihilator of rho's tangent, positive on the outgoing cell
    rho_vecs = [tangent(x) for x in model.vertex_ids(rho) if x != a]
    ann = la.nullspace(rho_vecs, n)
    if len(ann) != 1:
        raise ModelError("monodromy_shape", "codimension-one cell has wrong dimension")
    dd = la.primitive(ann[0])
    probe = next(x for x in model.vertex_ids(s1) if not model.is_face(x, rho))
    if _dot(dd, tangent(probe)) < 0:
        dd = [-x for x in dd]
    diff = [[mat[i][j] - int(i == j) for j in range(n)] for i in range(n)]
    outer = [[d[i] * dd[j] for j in range(n)] for i in range(n)]
    i0 = next(i for i, x in enumerate(d) if x)
    j0 = next(j for j, x in enumerate(dd) if x)
    kappa, rem = divmod(diff[i0][j0], outer[i0][j0])
    if rem or any(diff[i][j] != kappa * outer[i][j] for i in range(n) for j in range(n)):
        raise ModelError("monodromy_shape", f"loop ({omega},{rho}) is not a rank-one shear along the edge")
    if _dot(d, dd) != 0:
        raise ModelError("monodromy_shape", "shear direction is not isotropic")
    if kappa < 0:
        raise ModelError("kappa_positivity", f"negative kink at ({omega},{rho})")
    return MonodromyOperator(_imat(mat), tuple(d), tuple(dd), kappa, a, omega, rho)


def cotangent_monodromy(model: TropicalModel, omega: int, rho: int, base: Optional[int] = None,
                        sigma: Optional[int] = None) -> tuple:
    """Cotangent transport around the (omega, rho) loop, in the cotangent chart at ``base``.

    ``base`` may be any vertex of rho; the loop is conjugated there through
    ``sigma`` (default: the first maximal cell containing rho).
    """
    a, b, s1, s2 = _loop(model, omega, rho, sigma)
    mat = _mm(cotransport(model, b, a, s2), cotransport(model, a, b, s1))
    if base is None or base == a:
        return _imat(mat)
    if not model.is_face(base, rho):
        raise ValueError("base vertex must lie on the codimension-one cell")
    go = cotransport(model, base, a, s1)
    back = cotransport(model, a, base, s1)
    return _imat(_mm(_mm(back, mat), go))


def kappa_extract(model: TropicalModel):
    """(kappa table, a table, a_check table), validated."""
    model.validate()
    return dict(model.kappa), dict(model.a), dict(model.a_check)


# --- reconstruction from bends -----------------------------------------------------

def reconstruct_from_bends(bd: BendData, with_labels: bool = False):
    """Lattice polytope (up to translation) whose normal fan bends by k at each wall.

    Walks the adjacency graph from cone 0; each wall crossing adds k times
    the primitive covector vanishing on the wall and positive on the far
    cone.  Returns the polytope, or (polytope, {cone index: point}) when
    ``with_labels`` is set.
    """
    fan = bd.fan
    dim = fan.ambient_rank
    ncones = len(fan.maximal_cones)
    steps = []
    for w, (i, j, gens) in enumerate(fan.walls):
        ann = la.nullspace([list(g) for g in gens], dim) if gens else [
            [int(a == b) for b in range(dim)] for a in range(dim)]
        if len(ann) != 1:
            raise ValueError(f"wall {w} is not of codimension one")
        d = la.primitive(ann[0])
        probe = [sum(x) for x in zip(*fan.maximal_cones[j])]
        s = _dot(d, probe)
        if s == 0:
            raise ValueError(f"wall {w} does not separate its cones")
        if s < 0:
            d = [-x for x in d]
        steps.append((i, j, tuple(bd.k[w] * x for x in d)))
    adj = {}
    for i, j, step in steps:
        adj.setdefault(i, []).append((j, step))
        adj.setdefault(j, []).append((i, tuple(-x for x in step)))
    pts = {0: (0,) * dim}
    queue = deque([0])
    while queue:
        x = queue.popleft()
        for y, step in adj.get(x, []):
            cand = tuple(p + q for p, q in zip(pts[x], step))
            if y in pts:
                if pts[y] != cand:
                    raise ValueError("no single-valued assignment")
            else:
                pts[y] = cand
                queue.append(y)
    if len(pts) != ncones:
        raise ValueError("fan adjacency graph is not connected")
    for i, cone in enumerate(fan.maximal_cones):
        for g in cone:
            top = _dot(pts[i], g)
            if any(_dot(p, g) > top for p in pts.values()):
                raise ValueError("data not realized by a convex polytope")
    for i, j, step in steps:
        if tuple(p - q for p, q in zip(pts[j], pts[i])) != step:
            raise ValueError("data not realized by a convex polytope")
    poly = LatticePolytope(pts.values())
    return (poly, pts) if with_labels else poly


# --- monodromy polytopes --------------------------------------------------------------

def _outer_fan(model, omega):
    n, N = model.dim_B, model.ambient_rank
    a, b = (model.coords(v) for v in model.cells[omega].vertices)
    _, vmat = la.unimodular_completion([list(a), list(b)])

    def quot(x):
        return tuple(sum(x[j] * vmat[j][k] for j in range(N)) for k in range(2, N))

    sigmas = model.cofaces(omega, n)
    index = {s: i for i, s in enumerate(sigmas)}
    cones = tuple(tuple(q for q in (quot(model.coords(v)) for v in model.cells[s].vertices) if any(q))
                  for s in sigmas)
    walls, ks = [], {}
    for r in model.cofaces(omega, n - 1):
        i, j = (index[s] for s in model.cofaces(r, n))
        gens = tuple(q for q in (quot(model.coords(v)) for v in model.cells[r].vertices) if any(q))
        ks[len(walls)] = model.kappa[(omega, r)]
        walls.append((i, j, gens))
    fan = PolyhedralFan(N - 2, cones, tuple(walls), True, tuple(sigmas))
    back = [[vmat[j][k] for j in range(N)] for k in range(2, N)]
    return BendData(fan, ks), sigmas, back


def outer_monodromy_polytope(model: TropicalModel, omega: int, with_labels: bool = False):
    """Polytope of covectors vanishing on the edge omega, bent by kappa around omega."""
    model._need_embedded()
    if model.dim(omega) != 1 or model.dim_B < 2:
        raise ValueError("need an edge of a model of dimension at least two")
    bd, sigmas, back = _outer_fan(model, omega)
    _, pts = reconstruct_from_bends(bd, with_labels=True)
    N = model.ambient_rank
    labels = {sigmas[i]: tuple(sum(y[k] * back[k][j] for k in range(len(y))) for j in range(N))
              for i, y in pts.items()}
    poly = LatticePolytope(labels.values())
    return (poly, labels) if with_labels else poly


def inner_monodromy_polytope(model: TropicalModel, rho: int, with_labels: bool = False):
    """Polytope of tangent vectors of rho whose edges have lengths kappa(omega, rho)."""
    model._need_embedded()
    n = model.dim_B
    if model.dim(rho) != n - 1:
        raise ValueError("need a codimension-one cell")
    vids = model.vertex_ids(rho)
    N = model.ambient_rank
    if n - 1 == 0:
        labels = {vids[0]: (0,) * N}
        poly = LatticePolytope(labels.values())
        return (poly, labels) if with_labels else poly
    P = model.cells[rho].polytope
    fan = normal_fan(P)
    by_coords = {model.coords(v): v for v in vids}
    edge_of = {frozenset(model.cells[w].vertices): w
               for w in model.cells_of_dim(1) if model.is_face(w, rho)}
    ks = {}
    for wi, (i, j, _) in enumerate(fan.walls):
        key = frozenset((by_coords[P.vertices[i]], by_coords[P.vertices[j]]))
        ks[wi] = model.kappa[(edge_of[key], rho)]
    _, pts = reconstruct_from_bends(BendData(fan, ks), with_labels=True)
    labels = {}
    for i, c in pts.items():
        amb = P.from_local(c)
        labels[by_coords[P.vertices[i]]] = tuple(x - o for x, o in zip(amb, P.origin))
    poly = LatticePolytope(labels.values())
    return (poly, labels) if with_labels else poly


def _normalized(points):
    poly = LatticePolytope(points)
    return LatticePolytope(translation_normal_form(poly)), poly.vertices[0]


def reduction(model: TropicalModel) -> dict:
    """Per cell: translation classes of reduced inner and outer polytopes.

    Inner candidates come from codimension-one cells rho containing the cell
    (face of the inner polytope of rho divided by a_check); outer candidates
    from edges inside the cell (face of the outer polytope divided by a).
    Polytopes are normalized so that their lexicographically smallest vertex
    is the origin; labels are shifted accordingly.  Without any nonzero kink
    every class list is empty, which also covers abstract models.
    """
    if not any(model.kappa.values()):
        return {c.id: ReducedCell(c.id, (), (), (), ()) for c in model.cells}
    model._need_embedded()
    n = model.dim_B
    kap = model.kappa
    acheck = model.a_check
    inner_cache = {r: inner_monodromy_polytope(model, r, True)[1]
                   for r in model.cells_of_dim(n - 1)} if n >= 2 else {}
    outer_cache = {w: outer_monodromy_polytope(model, w, True)[1]
                   for w in model.cells_of_dim(1)} if n >= 2 else {}
    out = {}
    for c in model.cells:
        t = c.id
        inner, outer = {}, {}
        if 1 <= c.dim <= n - 1:
            vids = model.vertex_ids(t)
            for r in model.cofaces(t, n - 1):
                if not any(kap.get((w, r), 0) for w in model.cells_of_dim(1) if model.is_face(w, t)):
                    continue
                lab = inner_cache[r]
                pts = {v: tuple(x // acheck[r] for x in _sub(lab[v], lab[vids[0]])) for v in vids}
                if any(any(x % acheck[r] for x in _sub(lab[v], lab[vids[0]])) for v in vids):
                    raise ModelError("divisibility", f"inner polytope of {r} not divisible")
                _add_class(inner, pts, r)
            sigmas = model.cofaces(t, n)
            for w in model.cells_of_dim(1):
                if not model.is_face(w, t):
                    continue
                if not any(kap.get((w, r), 0) for r in model.cofaces(t, n - 1)):
                    continue
                lab = outer_cache[w]
                aw = model.a[w]
                diffs = {s: _sub(lab[s], lab[sigmas[0]]) for s in sigmas}
                if any(x % aw for d in diffs.values() for x in d):
                    raise ModelError("divisibility", f"outer polytope of {w} not divisible by a")
                _add_class(outer, {s: tuple(x // aw for x in d) for s, d in diffs.items()}, w)
        if len(inner) != len(outer):
            raise ModelError("cit_consistency", f"cell {t}: inner and outer classes do not pair up")
        keys_i, keys_o = sorted(inner), sorted(outer)
        out[t] = ReducedCell(
            t,
            tuple(inner[k][0] for k in keys_i),
            tuple(outer[k][0] for k in keys_o),
            tuple(frozenset(inner[k][2]) for k in keys_i),
            tuple(frozenset(outer[k][2]) for k in keys_o),
            tuple(inner[k][1] for k in keys_i),
            tuple(outer[k][1] for k in keys_o),
        )
    return out


def _sub(p, q):
    return tuple(x - y for x, y in zip(p, q))


def _add_class(table, labelled, source):
    poly, shift = _normalized(labelled.values())
    if poly.dim == 0:
        return
    key = translation_normal_form(poly)
    labels = {k: _sub(p, shift) for k, p in labelled.items()}
    if key in table:
        table[key][2].add(source)
    else:
        table[key] = (poly, labels, {source})


def classes_are_ht(classes) -> bool:
    """At most one translation class of polytopes."""
    keys = {translation_normal_form(p) for p in classes if p.dim > 0}
    return len(keys) <= 1


def classes_are_cit(cell_dim: int, cell_codim: int, classes) -> bool:
    """At most min(dim, codim) classes whose tangent spaces form a direct sum."""
    reps = {translation_normal_form(p): p for p in classes if p.dim > 0}
    if len(reps) > min(cell_dim, cell_codim):
        return False
    if not reps:
        return True
    rank = len(next(iter(reps))[0])
    total = span_of([], rank)
    dims = 0
    for key in reps:
        space = span_of([v for v in key[1:]], rank)
        total = subspace_sum(total, space)
        dims += space.dim
    return total.dim == dims


def is_ht(model: TropicalModel) -> bool:
    if model.dim_B < 2:
        return True
    return all(classes_are_ht(rc.outer) for rc in model.reductions.values())


def is_cit(model: TropicalModel) -> bool:
    if model.dim_B < 2:
        return True
    n = model.dim_B
    return all(classes_are_cit(model.dim(t), n - model.dim(t), rc.outer)
               for t, rc in model.reductions.items())


# --- discriminant ------------------------------------------------------------------

def _full_chains(model, start, end_dim):
    """Strict chains start = c_1 < ... with dimensions increasing by one up to end_dim."""
    chains = [(start,)]
    for k in range(model.dim(start) + 1, end_dim + 1):
        chains = [ch + (c,) for ch in chains for c in model.cofaces(ch[-1], k)]
    return chains


def discriminant(model: TropicalModel) -> DiscriminantGraph:
    """Barycentric codimension-two simplices with a nonzero kink at their extremes."""
    n = model.dim_B
    if n < 2:
        return DiscriminantGraph(frozenset(), (), (), frozenset())
    simplices = []
    for w in model.cells_of_dim(1):
        for ch in _full_chains(model, w, n - 1):
            if model.kappa.get((ch[0], ch[-1]), 0):
                simplices.append(ch)
    nodes = frozenset(c for s in simplices for c in s)
    edges = sorted({(s[i], s[j]) for s in simplices for i, j in combinations(range(len(s)), 2)})
    delta0 = None
    if model.form == "embedded":
        delta0 = frozenset(c for c in nodes if model.dim(c) == 1 and n == 3
                           and model.delta_check(c).dim == 2)
    return DiscriminantGraph(nodes, tuple(simplices), tuple(edges), delta0)


def delta0_components(model: TropicalModel) -> list:
    """Components of the discriminant minus its trivalent-type points, with a tree test."""
    n = model.dim_B
    if n < 2:
        return []
    if n > 3:
        raise ModelError("unsupported_dimension", "component analysis needs dim B <= 3")
    g = discriminant(model)
    if g.delta0 is None:
        raise ModelError("embedded_only", "marking of the discriminant needs an embedded model")
    keep = sorted(g.nodes - g.delta0)
    parent = {x: x for x in keep}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    internal, dangling, open_edges = [], [], []
    for p, q in g.edges:
        inp, inq = p in parent, q in parent
        if inp and inq:
            internal.append((p, q))
            parent[find(p)] = find(q)
        elif inp or inq:
            dangling.append((p, q))
        else:
            open_edges.append((p, q))
    groups = {}
    for x in keep:
        groups.setdefault(find(x), set()).add(x)
    out = []
    for members in groups.values():
        es = tuple(e for e in internal if e[0] in members)
        ds = tuple(e for e in dangling if e[0] in members or e[1] in members)
        rep = max(members, key=lambda c: (model.dim(c), -c))
        out.append(DiscriminantComponent(frozenset(members), es, ds,
                                         len(es) == len(members) - 1, rep))
    for p, q in open_edges:
        out.append(DiscriminantComponent(frozenset(), (), ((p, q),), True, q))
    return sorted(out, key=lambda c: c.representative)


# --- flags ---------------------------------------------------------------------------

def _check_chain(model, chain):
    chain = tuple(chain)
    if not chain:
        raise ValueError("empty chain")
    for c in chain:
        if not 0 <= c < len(model.cells):
            raise ValueError(f"unknown cell {c}")
    for p, q in zip(chain, chain[1:]):
        if p == q or not model.is_face(p, q):
            raise ValueError("not a strictly increasing chain of faces")
    return chain


def in_discriminant_by_chain(model: TropicalModel, chain) -> bool:
    """Some edge below the first cell and codim-one cell above the last carry a nonzero kink."""
    chain = _check_chain(model, chain)
    lo, hi = chain[0], chain[-1]
    n = model.dim_B
    return any(k and model.is_face(lo, r) and model.is_face(w, lo) and model.is_face(hi, r)
               for (w, r), k in model.kappa.items()) if n >= 2 else False


def in_discriminant_by_simplex(model: TropicalModel, chain) -> bool:
    """The barycentric simplex of the chain is a face of a discriminant simplex."""
    chain = set(_check_chain(model, chain))
    return any(chain <= set(s) for s in discriminant(model).simplices)


def flag_data(model: TropicalModel, chain) -> FlagData:
    chain = _check_chain(model, chain)
    inside = in_discriminant_by_chain(model, chain)
    if not inside:
        z = model.zero_point()
        return FlagData(chain, z, z, False)
    return FlagData(chain, model.delta(chain[0]), model.delta_check(chain[-1]), True)


def vert_selection(model: TropicalModel, v: int, tau: int, i: int = 0) -> tuple:
    """Vertex of the i-th reduced inner polytope of tau picked by the vertex v of tau.

    The chosen point maximizes a generic covector from the interior of the
    outer normal cone of tau at v.
    """
    if not model.is_face(v, tau) or model.dim(v) != 0:
        raise ValueError("v must be a vertex of tau")
    classes = model.reductions[tau].inner
    if not classes:
        return (0,) * model.ambient_rank
    poly = classes[i]
    P = model.cells[tau].polytope
    local_v = P.to_local(model.coords(v))
    normals = [a for a, b, _ in P.facets if _dot(a, local_v) == b]

    def local(t):
        return P.to_local(tuple(x + o for x, o in zip(t, P.origin)))

    pts = [(local(p), p) for p in poly.vertices]
    for weights in _weight_sequence(len(normals)):
        covec = [sum(w * a[k] for w, a in zip(weights, normals)) for k in range(P.dim)]
        vals = [_dot(covec, c) for c, _ in pts]
        best = max(vals)
        winners = [p for (c, p), x in zip(pts, vals) if x == best]
        if len(winners) == 1:
            return winners[0]
    raise ModelError("vert_selection", "interior point not generic")


def _weight_sequence(k):
    yield (1,) * k
    for base in (2, 3, 5, 7):
        yield tuple(base ** i for i in range(k))


def phi_change_of_vertex(model: TropicalModel, chain, v: int, w: int, sigma: int) -> PhiMap:
    """Change of base vertex v -> w of the first cell of ``chain``, through sigma."""
    chain = _check_chain(model, chain)
    t1, t2 = chain[0], chain[-1]
    if not (model.is_face(v, t1) and model.is_face(w, t1)):
        raise ValueError("v and w must be vertices of the first cell")
    if not (model.dim(sigma) == model.dim_B and model.is_face(t2, sigma)):
        raise ValueError("sigma must be a maximal cell containing the last cell")
    n, N = model.dim_B, model.ambient_rank
    fd = flag_data(model, chain)
    if fd.in_discriminant:
        jump = _sub(vert_selection(model, w, t1), vert_selection(model, v, t1))
    else:
        jump = (0,) * N
    T = cotransport(model, v, w, sigma)
    cv = chart_at_vertex(model, v)
    mat = [list(row) + [0] for row in T]
    mat.append([_dot(cv.proj[k], jump) for k in range(n)] + [1])
    u = model.facet_normals[sigma]
    ev = [list(col) for col in zip(*(list(cv.proj) + [u]))]            # N x (n+1)
    cw = chart_at_vertex(model, w)
    ew = [list(col) for col in zip(*(list(cw.proj) + [u]))]
    amb = _mm(_mm(ew, mat), la.inverse(ev))
    return PhiMap(_imat(mat), _imat(amb))


# --- duality and Cayley cones -------------------------------------------------------

def legendre_dual(model: TropicalModel) -> TropicalModel:
    model._need_embedded()
    return build_reflexive_boundary(dual_polytope(model.xi))


def cayley_cone(tau: LatticePolytope, polytopes=()) -> list:
    """Generators of the cone over the Cayley polytope of tau and the given polytopes."""
    q = len(polytopes)
    rank = tau.ambient_rank
    if any(p.ambient_rank != rank for p in polytopes):
        raise ValueError("all polytopes must share the ambient lattice of tau")

    def unit(i):
        return tuple(int(i == j) for j in range(q + 1))

    gens = [tuple(v) + unit(0) for v in tau.vertices]
    for i, p in enumerate(polytopes, start=1):
        gens.extend(tuple(w) + unit(i) for w in p.vertices)
    return gens


# --- files ---------------------------------------------------------------------------

def model_to_json(model: TropicalModel) -> dict:
    if model.form == "embedded":
        return {"form": "embedded", "ambient_rank": model.ambient_rank,
                "polytope_vertices": [list(v) for v in model.xi.vertices]}
    cells = [{"id": c.id, "dim": c.dim, "vertices": [list(v) for v in c.vertices],
              "faces": sorted(model.faces_of(c.id))} for c in model.cells]
    kappa = [{"omega": w, "rho": r, "value": k} for (w, r), k in sorted(model._kappa_input.items())]
    return {"form": "abstract", "cells": cells, "kappa": kappa,
            "a": {str(k): v for k, v in sorted(model._a_override.items())}}


def model_from_json(data: dict) -> TropicalModel:
    form = data.get("form")
    if form == "embedded":
        pts = data.get("polytope_vertices")
        if not pts:
            raise ModelError("schema", "embedded model needs polytope_vertices")
        xi = LatticePolytope(pts)
        rank = data.get("ambient_rank", xi.ambient_rank)
        if rank != xi.ambient_rank:
            raise ModelError("schema", "ambient_rank does not match the vertices")
        return build_reflexive_boundary(xi)
    if form == "abstract":
        try:
            kappa = {(int(e["omega"]), int(e["rho"])): int(e["value"]) for e in data.get("kappa", [])}
            a = {int(k): int(v) for k, v in data.get("a", {}).items()}
            return build_abstract(data["cells"], kappa, a)
        except (KeyError, TypeError) as exc:
            raise ModelError("schema", f"malformed abstract model: {exc}") from None
    raise ModelError("schema", f"unknown model form {form!r}")


def load_model(path) -> TropicalModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_json(json.load(fh))


def save_model(model: TropicalModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_json(model), fh, indent=2)
