"""Lattice polytopes, fans, subspaces and exterior powers.

Everything here is exact: coordinates are Python integers, linear algebra
runs over ``fractions.Fraction``.  Polytopes are stored through their
extreme points (lexicographically sorted) together with an H-description in
a lattice basis of their affine hull, so lower-dimensional polytopes such as
faces or Newton polytopes sitting inside a larger lattice are handled the
same way as full-dimensional ones.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations, product
from math import comb, gcd
from typing import Iterable, Sequence

from . import _linalg as la

__all__ = [
    "LatticePolytope", "PolyhedralFan", "Subspace",
    "lattice_points", "relint_points", "dilate", "faces", "face_poset",
    "dual_polytope", "is_reflexive", "integral_length",
    "is_simplex", "is_standard", "is_elementary",
    "normal_fan", "bend_data", "translation_normal_form", "same_up_to_translation",
    "span_of", "intersect", "subspace_sum", "quotient_dim", "perp",
    "wedge_power", "ideal_degree_piece", "wedge_product",
    "parse_polytope_text", "format_polytope_text",
]

Vector = tuple


def _vec(p) -> tuple:
    return tuple(int(x) for x in p)


class LatticePolytope:
    """Convex hull of finitely many integer points.

    Redundant input points are discarded; ``vertices`` holds the extreme
    points in lexicographic order.
    """

    def __init__(self, points: Iterable[Sequence[int]]):
        pts = sorted({_vec(p) for p in points})
        if not pts:
            raise ValueError("a polytope needs at least one point")
        self.ambient_rank = len(pts[0])
        if any(len(p) != self.ambient_rank for p in pts):
            raise ValueError("points of different ambient rank")
        self._setup_frame(pts)
        local = [self.to_local(p) for p in pts]
        self._facets = _facets_full_dim(local, self.dim)
        if self.dim == 0:
            keep = pts
        else:
            keep = []
            for p, c in zip(pts, local):
                normals = [a for a, b in self._facets if _dot(a, c) == b]
                if normals and la.rank(normals) == self.dim:
                    keep.append(p)
        self.vertices = tuple(keep)
        self._local_vertices = [self.to_local(v) for v in self.vertices]

    def _setup_frame(self, pts):
        self.origin = pts[0]
        diffs = [[a - b for a, b in zip(p, self.origin)] for p in pts[1:]]
        red, _ = la.rref(diffs, self.ambient_rank)
        self.dim = len(red)
        if self.dim == 0:
            self._basis, self._basis_inv = [], []
            return
        b, binv = la.unimodular_completion(la.integer_rows(red))
        self._basis = [list(col) for col in la.transpose(b)[: self.dim]]
        self._basis_inv = binv

    def to_local(self, p) -> tuple:
        """Integer coordinates of a point of the affine hull in a lattice basis."""
        d = [a - b for a, b in zip(p, self.origin)]
        coords = [sum(row[j] * d[j] for j in range(self.ambient_rank)) for row in self._inv_rows()]
        return tuple(coords)

    def _inv_rows(self):
        # rows of B^{-1} restricted to the first dim coordinates
        if not hasattr(self, "_inv_cache"):
            binv = self._basis_inv
            if not binv:
                self._inv_cache = []
            else:
                # basis vectors are rows of V^{-1}, so coordinates are x @ V
                self._inv_cache = [list(r) for r in la.transpose(binv)[: self.dim]]
        return self._inv_cache

    def from_local(self, c) -> tuple:
        out = list(self.origin)
        for ci, bvec in zip(c, self._basis):
            for j in range(self.ambient_rank):
                out[j] += ci * bvec[j]
        return tuple(out)

    # --- basic accessors -------------------------------------------------
    @property
    def facets(self):
        """Inequalities a.c <= b in local coordinates, with vertex index sets."""
        out = []
        for a, b in self._facets:
            idx = frozenset(i for i, c in enumerate(self._local_vertices) if _dot(a, c) == b)
            out.append((a, b, idx))
        return out

    @cached_property
    def ambient_inequalities(self):
        """Facet inequalities a.x <= b in ambient coordinates (full-dimensional only)."""
        if self.dim != self.ambient_rank:
            raise ValueError("polytope is not full-dimensional")
        rows = self._inv_rows()
        out = []
        for a, b in self._facets:
            amb = [sum(a[i] * rows[i][j] for i in range(self.dim)) for j in range(self.ambient_rank)]
            out.append((tuple(amb), b + _dot(amb, self.origin)))
        return out

    def contains(self, p) -> bool:
        return self._locate(p, strict=False)

    def _locate(self, p, strict):
        d = [a - b for a, b in zip(p, self.origin)]
        if self.dim < self.ambient_rank:
            sol = la.solve_in_rows(self._basis, d) if self._basis else ([] if not any(d) else None)
            if sol is None or any(x.denominator != 1 for x in sol):
                return False
            c = [int(x) for x in sol]
        else:
            c = self.to_local(p)
        if strict:
            return all(_dot(a, c) < b for a, b in self._facets)
        return all(_dot(a, c) <= b for a, b in self._facets)

    def __eq__(self, other):
        return isinstance(other, LatticePolytope) and self.vertices == other.vertices

    def __hash__(self):
        return hash(self.vertices)

    def __repr__(self):
        return f"LatticePolytope({list(self.vertices)})"

    def translate(self, t) -> "LatticePolytope":
        return LatticePolytope([tuple(a + b for a, b in zip(v, t)) for v in self.vertices])

    def scale_down(self, k: int) -> "LatticePolytope":
        """Divide by a positive integer after moving the lexmin vertex to 0."""
        base = self.vertices[0]
        pts = []
        for v in self.vertices:
            d = [a - b for a, b in zip(v, base)]
            if any(x % k for x in d):
                raise ValueError(f"polytope is not divisible by {k}")
            pts.append(tuple(x // k for x in d))
        return LatticePolytope(pts)


def _dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def _facets_full_dim(points, d):
    """Facet inequalities (a, b) with a primitive and a.x <= b, for points spanning Z^d."""
    if d == 0:
        return []
    if d == 1:
        xs = [p[0] for p in points]
        return [((1,), max(xs)), ((-1,), -min(xs))]
    seen = {}
    for combo in combinations(points, d):
        base = combo[0]
        diffs = [[a - b for a, b in zip(p, base)] for p in combo[1:]]
        ker = la.nullspace(diffs, d)
        if len(ker) != 1:
            continue
        a = la.primitive(ker[0])
        b = _dot(a, base)
        vals = [_dot(a, p) for p in points]
        if all(v <= b for v in vals):
            seen[tuple(a)] = b
        elif all(v >= b for v in vals):
            seen[tuple(-x for x in a)] = -b
    return sorted(seen.items())


# --- enumeration -------------------------------------------------------------

def lattice_points(P: LatticePolytope) -> list:
    """All integer points of P in lexicographic order."""
    return _scan(P, strict=False)


def relint_points(P: LatticePolytope) -> list:
    """Integer points in the relative interior of P."""
    if P.dim == 0:
        return [P.vertices[0]]
    return _scan(P, strict=True)


def _scan(P, strict):
    if P.dim == 0:
        return [] if strict else [P.vertices[0]]
    loc = P._local_vertices
    lo = [min(c[i] for c in loc) for i in range(P.dim)]
    hi = [max(c[i] for c in loc) for i in range(P.dim)]
    out = []
    facets = P._facets
    for c in product(*(range(a, b + 1) for a, b in zip(lo, hi))):
        if strict:
            ok = all(_dot(a, c) < b for a, b in facets)
        else:
            ok = all(_dot(a, c) <= b for a, b in facets)
        if ok:
            out.append(P.from_local(c))
    return sorted(out)


def dilate(P: LatticePolytope, l: int) -> LatticePolytope:
    if l < 0:
        raise ValueError("dilation factor must be nonnegative")
    return LatticePolytope([tuple(l * x for x in v) for v in P.vertices])


# --- faces -------------------------------------------------------------------

def face_poset(P: LatticePolytope) -> dict:
    """Map from vertex-index frozensets to face dimension, P itself included."""
    n = len(P.vertices)
    top = frozenset(range(n))
    found = {top}
    frontier = [f[2] for f in P.facets]
    found.update(frontier)
    while frontier:
        new = []
        for a, b in combinations(frontier, 2):
            c = a & b
            if c and c not in found:
                found.add(c)
                new.append(c)
        for a in frontier:
            for b in list(found):
                c = a & b
                if c and c not in found:
                    found.add(c)
                    new.append(c)
        frontier = new
    return {f: _affine_dim([P.vertices[i] for i in f]) for f in found}


def _affine_dim(points):
    base = points[0]
    return la.rank([[a - b for a, b in zip(p, base)] for p in points[1:]]) if len(points) > 1 else 0


def faces(P: LatticePolytope, k: int) -> list:
    """Faces of dimension k as (vertex indices, polytope) pairs, sorted by indices."""
    if not 0 <= k <= P.dim:
        raise ValueError(f"face dimension {k} out of range 0..{P.dim}")
    out = []
    for idx, d in face_poset(P).items():
        if d == k:
            ids = tuple(sorted(idx))
            out.append((ids, LatticePolytope([P.vertices[i] for i in ids])))
    return sorted(out, key=lambda t: t[0])


# --- duality and predicates --------------------------------------------------

def dual_polytope(P: LatticePolytope) -> LatticePolytope:
    """{y : <y, x> >= -1 for all x in P}, required to be a lattice polytope."""
    verts = _dual_vertices(P)
    if any(x.denominator != 1 for v in verts for x in v):
        raise ValueError("dual polytope is not a lattice polytope")
    return LatticePolytope([tuple(int(x) for x in v) for v in verts])


def _dual_vertices(P):
    if P.dim != P.ambient_rank:
        raise ValueError("not full-dimensional around origin")
    ineq = P.ambient_inequalities
    if any(b <= 0 for _, b in ineq):
        raise ValueError("not full-dimensional around origin")
    return [tuple(Fraction(-x, b) for x in a) for a, b in ineq]


def is_reflexive(P: LatticePolytope) -> bool:
    try:
        verts = _dual_vertices(P)
    except ValueError:
        return False
    return all(x.denominator == 1 for v in verts for x in v)


def integral_length(a, b) -> int:
    g = 0
    for x, y in zip(a, b):
        g = gcd(g, abs(y - x))
    return g


def is_simplex(P: LatticePolytope) -> bool:
    return len(P.vertices) == P.dim + 1


def _need_simplex(P):
    if not is_simplex(P):
        raise ValueError("input is not a simplex")


def is_standard(P: LatticePolytope) -> bool:
    """True iff no dilate nP with 1 <= n <= dim P has interior lattice points."""
    _need_simplex(P)
    if P.dim == 0:
        return True
    return all(not relint_points(dilate(P, n)) for n in range(1, P.dim + 1))


def is_elementary(P: LatticePolytope) -> bool:
    """True iff the only lattice points of P are its vertices."""
    _need_simplex(P)
    return len(lattice_points(P)) == len(P.vertices)


def translation_normal_form(P: LatticePolytope) -> tuple:
    base = P.vertices[0]
    return tuple(tuple(a - b for a, b in zip(v, base)) for v in P.vertices)


def same_up_to_translation(P: LatticePolytope, Q: LatticePolytope) -> bool:
    return translation_normal_form(P) == translation_normal_form(Q)


# --- fans --------------------------------------------------------------------

@dataclass(frozen=True)
class PolyhedralFan:
    """A fan given by maximal cones and the walls between adjacent ones.

    Cones are tuples of integer generators.  ``walls`` holds triples
    ``(i, j, generators)`` where i and j index ``maximal_cones``.
    """
    ambient_rank: int
    maximal_cones: tuple
    walls: tuple
    complete: bool = True
    labels: tuple = field(default=())

    def __post_init__(self):
        if self.complete:
            count = {}
            for i, j, _ in self.walls:
                if i == j:
                    raise ValueError("a wall must separate two distinct cones")
                count[i] = count.get(i, 0) + 1
                count[j] = count.get(j, 0) + 1
            seen = {0} if self.maximal_cones else set()
            stack = list(seen)
            adj = {}
            for i, j, _ in self.walls:
                adj.setdefault(i, []).append(j)
                adj.setdefault(j, []).append(i)
            while stack:
                x = stack.pop()
                for y in adj.get(x, []):
                    if y not in seen:
                        seen.add(y)
                        stack.append(y)
            if len(seen) != len(self.maximal_cones):
                raise ValueError("fan adjacency graph is not connected")


def normal_fan(P: LatticePolytope) -> PolyhedralFan:
    """Outer normal fan of P in the dual of P's own lattice.

    Maximal cones are indexed like ``P.vertices``; walls correspond to edges.
    """
    facets = P.facets
    cones = []
    for i in range(len(P.vertices)):
        cones.append(tuple(tuple(a) for a, _, idx in facets if i in idx))
    walls = []
    if P.dim >= 1:
        for ids, _ in faces(P, 1):
            i, j = ids
            gens = tuple(tuple(a) for a, _, idx in facets if i in idx and j in idx)
            walls.append((i, j, gens))
    return PolyhedralFan(P.dim, tuple(cones), tuple(walls), True, tuple(P.vertices))


def bend_data(P: LatticePolytope) -> dict:
    """Wall index -> integral length of the matching edge of P."""
    fan = normal_fan(P)
    out = {}
    for w, (i, j, _) in enumerate(fan.walls):
        out[w] = integral_length(P._local_vertices[i], P._local_vertices[j])
    return out


# --- subspaces ---------------------------------------------------------------

class Subspace:
    """A linear subspace of Q^n kept in reduced row echelon form."""

    __slots__ = ("ambient_rank", "basis")

    def __init__(self, ambient_rank: int, vectors=()):
        self.ambient_rank = ambient_rank
        vecs = [list(v) for v in vectors]
        if any(len(v) != ambient_rank for v in vecs):
            raise ValueError("incompatible ambient ranks")
        red, _ = la.rref(vecs, ambient_rank) if vecs else ([], [])
        self.basis = tuple(tuple(r) for r in red)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def contains(self, v) -> bool:
        return la.solve_in_rows([list(b) for b in self.basis], list(v)) is not None

    def contains_space(self, other: "Subspace") -> bool:
        return all(self.contains(v) for v in other.basis)

    def coordinates(self, v):
        sol = la.solve_in_rows([list(b) for b in self.basis], list(v))
        if sol is None:
            raise ValueError("vector not in subspace")
        return sol

    def __eq__(self, other):
        return isinstance(other, Subspace) and self.ambient_rank == other.ambient_rank and self.basis == other.basis

    def __hash__(self):
        return hash((self.ambient_rank, self.basis))

    def __repr__(self):
        return f"Subspace(rank={self.ambient_rank}, dim={self.dim})"


def span_of(vectors, ambient_rank: int) -> Subspace:
    return Subspace(ambient_rank, vectors)


def subspace_sum(a: Subspace, b: Subspace) -> Subspace:
    _same(a, b)
    return Subspace(a.ambient_rank, list(a.basis) + list(b.basis))


def perp(s: Subspace) -> Subspace:
    """Annihilator of s in the dual space (standard dual basis)."""
    if s.dim == 0:
        return Subspace(s.ambient_rank, [[int(i == j) for j in range(s.ambient_rank)] for i in range(s.ambient_rank)])
    return Subspace(s.ambient_rank, la.nullspace([list(b) for b in s.basis], s.ambient_rank))


def intersect(a: Subspace, b: Subspace) -> Subspace:
    _same(a, b)
    return perp(subspace_sum(perp(a), perp(b)))


def quotient_dim(small: Subspace, big: Subspace) -> int:
    if not big.contains_space(small):
        raise ValueError("first subspace is not contained in the second")
    return big.dim - small.dim


def _same(a, b):
    if a.ambient_rank != b.ambient_rank:
        raise ValueError("incompatible ambient ranks")


def wedge_power(s: Subspace, r: int) -> Subspace:
    n = s.ambient_rank
    vecs = [la.wedge_vectors([list(s.basis[i]) for i in idx], n) for idx in combinations(range(s.dim), r)]
    return Subspace(comb(n, r), vecs)


def ideal_degree_piece(T: Subspace, W: Subspace, t: int, l: int) -> Subspace:
    """span{alpha ^ beta : alpha in wedge^t T, beta in wedge^(l-t) W} in wedge^l."""
    if not W.contains_space(T):
        raise ValueError("T is not contained in W")
    if t > T.dim or l < t:
        raise ValueError("degree out of range")
    n = W.ambient_rank
    tb = [list(v) for v in T.basis]
    wb = [list(v) for v in W.basis]
    vecs = []
    for a in combinations(range(T.dim), t):
        for b in combinations(range(W.dim), l - t):
            vecs.append(la.wedge_vectors([tb[i] for i in a] + [wb[j] for j in b], n))
    return Subspace(comb(n, l), vecs)


def wedge_product(alpha, a: int, beta, b: int, n: int) -> list:
    """Product of coordinate vectors alpha in wedge^a and beta in wedge^b of Q^n."""
    idx_a = la.wedge_basis(n, a)
    idx_b = la.wedge_basis(n, b)
    idx_c = {I: k for k, I in enumerate(la.wedge_basis(n, a + b))}
    out = [Fraction(0)] * len(idx_c)
    for I, x in zip(idx_a, alpha):
        if not x:
            continue
        for J, y in zip(idx_b, beta):
            if not y or set(I) & set(J):
                continue
            merged = I + J
            inversions = sum(1 for i in I for j in J if i > j)
            sign = -1 if inversions % 2 else 1
            out[idx_c[tuple(sorted(merged))]] += sign * x * y
    return out


# --- text format ---------------------------------------------------------------

def parse_polytope_text(text: str) -> LatticePolytope:
    """One vertex per line, whitespace separated integers, '#' comments."""
    pts = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            pts.append(tuple(int(tok) for tok in line.split()))
        except ValueError:
            raise ValueError(f"line {lineno}: expected integers, got {raw.strip()!r}") from None
    if not pts:
        raise ValueError("no vertices found")
    if len({len(p) for p in pts}) != 1:
        raise ValueError("vertices have different lengths")
    return LatticePolytope(pts)


def format_polytope_text(P: LatticePolytope) -> str:
    return "".join(" ".join(str(x) for x in v) + "\n" for v in P.vertices)
