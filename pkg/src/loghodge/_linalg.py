"""Exact linear algebra over the rationals and the integers.

Small problems (subspaces of exterior powers, charts) run on plain
``Fraction`` rows.  Large ranks, such as the Jacobian matrices, are handed
to FLINT's fraction-free integer elimination, which is exact.
"""
from fractions import Fraction
from itertools import combinations
from math import gcd

import flint

__all__ = [
    "as_fraction_rows", "rref", "rank", "complex_ranks", "modular_rank", "nullspace", "solve_in_rows",
    "det", "mat_mul", "mat_vec", "transpose", "identity", "inverse",
    "primitive", "integer_rows", "column_reduce", "unimodular_completion",
    "saturated_basis", "wedge_basis", "wedge_vectors", "wedge_matrix",
]


def as_fraction_rows(rows):
    return [[Fraction(x) for x in row] for row in rows]


def transpose(rows, ncols=None):
    if not rows:
        return [[] for _ in range(ncols or 0)]
    return [list(col) for col in zip(*rows)]


def identity(n):
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


def mat_mul(a, b):
    bt = transpose(b)
    return [[sum((x * y for x, y in zip(row, col)), Fraction(0)) for col in bt] for row in a]


def mat_vec(a, v):
    return [sum((x * y for x, y in zip(row, v)), Fraction(0)) for row in a]


def rref(rows, ncols=None):
    """Reduced row echelon form.  Returns (nonzero rows, pivot columns)."""
    m = as_fraction_rows(rows)
    if ncols is None:
        ncols = len(m[0]) if m else 0
    pivots = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def integer_rows(rows):
    """Scale every row by the lcm of its denominators."""
    out = []
    for row in rows:
        if all(type(x) is int for x in row):
            out.append(list(row))
            continue
        den = 1
        for x in row:
            d = x.denominator
            if d != 1:
                den = den * d // gcd(den, d)
        if den == 1:
            out.append([int(x.numerator) for x in row])
        else:
            out.append([int(x.numerator * (den // x.denominator)) for x in row])
    return out


# Two fixed primes below 2**62 for ``modular_rank``.
MODULAR_PRIMES = (4611686018427387847, 4611686018427387817)


def rank(rows, ncols=None):
    """Exact rank of a rational matrix given as a list of rows.

    Tiny matrices are reduced over Fraction, everything else goes through
    FLINT's fraction-free integer elimination.
    """
    rows = [row for row in rows if any(row)]
    if not rows:
        return 0
    if len(rows) * len(rows[0]) <= 400:
        return len(rref(rows)[0])
    mat = flint.fmpz_mat(integer_rows(rows))
    if mat.nrows() < mat.ncols():
        mat = mat.transpose()
    return mat.rank()


def _mod(x, p):
    if type(x) is int:
        return x % p
    return x.numerator * pow(x.denominator, -1, p) % p


def complex_ranks(sizes, differentials):
    """Exact ranks of the differentials of a cochain complex.

    ``differentials[l]`` maps term l to term l + 1 as a sparse dict
    {(row, col): value}.  The complex is split into connected subcomplexes.
    For each one the ranks are first computed modulo a large prime.  A
    modular rank never exceeds the rational one, so modular cohomology
    bounds the true cohomology from above at every position.  When the
    modular cohomology of a subcomplex sits in at most one position, every
    rank deficit is forced to vanish and the modular ranks are exact.
    Other subcomplexes fall back to exact elimination.  Subcomplexes with
    identical content are ranked once.
    """
    _check_composition(differentials)
    parent = {}

    def find(x):
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for l, d in enumerate(differentials):
        for (i, j), v in d.items():
            if v:
                a, b = find((l + 1, i)), find((l, j))
                if a != b:
                    parent[a] = b
    # component -> l -> [(row, col, value)]
    comps = {}
    for l, d in enumerate(differentials):
        for (i, j), v in d.items():
            if v:
                comps.setdefault(find((l, j)), {}).setdefault(l, []).append((i, j, v))
    total = [0] * len(differentials)
    seen = {}
    p = MODULAR_PRIMES[0]
    for blocks in comps.values():
        dense, key = {}, []
        shape = {}
        for l in sorted(blocks):
            items = blocks[l]
            rows = sorted({i for i, _, _ in items})
            cols = sorted({j for _, j, _ in items})
            ri = {r: k for k, r in enumerate(rows)}
            ci = {c: k for k, c in enumerate(cols)}
            entries = tuple(sorted((ri[i], ci[j], v) for i, j, v in items))
            dense[l] = (len(rows), len(cols), entries)
            key.append((l, len(rows), len(cols), entries))
        # term sizes inside the component, needed for the concentration test
        for l in sorted(blocks):
            shape[l] = dense[l][1]
            shape[l + 1] = dense[l][0]
        key = tuple(key)
        if key not in seen:
            seen[key] = _component_ranks(dense, shape, p)
        for l, r in seen[key].items():
            total[l] += r
    return total


def _component_ranks(blocks, shape, p):
    ranks = {}
    for l, (nr, nc, entries) in blocks.items():
        m = flint.nmod_mat(nr, nc, p)
        for i, j, v in entries:
            m[i, j] = _mod(v, p)
        ranks[l] = m.rank()
    live = [t for t, size in shape.items()
            if size - ranks.get(t, 0) - ranks.get(t - 1, 0) > 0]
    if len(live) <= 1:
        return ranks
    out = {}
    for l, (nr, nc, entries) in blocks.items():
        rows = [[0] * nc for _ in range(nr)]
        for i, j, v in entries:
            rows[i][j] = v
        out[l] = rank(rows)
    return out


def _check_composition(differentials):
    for l in range(len(differentials) - 1):
        by_col = {}
        for (k, i), w in differentials[l + 1].items():
            by_col.setdefault(i, []).append((k, w))
        acc = {}
        for (i, j), v in differentials[l].items():
            for k, w in by_col.get(i, ()):
                acc[(k, j)] = acc.get((k, j), 0) + w * v
        if any(acc.values()):
            raise ValueError(f"differentials {l} and {l + 1} do not compose to zero")

def modular_rank(ints):
    """Rank modulo large primes: a lower bound for the rational rank, exact when full."""
    full = min(len(ints), len(ints[0]))
    best = 0
    for p in MODULAR_PRIMES:
        best = max(best, flint.nmod_mat(ints, p).rank())
        if best == full:
            break
    return best


def nullspace(rows, ncols):
    """Basis (list of vectors) of {x : rows @ x = 0}."""
    red, pivots = rref(rows, ncols)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for row, p in zip(red, pivots):
            v[p] = -row[f]
        basis.append(v)
    return basis


def solve_in_rows(basis, target):
    """Coefficients c with sum c_i basis_i = target, or None."""
    if not basis:
        return [] if not any(target) else None
    n = len(basis)
    aug = [list(col) + [t] for col, t in zip(transpose(basis), target)]
    red, pivots = rref(aug, n + 1)
    if n in pivots:
        return None
    sol = [Fraction(0)] * n
    for row, p in zip(red, pivots):
        sol[p] = row[n]
    return sol


def det(rows):
    m = as_fraction_rows(rows)
    n = len(m)
    result = Fraction(1)
    for c in range(n):
        p = next((i for i in range(c, n) if m[i][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            m[c], m[p] = m[p], m[c]
            result = -result
        result *= m[c][c]
        for i in range(c + 1, n):
            f = m[i][c] / m[c][c]
            if f:
                m[i] = [x - f * y for x, y in zip(m[i], m[c])]
    return result


def inverse(rows):
    n = len(rows)
    aug = [list(r) + e for r, e in zip(as_fraction_rows(rows), identity(n))]
    red, pivots = rref(aug, 2 * n)
    if pivots[:n] != list(range(n)) or len(red) < n:
        raise ValueError("matrix is singular")
    return [row[n:] for row in red]


def primitive(vec):
    """Scale a rational vector to the primitive integer vector on its ray."""
    ints = integer_rows([vec])[0]
    g = 0
    for x in ints:
        g = gcd(g, x)
    if g == 0:
        return [0] * len(ints)
    return [x // g for x in ints]


def column_reduce(rows):
    """Unimodular V with rows @ V = [H | 0], H lower triangular of full rank.

    ``rows`` must be integer and linearly independent.  Returns V as a list
    of integer rows.
    """
    a = [list(map(int, r)) for r in rows]
    n = len(a[0])
    v = [[int(i == j) for j in range(n)] for i in range(n)]

    def colop(i, j, p, q, r, s):
        # (col_i, col_j) <- (p col_i + q col_j, r col_i + s col_j)
        for mat in (a, v):
            for row in mat:
                x, y = row[i], row[j]
                row[i], row[j] = p * x + q * y, r * x + s * y

    for k, _ in enumerate(a):
        for j in range(k + 1, n):
            x, y = a[k][k], a[k][j]
            if y == 0:
                continue
            # extended Euclid on (x, y)
            old_r, r_ = x, y
            old_s, s = 1, 0
            old_t, t = 0, 1
            while r_ != 0:
                q = old_r // r_
                old_r, r_ = r_, old_r - q * r_
                old_s, s = s, old_s - q * s
                old_t, t = t, old_t - q * t
            g = old_r
            colop(k, j, old_s, old_t, -y // g, x // g)
        if a[k][k] == 0:
            j = next((j for j in range(k + 1, n) if a[k][j] != 0), None)
            if j is None:
                raise ValueError("rows are linearly dependent")
            colop(k, j, 0, 1, 1, 0)
    return v


def unimodular_completion(rows):
    """Unimodular B (columns = basis of Z^n) whose first k columns span the
    saturation of the row space of the k independent integer ``rows``.

    Returns (B, B_inverse) as integer matrices (lists of rows).
    """
    n = len(rows[0])
    v = column_reduce(rows)
    vinv = [[int(x) for x in r] for r in inverse(v)]
    # rows of vinv form a basis; the first k of them span the saturation
    basis = transpose(vinv)
    return [[int(x) for x in r] for r in basis], [[int(x) for x in r] for r in v]


def saturated_basis(rows):
    """Integer basis of span(rows) intersected with Z^n."""
    red, _ = rref(rows)
    if not red:
        return []
    ints = integer_rows(red)
    b, _ = unimodular_completion(ints)
    k = len(ints)
    return [list(c) for c in transpose(b)[:k]]


def wedge_basis(n, r):
    return list(combinations(range(n), r))


def wedge_vectors(vectors, n):
    """Coordinates of v_1 ^ ... ^ v_r in the basis ``wedge_basis(n, r)``."""
    r = len(vectors)
    out = []
    for idx in combinations(range(n), r):
        out.append(det([[vec[i] for i in idx] for vec in vectors]) if r else Fraction(1))
    return out


def wedge_matrix(a, r):
    """Matrix of the induced map on r-th exterior powers (acting on columns)."""
    nrows, ncols = len(a), len(a[0]) if a else 0
    rows_idx = list(combinations(range(nrows), r))
    cols_idx = list(combinations(range(ncols), r))
    if r == 0:
        return [[Fraction(1)]]
    return [[det([[a[i][j] for j in J] for i in I]) for J in cols_idx] for I in rows_idx]
