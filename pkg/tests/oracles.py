"""Independent oracles used by the test suite.

These are deliberately naive, textbook implementations written before (and
independently of) the package code, so the fast sparse routines are checked
against frozen, simple references.
"""
from __future__ import annotations

from fractions import Fraction


# -- dense Gaussian elimination (rank / kernel / solve) ----------------------

def dense_rank(mat, p: int | None = None) -> int:
    """Rank by dense row reduction; rationals if p is None else GF(p)."""
    if not mat or not mat[0]:
        return 0
    if p is None:
        rows = [[Fraction(x) for x in r] for r in mat]
    else:
        rows = [[x % p for x in r] for r in mat]
    nrows, ncols = len(rows), len(rows[0])
    rank = 0
    for col in range(ncols):
        piv = None
        for r in range(rank, nrows):
            if rows[r][col] != 0:
                piv = r
                break
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        pv = rows[rank][col]
        if p is None:
            rows[rank] = [x / pv for x in rows[rank]]
        else:
            inv = pow(pv, -1, p)
            rows[rank] = [(x * inv) % p for x in rows[rank]]
        for r in range(nrows):
            if r != rank and rows[r][col] != 0:
                f = rows[r][col]
                if p is None:
                    rows[r] = [a - f * b for a, b in zip(rows[r], rows[rank])]
                else:
                    rows[r] = [(a - f * b) % p for a, b in zip(rows[r], rows[rank])]
        rank += 1
        if rank == nrows:
            break
    return rank


def dense_kernel_dim(mat, p: int | None = None) -> int:
    if not mat or not mat[0]:
        return 0 if not mat else len(mat[0]) if not mat[0] else 0
    return len(mat[0]) - dense_rank(mat, p)


def dense_smith_invariants(mat) -> list[int]:
    """Diagonal invariants of the Smith form, naive integer algorithm."""
    m = [list(map(int, r)) for r in mat]
    if not m or not m[0]:
        return []
    nr, nc = len(m), len(m[0])
    res = []
    k = 0
    while k < min(nr, nc):
        # find nonzero entry of smallest absolute value
        best = None
        for i in range(k, nr):
            for j in range(k, nc):
                if m[i][j] and (best is None or abs(m[i][j]) < abs(m[best[0]][best[1]])):
                    best = (i, j)
        if best is None:
            break
        i, j = best
        m[k], m[i] = m[i], m[k]
        for r in range(nr):
            m[r][k], m[r][j] = m[r][j], m[r][k]
        progress = True
        while progress:
            progress = False
            p_ = m[k][k]
            for i in range(nr):
                if i != k and m[i][k]:
                    q = m[i][k] // p_
                    m[i] = [a - q * b for a, b in zip(m[i], m[k])]
                    if m[i][k]:
                        m[k], m[i] = m[i], m[k]
                        progress = True
                        break
            if progress:
                continue
            for j in range(nc):
                if j != k and m[k][j]:
                    q = m[k][j] // p_
                    for r in range(nr):
                        m[r][j] -= q * m[r][k]
                    if m[k][j]:
                        for r in range(nr):
                            m[r][k], m[r][j] = m[r][j], m[r][k]
                        progress = True
                        break
            if progress:
                continue
            # divisibility of the rest
            p_ = m[k][k]
            for i in range(k + 1, nr):
                for j in range(k + 1, nc):
                    if m[i][j] % p_:
                        m[k] = [a + b for a, b in zip(m[k], m[i])]
                        progress = True
                        break
                if progress:
                    break
        if m[k][k] < 0:
            m[k] = [-a for a in m[k]]
        res.append(m[k][k])
        k += 1
    return res


# -- dense cochain cohomology ------------------------------------------------

def dense_cohomology_dims(dims: dict, diffs: dict, p: int | None = None) -> dict:
    """H^q dims of a cochain complex given dense differential matrices.

    dims: degree -> dimension; diffs: degree q -> dense matrix of d^q
    (shape dims[q+1] x dims[q]).
    """
    out = {}
    for q, n in dims.items():
        dq = diffs.get(q)
        r_out = dense_rank(dq, p) if dq else 0
        dprev = diffs.get(q - 1)
        r_in = dense_rank(dprev, p) if dprev else 0
        out[q] = n - r_out - r_in
    return out


# -- two-line mixed complex oracle -------------------------------------------

def two_line_equivariant_dims(w: int, d: int, K: int) -> dict:
    """Equivariant module dims of the mixed complex of one free-orbit circle
    component: M has dims 1 in degrees 0 and 1 (its cohomology), b = 0, and
    B: M^1 -> M^0 equal to multiplication by the winding number w != 0.

    Computed naively: build hfp of the shifted dual over Q and row-reduce.
    The module is torsion: a single bar of u-exponent 1 (for w != 0 over Q).
    Returns degree -> dim of H^q RHom_{K[eps]}(M, K[-d]) truncated at u^{K+1}.
    """
    assert w != 0
    # dual-shift by d: degrees d-1 and d, with dual B: (M_dual)^{d-1+1}... the
    # only nonzero operator is degree d -> d-1, scaled by w (transpose of B).
    # hfp piece at degree n: slots j with n-2j in {d-1, d}.
    # delta(x u^j) = u^{j+1} * (B x); so the complex splits into 2-term pieces
    # (d-1)+2j <- wait, delta: degree +1: x at d-1, slot j -> B-image at d...
    # Work it out concretely as matrices per degree.
    degs = {}
    for j in range(K + 1):
        for q in (d - 1, d):
            degs.setdefault(q + 2 * j, []).append((q, j))
    dims = {}
    for n, gens in degs.items():
        # delta on generator (q=d, j): B x lands in degree d-1 slot j+1 -> total n+1
        # generator (q=d-1, j): delta = 0 (b=0, B on degree d-1 is 0)
        rows = []  # map to degree n+1 basis
        tgt = degs.get(n + 1, [])
        for q, j in gens:
            row = [0] * len(tgt)
            if q == d and j + 1 <= K and (d - 1, j + 1) in tgt:
                row[tgt.index((d - 1, j + 1))] = w
            rows.append(row)
        dims[n] = rows
    out = {}
    for n, gens in degs.items():
        mat_out = dims[n]
        # transpose: dense_rank of map out of degree n
        r_out = dense_rank(mat_out) if mat_out and mat_out[0] else 0
        mat_in = dims.get(n - 1)
        r_in = 0
        if mat_in and mat_in[0]:
            r_in = dense_rank(mat_in)
        out[n] = len(gens) - r_out - r_in
    return {n: v for n, v in out.items() if v}


# -- analytic circle oracle --------------------------------------------------

def circle_component_count(T, L) -> int:
    """Connected components of the length-filtered free loop space of a circle
    of circumference L at filtration T: windings w with |w| * L <= T."""
    return 2 * int(Fraction(T) / Fraction(L)) + 1


def circle_noneq_dims(T, L, d: int = 1) -> dict:
    """Non-equivariant invariant dims: H^q = H_{d-q} of the sublevel set,
    which is a disjoint union of circle_component_count(T, L) circles."""
    c = circle_component_count(T, L)
    return {0: c, 1: c}


def circle_s1_oracle(T, L, K: int) -> dict:
    """S^1-equivariant dims for the circle at filtration T, u-truncation K.

    Constant component: trivial S^1-action on a circle -> two free towers with
    generators in degrees 0 and 1.  Each pair of winding +-w components
    (|w|*L <= T, w != 0): free orbits -> one exponent-1 torsion bar each, in
    the degree given by the two-line oracle.
    """
    dims: dict[int, int] = {}
    for j in range(K + 1):
        for g in (0, 1):
            dims[g + 2 * j] = dims.get(g + 2 * j, 0) + 1
    wmax = int(Fraction(T) / Fraction(L))
    for w in range(1, wmax + 1):
        for sgn in (1, -1):
            for n, v in two_line_equivariant_dims(sgn * w, 1, K).items():
                dims[n] = dims.get(n, 0) + v
    return dims
