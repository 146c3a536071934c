"""Pre-cocyclic complexes and the cyclic cochain mixed complex.

A pre-cocyclic complex is a family of cochain complexes C_1, C_2, ... with
coface chain maps d_i: C_l -> C_{l+1} (i = 0..l) and degree-0 automorphisms
t: C_l -> C_l (sign included) subject to:

    d_j d_i = d_i d_{j-1}                (i < j)
    t d_i   = - d_{i-1} t                (1 <= i <= l, t on the target level)
    t d_0   = (-1)^l d_l                 (d_i out of C_l)
    t^l     = id on C_l

Levels are totalized with level l placed in cosimplicial degree l-1; the two
alternating coface sums b (all cofaces) and b' (without the top one) give two
totalization differentials, and the mixed complex is the cone of (1-t) from
the b-column to the b'-column with the levelwise norm as the second
differential.  Truncation at a level cap is exact: all operators either
preserve or raise the level, so dropping high levels is a quotient complex.
"""
from __future__ import annotations

from .domains import Domain
from .sparse import SparseMatrix
from .chain import CochainComplex, GradedMap, verify_complex
from .mixed import MixedComplex, verify_mixed


class PreCocyclicComplex:
    def __init__(self, domain: Domain, levels: dict, cofaces: dict, t: dict):
        """levels: l -> CochainComplex (l = 1..max);
        cofaces: l -> [d_0, ..., d_l] with d_i: C_l -> C_{l+1} (GradedMap, deg 0);
        t: l -> GradedMap C_l -> C_l (degree 0, sign included)."""
        self.domain = domain
        self.levels = dict(levels)
        self.cofaces = {l: list(ms) for l, ms in cofaces.items()}
        self.t = dict(t)
        self.max_level = max(levels) if levels else 0
        for l in range(1, self.max_level):
            assert len(self.cofaces.get(l, [])) == l + 1, (
                f"level {l} needs cofaces d_0..d_{l}"
            )

    def level(self, l: int) -> CochainComplex:
        return self.levels[l]

    def coface(self, l: int, i: int) -> GradedMap:
        return self.cofaces[l][i]

    def t_op(self, l: int) -> GradedMap:
        return self.t[l]


def validate_relations(P: PreCocyclicComplex) -> dict:
    """Check every pre-cocyclic identity as exact matrix equalities.

    Returns {"ok": bool, "failures": [(kind, level, i, j), ...]} with the
    failures in discovery order."""
    failures = []
    L = P.max_level
    for l in range(1, L + 1):
        if verify_complex(P.level(l)):
            failures.append(("complex", l, None, None))
        tl = P.t_op(l)
        if tl.verify():
            failures.append(("t-chain-map", l, None, None))
        power = tl
        for _ in range(l - 1):
            power = tl.compose(power)
        if not (power - GradedMap.identity(P.level(l))).is_zero():
            failures.append(("t-order", l, None, None))
    for l in range(1, L):
        for i, di in enumerate(P.cofaces[l]):
            if di.verify():
                failures.append(("coface-chain-map", l, i, None))
    # cosimplicial identity d_j d_i = d_i d_{j-1} for i < j
    for l in range(1, L - 1):
        for j in range(l + 2):
            for i in range(j):
                lhs = P.coface(l + 1, j).compose(P.coface(l, i))
                rhs = P.coface(l + 1, i).compose(P.coface(l, j - 1))
                if not (lhs - rhs).is_zero():
                    failures.append(("cosimplicial", l, i, j))
    # signed cyclic relations against the target-level t
    for l in range(1, L):
        D = P.domain
        tl1 = P.t_op(l + 1)
        tl = P.t_op(l)
        for i in range(1, l + 1):
            lhs = tl1.compose(P.coface(l, i))
            rhs = P.coface(l, i - 1).compose(tl).scale(D.neg(D.one()))
            if not (lhs - rhs).is_zero():
                failures.append(("cyclic", l, i, None))
        sign = D.one() if l % 2 == 0 else D.neg(D.one())
        lhs = tl1.compose(P.coface(l, 0))
        rhs = P.coface(l, l).scale(sign)
        if not (lhs - rhs).is_zero():
            failures.append(("cyclic-wrap", l, 0, None))
    return {"ok": not failures, "failures": failures}


def _alt_sum(P: PreCocyclicComplex, l: int, top: int) -> GradedMap:
    """sum_{i=0..top} (-1)^i d_i out of level l."""
    D = P.domain
    out = None
    for i in range(top + 1):
        term = P.coface(l, i)
        if i % 2 == 1:
            term = term.scale(D.neg(D.one()))
        out = term if out is None else out + term
    assert out is not None
    return out


def hochschild_operators(P: PreCocyclicComplex, level: int):
    """Operators attached to a level: (b, b', B_raw).

    b  = sum_{i=0}^{l-1} (-1)^i d_i : C_{l-1} -> C_l   (all cofaces)
    b' = sum_{i=0}^{l-2} (-1)^i d_i : C_{l-1} -> C_l   (top coface dropped)
    B_raw = 1 + t + ... + t^{l-1} on C_l               (levelwise norm)

    Verifies b^2 = 0, b'^2 = 0 and (1-t) b = b' (1-t) whenever the needed
    levels exist."""
    if not (2 <= level <= P.max_level):
        raise ValueError("level overflow")
    l = level - 1
    b = _alt_sum(P, l, l)
    bp = _alt_sum(P, l, l - 1)
    D = P.domain
    tlev = P.t_op(level)
    norm = GradedMap.identity(P.level(level))
    power = GradedMap.identity(P.level(level))
    for _ in range(level - 1):
        power = tlev.compose(power)
        norm = norm + power
    if level + 1 <= P.max_level:
        b_next = _alt_sum(P, level, level)
        bp_next = _alt_sum(P, level, level - 1)
        assert b_next.compose(b).is_zero(), "b^2 != 0"
        assert bp_next.compose(bp).is_zero(), "b'^2 != 0"
    one_minus_t_tgt = GradedMap.identity(P.level(level)) - tlev
    one_minus_t_src = GradedMap.identity(P.level(l)) - P.t_op(l)
    lhs = one_minus_t_tgt.compose(b)
    rhs = bp.compose(one_minus_t_src)
    assert (lhs - rhs).is_zero(), "(1-t) b != b' (1-t)"
    return b, bp, norm


class TotLayout:
    """Bookkeeping for the totalization: degree m collects level l in
    internal degree m - (l - 1)."""

    def __init__(self, P: PreCocyclicComplex, L: int):
        self.P = P
        self.L = L
        slots: dict[int, list] = {}
        for l in range(1, L + 1):
            C = P.level(l)
            for q in C.degrees():
                slots.setdefault(q + l - 1, []).append((l, None, C.dim(q)))
        self.dims: dict[int, int] = {}
        for m in sorted(slots):
            off = 0
            fixed = []
            for (l, _o, k) in sorted(slots[m]):
                fixed.append((l, off, k))
                off += k
            slots[m] = fixed
            self.dims[m] = off
        self.slots = slots

    def dim(self, m: int) -> int:
        return self.dims.get(m, 0)

    def _place(self, m_src: int, m_dst: int, matrices) -> SparseMatrix:
        """Assemble a matrix Tot^{m_src} -> Tot^{m_dst} from blocks given by
        matrices(l_src) -> list of (l_dst, SparseMatrix on the internal piece)."""
        D = self.P.domain
        out = SparseMatrix(self.dim(m_dst), self.dim(m_src), D)
        tgt = {l: o for (l, o, _k) in self.slots.get(m_dst, [])}
        for (l, off, _k) in self.slots.get(m_src, []):
            for (ld, block) in matrices(l, m_src):
                to = tgt.get(ld)
                if to is None or block is None:
                    continue
                for (i, j), v in block.entries.items():
                    w = D.add(out.entries.get((to + i, off + j), D.zero()), v)
                    if D.is_zero(w):
                        out.entries.pop((to + i, off + j), None)
                    else:
                        out.entries[(to + i, off + j)] = w
        return out

    def differential(self, m: int, prime: bool) -> SparseMatrix:
        """b (or b') on Tot^m: coface part plus (-1)^{m+1} times the internal
        differential."""
        D = self.P.domain
        sign = D.one() if (m + 1) % 2 == 0 else D.neg(D.one())

        def blocks(l, m_src):
            q = m_src - (l - 1)
            out = []
            if l + 1 <= self.L and l < self.P.max_level:
                alt = _alt_sum(self.P, l, l - 1 if prime else l)
                out.append((l + 1, alt.mat(q)))
            out.append((l, self.P.level(l).d(q).scale(sign)))
            return out

        return self._place(m, m + 1, blocks)

    def levelwise(self, m: int, op) -> SparseMatrix:
        """Degree-preserving levelwise operator; op(l) is a GradedMap on C_l."""
        def blocks(l, m_src):
            q = m_src - (l - 1)
            return [(l, op(l).mat(q))]
        return self._place(m, m, blocks)


def cyclic_cochain_mixed(P: PreCocyclicComplex, L: int | None = None):
    """The mixed complex of the pre-cocyclic complex, truncated at level L.

    Underlying graded piece in degree m is Tot^m (+) Tot^{m-1}; the first
    differential is [[b, 0], [1-t, -b']] and the second [[0, N], [0, 0]]
    with N the levelwise norm.  Returns (MixedComplex, TotLayout)."""
    if L is None:
        L = P.max_level
    assert 1 <= L <= P.max_level, "level overflow"
    rep = validate_relations(
        PreCocyclicComplex(
            P.domain,
            {l: P.levels[l] for l in range(1, L + 1)},
            {l: P.cofaces[l] for l in range(1, L) if l in P.cofaces},
            {l: P.t[l] for l in range(1, L + 1)},
        )
    )
    if not rep["ok"]:
        raise ValueError(f"not pre-cocyclic: {rep['failures'][:3]}")
    D = P.domain
    tot = TotLayout(P, L)
    degs = sorted(tot.dims)
    dims = {}
    for m in set(degs) | {m + 1 for m in degs}:
        n = tot.dim(m) + tot.dim(m - 1)
        if n:
            dims[m] = n
    b = {}
    B = {}

    def t_of(l):
        return P.t_op(l)

    def norm_of(l):
        norm = GradedMap.identity(P.level(l))
        power = GradedMap.identity(P.level(l))
        for _ in range(l - 1):
            power = t_of(l).compose(power)
            norm = norm + power
        return norm

    one = D.one()
    neg = D.neg(one)
    for m in sorted(dims):
        nx, ny = tot.dim(m), tot.dim(m - 1)
        rows = tot.dim(m + 1) + tot.dim(m)
        if rows:
            mat = SparseMatrix(rows, nx + ny, D)
            bm = tot.differential(m, prime=False)
            for (i, j), v in bm.entries.items():
                mat.entries[(i, j)] = v
            ot = tot.levelwise(m, lambda l: GradedMap.identity(P.level(l)) - t_of(l))
            for (i, j), v in ot.entries.items():
                mat.entries[(tot.dim(m + 1) + i, j)] = v
            bpm = tot.differential(m - 1, prime=True)
            for (i, j), v in bpm.entries.items():
                mat.entries[(tot.dim(m + 1) + i, nx + j)] = D.mul(neg, v)
            if not mat.is_zero():
                b[m] = mat
        rows = tot.dim(m - 1) + tot.dim(m - 2)
        if rows and ny:
            mat = SparseMatrix(rows, nx + ny, D)
            nm = tot.levelwise(m - 1, norm_of)
            for (i, j), v in nm.entries.items():
                mat.entries[(i, nx + j)] = v
            if not mat.is_zero():
                B[m] = mat
    M = MixedComplex(D, dims, b, B)
    bad = verify_mixed(M)
    assert not bad, f"mixed axioms failed: {bad[:3]}"
    return M, tot


def normalized_mixed(P: PreCocyclicComplex, degeneracy: dict, L: int | None = None):
    """Mixed complex (Tot, b, N s (1-t)) using extra degeneracies.

    degeneracy: l -> GradedMap s: C_{l+1} -> C_l with b' s + s b' = id on the
    totalization (checked).  Homotopy-equivalent to the cone construction:
    their equivariant modules agree."""
    if L is None:
        L = P.max_level
    for l in range(1, L):
        if l not in degeneracy:
            raise ValueError("degeneracy data invalid: missing level")
    D = P.domain
    tot = TotLayout(P, L)

    def s_block(m):
        def blocks(l, m_src):
            q = m_src - (l - 1)
            if l - 1 >= 1:
                return [(l - 1, degeneracy[l - 1].mat(q))]
            return []
        return tot._place(m, m - 1, blocks)

    # check b' s + s b' = id degreewise on the totalization (the top degree
    # is skipped: the level cap cuts off the outgoing cofaces there)
    top = max(tot.dims) if tot.dims else 0
    for m in sorted(tot.dims):
        if m >= top:
            continue
        n = tot.dim(m)
        lhs = tot.differential(m - 1, prime=True) * s_block(m)
        rhs = s_block(m + 1) * tot.differential(m, prime=True)
        if lhs + rhs != SparseMatrix.identity(n, D):
            raise ValueError(f"degeneracy data invalid at degree {m}")
    b = {}
    B = {}
    for m in sorted(tot.dims):
        bm = tot.differential(m, prime=False)
        if not bm.is_zero():
            b[m] = bm
        ot = tot.levelwise(m, lambda l: GradedMap.identity(P.level(l)) - P.t_op(l))
        norm = tot.levelwise(m, lambda l: _norm_map(P, l))
        Bm = norm * s_block(m) * ot if tot.dim(m - 1) else None
        if Bm is not None and not Bm.is_zero():
            B[m] = Bm
    M = MixedComplex(D, dict(tot.dims), b, B)
    bad = verify_mixed(M)
    assert not bad, f"mixed axioms failed: {bad[:3]}"
    return M, tot


def _norm_map(P: PreCocyclicComplex, l: int) -> GradedMap:
    norm = GradedMap.identity(P.level(l))
    power = GradedMap.identity(P.level(l))
    for _ in range(l - 1):
        power = P.t_op(l).compose(power)
        norm = norm + power
    return norm


def restrict_to_zl(P: PreCocyclicComplex, ell: int):
    """Level-ell complex with its cyclic automorphism sigma = t (order ell)."""
    if ell > P.max_level:
        raise ValueError("level overflow")
    C = P.level(ell)
    sigma = P.t_op(ell)
    power = sigma
    for _ in range(ell - 1):
        power = sigma.compose(power)
    if not (power - GradedMap.identity(C)).is_zero():
        raise ValueError("cyclicity violated")
    return C, sigma


def constant_point(domain: Domain, L: int) -> PreCocyclicComplex:
    """The one-point model: K in degree 0 at every level, all cofaces the
    identity, t on level l equal to (-1)^{l-1}."""
    levels = {l: CochainComplex(domain, {0: 1}, {}) for l in range(1, L + 1)}
    one = SparseMatrix.identity(1, domain)
    cofaces = {}
    for l in range(1, L):
        m = GradedMap(levels[l], levels[l + 1], 0, {0: one})
        cofaces[l] = [m] * (l + 1)
    t = {}
    for l in range(1, L + 1):
        sign = domain.one() if (l - 1) % 2 == 0 else domain.neg(domain.one())
        t[l] = GradedMap(levels[l], levels[l], 0, {0: one.scale(sign)})
    return PreCocyclicComplex(domain, levels, cofaces, t)
