"""Mixed complexes: two anticommuting differentials b (degree +1) and
B (degree -1) with b^2 = B^2 = bB + Bb = 0.

From a mixed complex we build the truncated equivariant complex ("hfp"):
degree-n piece  (+)_{j=0..K} M^{n-2j} u^j  with differential b + uB and
u^{K+1} = 0.  The formal variable u has degree 2 and acts by the slot shift
j -> j+1; on cohomology this gives a module over K[u]/u^{K+1} whose interval
decomposition (barcode) is computed by rank bookkeeping.
"""
from __future__ import annotations

from .domains import Domain
from .sparse import SparseMatrix, block_matrix, rank as mat_rank
from .chain import (
    CochainComplex,
    GradedMap,
    Retraction,
    cohomology_dims,
    induced_map,
    les_from_ses,
    shift_complex,
    verify_complex,
)


class MixedComplex:
    def __init__(self, domain: Domain, dims: dict, b: dict, B: dict):
        """b: degree q -> matrix dim(q+1) x dim(q);
        B: degree q -> matrix dim(q-1) x dim(q)."""
        self.domain = domain
        self.dims = {q: n for q, n in dims.items() if n}
        self.b = {}
        self.B = {}
        for q, m in b.items():
            if m is None or m.is_zero():
                continue
            assert m.rows == self.dim(q + 1) and m.cols == self.dim(q)
            self.b[q] = m
        for q, m in B.items():
            if m is None or m.is_zero():
                continue
            assert m.rows == self.dim(q - 1) and m.cols == self.dim(q)
            self.B[q] = m

    def dim(self, q: int) -> int:
        return self.dims.get(q, 0)

    def degrees(self):
        return sorted(self.dims)

    def b_mat(self, q: int) -> SparseMatrix:
        m = self.b.get(q)
        return m if m is not None else SparseMatrix(self.dim(q + 1), self.dim(q), self.domain)

    def B_mat(self, q: int) -> SparseMatrix:
        m = self.B.get(q)
        return m if m is not None else SparseMatrix(self.dim(q - 1), self.dim(q), self.domain)

    def to_cochain(self) -> CochainComplex:
        return CochainComplex(self.domain, dict(self.dims), dict(self.b))

    def change_domain(self, domain: Domain) -> "MixedComplex":
        return MixedComplex(
            domain, dict(self.dims),
            {q: m.change_domain(domain) for q, m in self.b.items()},
            {q: m.change_domain(domain) for q, m in self.B.items()},
        )

    def __repr__(self):
        return f"MixedComplex({ {q: n for q, n in sorted(self.dims.items())} } over {self.domain})"


def verify_mixed(M: MixedComplex) -> list:
    """Failed identities as (kind, degree) pairs; empty list means valid."""
    bad = []
    for q in M.degrees():
        if not (M.b_mat(q + 1) * M.b_mat(q)).is_zero():
            bad.append(("bb", q))
        if not (M.B_mat(q - 1) * M.B_mat(q)).is_zero():
            bad.append(("BB", q))
        anti = M.b_mat(q - 1) * M.B_mat(q) + M.B_mat(q + 1) * M.b_mat(q)
        if not anti.is_zero():
            bad.append(("bB+Bb", q))
    return bad


def shift_mixed(M: MixedComplex, d: int) -> MixedComplex:
    """Plain degree shift: degree-q piece is M^{q-d}.  b picks up the sign
    (-1)^d, B is unchanged; all three mixed identities are preserved."""
    D = M.domain
    dims = {q + d: n for q, n in M.dims.items()}
    sign = D.one() if d % 2 == 0 else D.neg(D.one())
    b = {q + d: m.scale(sign) for q, m in M.b.items()}
    B = {q + d: m for q, m in M.B.items()}
    return MixedComplex(D, dims, b, B)


def dual_shift_mixed(M: MixedComplex, d: int) -> MixedComplex:
    """Graded dual with shift: degree-q piece dual to M^{d-q}.

    b-dual: transpose of b^{d-q-1} with sign (-1)^{q+1};
    B-dual: transpose of B^{d-q+1} with sign (-1)^q.
    These signs keep all three mixed identities intact.
    """
    D = M.domain
    dims = {d - q: n for q, n in M.dims.items()}
    b, B = {}, {}
    for q in dims:
        m = M.b.get(d - q - 1)
        if m is not None:
            sign = D.one() if (q + 1) % 2 == 0 else D.neg(D.one())
            b[q] = m.transpose().scale(sign)
        m = M.B.get(d - q + 1)
        if m is not None:
            sign = D.one() if q % 2 == 0 else D.neg(D.one())
            B[q] = m.transpose().scale(sign)
    return MixedComplex(D, dims, b, B)


class UModule:
    """The truncated equivariant complex of a mixed complex.

    Degree-n piece is (+)_{j=0..K} M^{n-2j} u^j; the differential is b + uB
    with u^{K+1} = 0.  Exposes the underlying cochain complex, the degree-2
    chain map u, cohomology dimensions, and the u-action on cohomology.
    """

    def __init__(self, M: MixedComplex, K: int):
        assert K >= 0
        self.M = M
        self.K = K
        D = M.domain
        # layout[n] = [(j, offset, dim)] for slots with a nonzero piece
        layout: dict[int, list] = {}
        dims: dict[int, int] = {}
        for q in M.degrees():
            for j in range(K + 1):
                n = q + 2 * j
                layout.setdefault(n, []).append((j, None, M.dim(q)))
        for n in sorted(layout):
            layout[n].sort()
            off = 0
            fixed = []
            for (j, _o, k) in layout[n]:
                fixed.append((j, off, k))
                off += k
            layout[n] = fixed
            dims[n] = off
        self.layout = layout
        diffs: dict[int, SparseMatrix] = {}
        for n, slots in layout.items():
            tgt = {j: (o, k) for (j, o, k) in layout.get(n + 1, [])}
            if not tgt:
                continue
            m = SparseMatrix(dims[n + 1], dims[n], D)
            for (j, off, _k) in slots:
                q = n - 2 * j
                bm = M.b.get(q)
                if bm is not None and j in tgt:
                    to = tgt[j][0]
                    for (i, jj), v in bm.entries.items():
                        m.entries[(to + i, off + jj)] = v
                Bm = M.B.get(q)
                if Bm is not None and j + 1 in tgt:
                    to = tgt[j + 1][0]
                    for (i, jj), v in Bm.entries.items():
                        w = D.add(m.entries.get((to + i, off + jj), D.zero()), v)
                        if D.is_zero(w):
                            m.entries.pop((to + i, off + jj), None)
                        else:
                            m.entries[(to + i, off + jj)] = w
            if not m.is_zero():
                diffs[n] = m
        self.cochain = CochainComplex(D, dims, diffs)
        self._retraction = None

    def u_map(self) -> GradedMap:
        """u: degree-2 chain map shifting the slot j -> j+1 (top slot dies)."""
        if getattr(self, "_zl_u", None) is not None:
            return self._zl_u
        D = self.M.domain
        mats = {}
        for n, slots in self.layout.items():
            tgt = {j: o for (j, o, _k) in self.layout.get(n + 2, [])}
            m = SparseMatrix(self.cochain.dim(n + 2), self.cochain.dim(n), D)
            for (j, off, k) in slots:
                if j + 1 in tgt:
                    to = tgt[j + 1]
                    for i in range(k):
                        m.entries[(to + i, off + i)] = D.one()
            if not m.is_zero():
                mats[n] = m
        return GradedMap(self.cochain, self.cochain, 2, mats)

    def retraction(self) -> Retraction:
        if self._retraction is None:
            self._retraction = Retraction(self.cochain)
        return self._retraction

    def h_dims(self) -> dict:
        return cohomology_dims(self.cochain)

    def u_on_cohomology(self) -> dict:
        """degree n -> matrix of u: H^n -> H^{n+2} in retraction bases."""
        r = self.retraction()
        return induced_map(self.u_map(), r, r)


def hfp(M: MixedComplex, K: int) -> UModule:
    return UModule(M, K)


def equivariant_module(M: MixedComplex, K: int, d: int) -> UModule:
    """Equivariant complex of the d-shifted dual of M, truncated at u^{K+1}.

    The result carries .window = (a, a + 2K) where a is the bottom degree of
    the dual: cohomology in the window is independent of K (see
    stability_check)."""
    dual = dual_shift_mixed(M, d)
    um = UModule(dual, K)
    degs = dual.degrees()
    a = degs[0] if degs else 0
    um.window = (a, a + 2 * K)
    return um


def stability_check(M: MixedComplex, K: int) -> bool:
    """Cohomology of the truncated equivariant complex in degrees
    <= bottom + 2K agrees between truncation orders K and K+1."""
    degs = M.degrees()
    if not degs:
        return True
    top = degs[0] + 2 * K
    h0 = {n: v for n, v in UModule(M, K).h_dims().items() if n <= top}
    h1 = {n: v for n, v in UModule(M, K + 1).h_dims().items() if n <= top}
    return h0 == h1


def barcode(um: UModule) -> list:
    """Interval decomposition of the u-action on cohomology.

    Returns a sorted list of (start_degree, end_degree, multiplicity): a bar
    (s, e, m) means m summands on which u acts freely from degree s up to
    degree e and then by zero.  Multiplicities come from the rank formula
        mult[i,j] = r(i,j) - r(i-1,j) - r(i,j+1) + r(i-1,j+1)
    with r(i,j) the rank of u^{(n_j-n_i)/2}: H^{n_i} -> H^{n_j}.
    """
    h = um.h_dims()
    if not h:
        return []
    umaps = um.u_on_cohomology()
    D = um.M.domain
    r = um.retraction()
    bars = []
    for parity in (0, 1):
        ns = sorted(n for n in h if (n - parity) % 2 == 0)
        if not ns:
            continue
        lo, hi = ns[0], ns[-1]
        degs = list(range(lo, hi + 1, 2))
        idx = {n: i for i, n in enumerate(degs)}
        # composite ranks
        comp: dict[tuple, SparseMatrix] = {}

        def mat_u(n):
            m = umaps.get(n)
            if m is None:
                m = SparseMatrix(r.H.dim(n + 2), r.H.dim(n), D)
            return m

        def rank_ij(i, j):
            if i < 0 or j >= len(degs) or i > j:
                return 0
            if i == j:
                return h.get(degs[i], 0)
            key = (i, j)
            if key not in comp:
                m = mat_u(degs[i])
                for t in range(i + 1, j):
                    m = mat_u(degs[t]) * m
                comp[key] = m
            m = comp[key]
            if m.rows == 0 or m.cols == 0:
                return 0
            return mat_rank(m)

        for i in range(len(degs)):
            for j in range(i, len(degs)):
                mult = (rank_ij(i, j) - rank_ij(i - 1, j)
                        - rank_ij(i, j + 1) + rank_ij(i - 1, j + 1))
                if mult:
                    assert mult > 0, "negative bar multiplicity"
                    bars.append((degs[i], degs[j], mult))
    bars.sort()
    return bars


def barcode_summary(um: UModule, window_top: int) -> dict:
    """Split a barcode into free towers (bars reaching the stable window top)
    and torsion bars (degree, u-exponent, multiplicity)."""
    free = []
    torsion = []
    for (s, e, k) in barcode(um):
        if e >= window_top:
            free.extend([s] * k)
        else:
            torsion.append((s, (e - s) // 2 + 1, k))
    return {"free": sorted(free), "torsion": sorted(torsion)}


def zl_cohomology(C, sigma, ell: int, K: int, d: int) -> UModule:
    """Ext over the group algebra of Z/ell into the trivial module, with
    degree shift d, via the standard 2-periodic resolution.

    C is a CochainComplex with a degree-0 automorphism sigma of order ell.
    The output complex has degree-n piece (+)_{s=0..2K+1} (C dual-shifted by
    d)^{n-s}, with slot maps alternating 1 - sigma* (even slots) and the norm
    1 + sigma* + ... + sigma*^{ell-1} (odd slots); u is the slot shift s ->
    s+2.  Packaged as a UModule of an auxiliary mixed complex whose b is the
    signed internal differential plus even-slot maps and whose B is absent —
    instead we realize it directly: the returned UModule is built from a
    mixed complex with b = 1-sigma* column pairs.  Degrees above d + 2K are
    truncation boundary and not stable.
    """
    from .chain import dual_shift, dual_map, GradedMap as GM
    power = sigma
    for _ in range(ell - 1):
        power = sigma.compose(power)
    if not (power - GradedMap.identity(C)).is_zero():
        raise ValueError("not a Z/ell action")
    D = C.domain
    Dc = dual_shift(C, d)
    sd = dual_map(sigma, d)
    one = GradedMap.identity(Dc)
    norm = one
    p = sd
    for _ in range(ell - 1):
        norm = norm + p
        p = sd.compose(p)
    omt = one - sd
    # assemble the total complex directly
    S = 2 * K + 2  # slots 0..2K+1
    layout: dict[int, list] = {}
    dims: dict[int, int] = {}
    for q in Dc.degrees():
        for s in range(S):
            layout.setdefault(q + s, []).append((s, None, Dc.dim(q)))
    for n in sorted(layout):
        off = 0
        fixed = []
        for (s, _o, k) in sorted(layout[n]):
            fixed.append((s, off, k))
            off += k
        layout[n] = fixed
        dims[n] = off
    diffs: dict[int, SparseMatrix] = {}
    for n, slots in layout.items():
        tgt = {s: o for (s, o, _k) in layout.get(n + 1, [])}
        if not tgt:
            continue
        m = SparseMatrix(dims[n + 1], dims[n], D)
        for (s, off, _k) in slots:
            q = n - s
            # internal differential with slot sign
            dm = Dc.d(q)
            sign = D.one() if s % 2 == 0 else D.neg(D.one())
            if s in tgt and not dm.is_zero():
                to = tgt[s]
                for (i, j), v in dm.entries.items():
                    m.entries[(to + i, off + j)] = D.mul(sign, v)
            # slot map
            A = omt if s % 2 == 0 else norm
            am = A.mat(q)
            if s + 1 in tgt and not am.is_zero():
                to = tgt[s + 1]
                for (i, j), v in am.entries.items():
                    w = D.add(m.entries.get((to + i, off + j), D.zero()), v)
                    if D.is_zero(w):
                        m.entries.pop((to + i, off + j), None)
                    else:
                        m.entries[(to + i, off + j)] = w
        if not m.is_zero():
            diffs[n] = m
    total = CochainComplex(D, dims, diffs)
    assert verify_complex(total) == []
    um = UModule.__new__(UModule)
    um.M = MixedComplex(D, {}, {}, {})
    um.K = K
    um.layout = layout
    um.cochain = total
    um._retraction = None
    # u as the slot shift s -> s+2
    mats = {}
    for n, slots in layout.items():
        tgt = {s: o for (s, o, _k) in layout.get(n + 2, [])}
        m = SparseMatrix(total.dim(n + 2), total.dim(n), D)
        for (s, off, k) in slots:
            if s + 2 in tgt:
                to = tgt[s + 2]
                for i in range(k):
                    m.entries[(to + i, off + i)] = D.one()
        if not m.is_zero():
            mats[n] = m
    umap = GM(total, total, 2, mats)
    assert umap.verify() == []
    um._zl_u = umap
    um.window = (min(dims) if dims else 0, d + 2 * K)
    return um


def gysin_check(M: MixedComplex, K: int, d: int) -> dict:
    """Gysin long exact sequence for the d-shifted dual of M (the form used
    by the end-product pipelines)."""
    return gysin_sequence(dual_shift_mixed(M, d), K)


def gysin_sequence(M: MixedComplex, K: int) -> dict:
    """Verify the long exact sequence of
        0 -> u * E_{K-1}[-2] -> E_K -> (M, b) -> 0
    where E_K is the truncated equivariant complex of M and the quotient is
    the slot-0 piece.  Returns the les_from_ses report."""
    assert K >= 1
    D = M.domain
    big = UModule(M, K)
    small = UModule(M, K - 1)
    A = shift_complex(small.cochain, -2)
    # inclusion: slot j of E_{K-1} (placed in degree n+2) -> slot j+1 of E_K
    imats = {}
    for n, slots in small.layout.items():
        tgt = {j: o for (j, o, _k) in big.layout.get(n + 2, [])}
        m = SparseMatrix(big.cochain.dim(n + 2), small.cochain.dim(n), D)
        for (j, off, k) in slots:
            to = tgt[j + 1]
            for i in range(k):
                m.entries[(to + i, off + i)] = D.one()
        imats[n + 2] = m
    i = GradedMap(A, big.cochain, 0, imats)
    # projection onto slot 0
    C0 = M.to_cochain()
    pmats = {}
    for n, slots in big.layout.items():
        m = SparseMatrix(C0.dim(n), big.cochain.dim(n), D)
        for (j, off, k) in slots:
            if j == 0:
                for t in range(k):
                    m.entries[(t, off + t)] = D.one()
        pmats[n] = m
    p = GradedMap(big.cochain, C0, 0, pmats)
    assert i.verify() == [], "Gysin inclusion is not a chain map"
    assert p.verify() == [], "Gysin projection is not a chain map"
    return les_from_ses(i, p)
