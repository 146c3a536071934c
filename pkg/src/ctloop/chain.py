"""Cochain complexes over exact domains.

Grading is cohomological: d has degree +1 and d ∘ d = 0 exactly.  Degrees may
be negative (simplicial chains are stored in degrees -k).  All structure here
is verified, not assumed: verify_complex and GradedMap.verify raise on the
first violated identity when asked to.
"""
from __future__ import annotations

from .domains import Domain, QQ, ZZ
from .sparse import (
    SparseMatrix,
    Echelon,
    Solver,
    block_matrix,
    kernel_basis,
    rank as mat_rank,
    smith_normal_form,
)


class CochainComplex:
    def __init__(self, domain: Domain, dims: dict, diffs: dict):
        """dims: degree -> dimension (only nonzero needed);
        diffs: degree q -> SparseMatrix of d^q with shape dims[q+1] x dims[q]."""
        self.domain = domain
        self.dims = {q: n for q, n in dims.items() if n}
        self.diffs = {}
        for q, m in diffs.items():
            if m is None or (m.rows == 0 or m.cols == 0):
                continue
            assert m.rows == self.dim(q + 1) and m.cols == self.dim(q), (
                f"d^{q} has shape {m.rows}x{m.cols}, expected {self.dim(q+1)}x{self.dim(q)}"
            )
            assert m.domain == domain
            self.diffs[q] = m

    def dim(self, q: int) -> int:
        return self.dims.get(q, 0)

    def degrees(self):
        return sorted(self.dims)

    def total_dim(self) -> int:
        return sum(self.dims.values())

    def d(self, q: int) -> SparseMatrix:
        m = self.diffs.get(q)
        if m is None:
            m = SparseMatrix(self.dim(q + 1), self.dim(q), self.domain)
        return m

    def change_domain(self, domain: Domain) -> "CochainComplex":
        return CochainComplex(
            domain, dict(self.dims), {q: m.change_domain(domain) for q, m in self.diffs.items()}
        )

    def __repr__(self):
        return f"CochainComplex({ {q: n for q, n in sorted(self.dims.items())} } over {self.domain})"


def verify_complex(C: CochainComplex) -> list:
    """Return list of degrees q where d^{q+1} d^q != 0 (empty = valid)."""
    bad = []
    for q in C.degrees():
        m = (C.d(q + 1) * C.d(q))
        if not m.is_zero():
            bad.append(q)
    return bad


class GradedMap:
    """Graded map f: C -> D of degree r with d_D f = (-1)^r f d_C."""

    def __init__(self, src: CochainComplex, dst: CochainComplex, degree: int, mats: dict):
        self.src = src
        self.dst = dst
        self.degree = degree
        self.mats = {}
        for q, m in mats.items():
            if m is None or m.is_zero():
                continue
            assert m.rows == dst.dim(q + degree) and m.cols == src.dim(q), (
                f"f^{q}: {m.rows}x{m.cols}, expected {dst.dim(q+degree)}x{src.dim(q)}"
            )
            self.mats[q] = m

    def mat(self, q: int) -> SparseMatrix:
        m = self.mats.get(q)
        if m is None:
            m = SparseMatrix(self.dst.dim(q + self.degree), self.src.dim(q), self.src.domain)
        return m

    def verify(self) -> list:
        """Degrees where the sign-twisted chain map law fails."""
        D = self.src.domain
        sign = D.one() if self.degree % 2 == 0 else D.neg(D.one())
        bad = []
        degs = set(self.src.dims) | {q - 1 for q in self.src.dims}
        for q in sorted(degs):
            lhs = self.dst.d(q + self.degree) * self.mat(q)
            rhs = (self.mat(q + 1) * self.src.d(q)).scale(sign)
            if lhs != rhs:
                bad.append(q)
        return bad

    def compose(self, other: "GradedMap") -> "GradedMap":
        """self ∘ other (other first)."""
        assert other.dst is self.src or other.dst.dims == self.src.dims
        mats = {}
        for q in other.src.degrees():
            mats[q] = self.mat(q + other.degree) * other.mat(q)
        return GradedMap(other.src, self.dst, self.degree + other.degree, mats)

    def scale(self, c) -> "GradedMap":
        return GradedMap(self.src, self.dst, self.degree,
                         {q: m.scale(c) for q, m in self.mats.items()})

    def __add__(self, other: "GradedMap") -> "GradedMap":
        assert self.degree == other.degree
        degs = set(self.mats) | set(other.mats)
        return GradedMap(self.src, self.dst, self.degree,
                         {q: self.mat(q) + other.mat(q) for q in degs})

    def __sub__(self, other: "GradedMap") -> "GradedMap":
        D = self.src.domain
        return self + other.scale(D.neg(D.one()))

    @classmethod
    def identity(cls, C: CochainComplex) -> "GradedMap":
        return cls(C, C, 0, {q: SparseMatrix.identity(C.dim(q), C.domain) for q in C.degrees()})

    def is_zero(self) -> bool:
        return all(m.is_zero() for m in self.mats.values())


# -- dual / shift / cone -----------------------------------------------------

def shift_complex(C: CochainComplex, k: int) -> CochainComplex:
    """C[k] with C[k]^q = C^{q+k}, differential scaled by (-1)^k."""
    D = C.domain
    sign = D.one() if k % 2 == 0 else D.neg(D.one())
    return CochainComplex(
        D,
        {q - k: n for q, n in C.dims.items()},
        {q - k: m.scale(sign) for q, m in C.diffs.items()},
    )


def dual_shift(C: CochainComplex, d: int) -> CochainComplex:
    """Graded dual with shift: degree-q piece is the dual of C^{d-q};
    differentials are transposes with sign (-1)^{q+1}."""
    D = C.domain
    dims = {d - q: n for q, n in C.dims.items()}
    diffs = {}
    for q in dims:
        src = C.diffs.get(d - q - 1)
        if src is None:
            continue
        sign = D.one() if (q + 1) % 2 == 0 else D.neg(D.one())
        diffs[q] = src.transpose().scale(sign)
    return CochainComplex(D, dims, diffs)


def dual_map(f: GradedMap, d: int) -> GradedMap:
    """Dual of a degree-0 map: dual_shift(D, d) -> dual_shift(C, d)."""
    assert f.degree == 0
    src = dual_shift(f.dst, d)
    dst = dual_shift(f.src, d)
    mats = {}
    for q in src.degrees():
        m = f.mats.get(d - q)
        if m is not None:
            mats[q] = m.transpose()
    return GradedMap(src, dst, 0, mats)


def mapping_cone(f: GradedMap):
    """Cone of a degree-0 chain map f: C -> D.

    Cone^q = C^{q+1} (+) D^q with d(x, y) = (-d_C x, f x + d_D y).
    Returns (cone, incl: D -> cone, proj: cone -> C[1]).
    """
    assert f.degree == 0
    C, Dc = f.src, f.dst
    dom = C.domain
    neg1 = dom.neg(dom.one())
    dims = {}
    degs = set(q - 1 for q in C.dims) | set(Dc.dims)
    for q in degs:
        n = C.dim(q + 1) + Dc.dim(q)
        if n:
            dims[q] = n
    diffs = {}
    for q in dims:
        blocks = {
            (0, 0): C.d(q + 1).scale(neg1),
            (1, 0): f.mat(q + 1),
            (1, 1): Dc.d(q),
        }
        diffs[q] = block_matrix(
            blocks, [C.dim(q + 2), Dc.dim(q + 1)], [C.dim(q + 1), Dc.dim(q)], dom
        )
    cone = CochainComplex(dom, dims, diffs)
    incl = GradedMap(Dc, cone, 0, {
        q: block_matrix({(1, 0): SparseMatrix.identity(Dc.dim(q), dom)},
                        [C.dim(q + 1), Dc.dim(q)], [Dc.dim(q)], dom)
        for q in Dc.degrees()
    })
    c1 = shift_complex(C, 1)
    proj = GradedMap(cone, c1, 0, {
        q: block_matrix({(0, 0): SparseMatrix.identity(C.dim(q + 1), dom)},
                        [C.dim(q + 1)], [C.dim(q + 1), Dc.dim(q)], dom)
        for q in dims
    })
    return cone, incl, proj


# -- incremental echelon (building block for retraction) ---------------------

class IncrementalEchelon:
    """Echelon structure accepting vectors one at a time.

    Pivot rows are normalized (leading coefficient 1) and carry optional data.
    reduce(v) fully reduces v against all pivot columns and returns
    (residue, consumed) where consumed lists (pivot_col, coefficient, data):
    v = sum coeff * pivot_row + residue, and residue has no pivot-column
    entries.
    """

    def __init__(self, domain: Domain):
        self.domain = domain
        self.pivots: dict[int, dict] = {}
        self.data: dict[int, object] = {}

    def reduce(self, v: dict, want_coeffs: bool = False):
        D = self.domain
        row = {c: x for c, x in v.items() if not D.is_zero(x)}
        consumed = [] if want_coeffs else None
        while True:
            hit = None
            for c in sorted(row):
                if c in self.pivots:
                    hit = c
                    break
            if hit is None:
                break
            f = row.pop(hit)
            for cc, x in self.pivots[hit].items():
                if cc == hit:
                    continue
                w = D.sub(row.get(cc, D.zero()), D.mul(f, x))
                if D.is_zero(w):
                    row.pop(cc, None)
                else:
                    row[cc] = w
            if want_coeffs:
                consumed.append((hit, f, self.data.get(hit)))
        return row, consumed

    def add_pivot(self, row: dict, data=None):
        """Normalize an (already reduced, nonzero) row and store it.
        Returns (pivot_col, inv) where inv is the normalizing scalar."""
        D = self.domain
        c = min(row)
        inv = D.inv(row[c])
        self.pivots[c] = {cc: D.mul(x, inv) for cc, x in row.items()}
        self.data[c] = data
        return c, inv

    @property
    def rank(self):
        return len(self.pivots)


def _vec_addmul(D: Domain, out: dict, vec: dict, coeff) -> None:
    for j, x in vec.items():
        w = D.add(out.get(j, D.zero()), D.mul(coeff, x))
        if D.is_zero(w):
            out.pop(j, None)
        else:
            out[j] = w


class Retraction:
    """Strong deformation retract of a field-coefficient complex onto its
    cohomology: maps incl: H -> C, proj: C -> H, and homotopy h (degree -1)
    with proj∘incl = id and  id - incl∘proj = d h + h d, plus the side
    conditions h incl = 0, proj h = 0, h h = 0.

    Internally each degree is split as V = B (+) H (+) A where B = im d,
    H is spanned by representative cocycles reduced mod B, and A maps
    isomorphically onto B one degree up with explicit preimages (sigma).
    """

    def __init__(self, C: CochainComplex):
        if not C.domain.is_field:
            raise ValueError("Retraction requires field coefficients")
        self.C = C
        D = C.domain
        degs = C.degrees()
        self.B: dict[int, IncrementalEchelon] = {}
        self.reps: dict[int, list] = {}
        self._hech: dict[int, IncrementalEchelon] = {}
        self._acount: dict[int, int] = {}
        lo, hi = (degs[0], degs[-1]) if degs else (0, -1)
        # pass 1: image echelons with exact preimages (sigma data)
        for q in range(lo, hi + 1):
            dq = C.d(q)
            ech = self.B.setdefault(q + 1, IncrementalEchelon(D))
            cols: dict[int, dict] = {}
            for (i, j), v in dq.entries.items():
                cols.setdefault(j, {})[i] = v
            acount = 0
            for j in range(C.dim(q)):
                w = cols.get(j)
                if not w:
                    continue
                row, consumed = ech.reduce(w, want_coeffs=True)
                if not row:
                    continue
                # preimage of the reduced row: e_j minus consumed preimages
                pre = {j: D.one()}
                for _c, f, data in consumed:
                    if data is not None:
                        _vec_addmul(D, pre, data, D.neg(f))
                _c, inv = ech.add_pivot(row)
                ech.data[_c] = {k: D.mul(x, inv) for k, x in pre.items()}
                acount += 1
            self._acount[q] = acount
        # pass 2: H representatives per degree
        for q in range(lo, hi + 1):
            n = C.dim(q)
            b_ech = self.B.get(q, IncrementalEchelon(D))
            hech = IncrementalEchelon(D)
            for c, piv in b_ech.pivots.items():
                hech.pivots[c] = dict(piv)
                hech.data[c] = None
            reps: list = []
            target = n - b_ech.rank - self._acount.get(q, 0)
            for j in range(n):
                if len(reps) == target:
                    break
                z = self._kill_A_part(q, {j: D.one()})
                row, _ = hech.reduce(z)
                if row:
                    c, _inv = hech.add_pivot(row)
                    hech.data[c] = ("rep", len(reps))
                    reps.append(dict(hech.pivots[c]))
            assert len(reps) == target, f"H^{q}: found {len(reps)} of {target} reps"
            self.reps[q] = reps
            self._hech[q] = hech
        self.H = CochainComplex(D, {q: len(r) for q, r in self.reps.items() if r}, {})

    # vector helpers ---------------------------------------------------------
    def _sigma(self, q: int, v: dict) -> dict:
        """Exact preimage under d^{q-1} of v (v must lie in the image)."""
        D = self.C.domain
        if not v:
            return {}
        ech = self.B.get(q)
        assert ech is not None, f"sigma: no image at degree {q}"
        row, consumed = ech.reduce(v, want_coeffs=True)
        assert not row, f"sigma: vector not in image at degree {q}"
        out: dict = {}
        for _c, f, data in consumed:
            if data is not None and not (isinstance(data, tuple) and data[0] == "rep"):
                _vec_addmul(D, out, data, f)
        return out

    def _kill_A_part(self, q: int, v: dict) -> dict:
        """v minus its A-component (result is a cocycle)."""
        D = self.C.domain
        dv = self.C.d(q).matvec(v)
        if not dv:
            return dict(v)
        a = self._sigma(q + 1, dv)
        out = dict(v)
        _vec_addmul(D, out, a, D.neg(D.one()))
        return out

    def homotopy(self, q: int, v: dict) -> dict:
        """h: C^q -> C^{q-1}: sigma of the B-component of v."""
        D = self.C.domain
        ech = self.B.get(q)
        if ech is None or not ech.pivots:
            return {}
        z = self._kill_A_part(q, v)
        row, consumed = ech.reduce(z, want_coeffs=True)
        # residue is the H-component; consumed data are the sigma preimages
        out: dict = {}
        for _c, f, data in consumed:
            if data is not None:
                _vec_addmul(D, out, data, f)
        return out

    def project(self, q: int, v: dict) -> dict:
        """proj: C^q -> H^q coordinates (dict index -> scalar)."""
        z = self._kill_A_part(q, v)
        hech = self._hech.get(q)
        if hech is None:
            assert not z
            return {}
        row, consumed = hech.reduce(z, want_coeffs=True)
        assert not row, f"project: reduction failed at degree {q}"
        out: dict = {}
        D = self.C.domain
        for _c, f, data in consumed:
            if isinstance(data, tuple) and data[0] == "rep":
                w = D.add(out.get(data[1], D.zero()), f)
                if D.is_zero(w):
                    out.pop(data[1], None)
                else:
                    out[data[1]] = w
        return out

    def include(self, q: int, coords: dict) -> dict:
        """incl: H^q coords -> representative cocycle in C^q."""
        D = self.C.domain
        out: dict = {}
        reps = self.reps.get(q, [])
        for idx, c in coords.items():
            _vec_addmul(D, out, reps[idx], c)
        return out


def cohomology_dims(C: CochainComplex) -> dict:
    """H^q dimensions over a field (or free ranks over ZZ via QQ)."""
    work = C if C.domain.is_field else C.change_domain(QQ)
    ranks = {q: Echelon(m).rank for q, m in work.diffs.items()}
    out = {}
    for q in work.degrees():
        h = work.dim(q) - ranks.get(q, 0) - ranks.get(q - 1, 0)
        if h:
            out[q] = h
    return out


def cohomology_integer(C: CochainComplex) -> dict:
    """H^q over ZZ: degree -> (free_rank, [torsion invariants > 1])."""
    assert C.domain == ZZ
    ranks: dict[int, int] = {}
    torsion: dict[int, list] = {}
    for q, m in C.diffs.items():
        inv, _, _ = smith_normal_form(m, transforms=False)
        ranks[q] = len(inv)
        tor = [x for x in inv if x > 1]
        if tor:
            torsion[q + 1] = tor
    out = {}
    for q in C.degrees():
        free = C.dim(q) - ranks.get(q, 0) - ranks.get(q - 1, 0)
        tor = torsion.get(q, [])
        if free or tor:
            out[q] = (free, tor)
    return out


def induced_map(f: GradedMap, rsrc: Retraction, rdst: Retraction) -> dict:
    """Matrices of H(f): H^q(src) -> H^{q+degree}(dst) in the retraction bases."""
    out = {}
    for q, reps in rsrc.reps.items():
        rows = rdst.H.dim(q + f.degree)
        cols = len(reps)
        if not rows or not cols:
            continue
        m = SparseMatrix(rows, cols, f.src.domain)
        for j, rep in enumerate(reps):
            img = f.mat(q).matvec(rep)
            coords = rdst.project(q + f.degree, img)
            for i, v in coords.items():
                m.entries[(i, j)] = v
        if not m.is_zero():
            out[q] = m
    return out


def ses_exact(i: GradedMap, p: GradedMap) -> bool:
    """Check 0 -> A -> B -> C -> 0 is exact degreewise (matrix level)."""
    A, B, C = i.src, i.dst, p.dst
    for q in set(A.dims) | set(B.dims) | set(C.dims):
        if not (p.mat(q) * i.mat(q)).is_zero():
            return False
        ri = mat_rank(i.mat(q)) if A.dim(q) else 0
        rp = mat_rank(p.mat(q)) if B.dim(q) else 0
        if ri != A.dim(q) or rp != C.dim(q) or ri + rp != B.dim(q):
            return False
    return True


def les_from_ses(i: GradedMap, p: GradedMap, window=None) -> dict:
    """Verify the long exact cohomology sequence of 0 -> A -> B -> C -> 0.

    Computes H of all three complexes with representatives, the induced maps,
    and the connecting homomorphism by the snake-lemma zigzag; then checks
    ker = im at every joint (by composite-vanishing + rank bookkeeping).
    Returns a report dict; report["exact"] is the verdict.
    """
    assert ses_exact(i, p), "not a degreewise short exact sequence"
    A, B, C = i.src, i.dst, p.dst
    dom = A.domain
    ra, rb, rc = Retraction(A), Retraction(B), Retraction(C)
    alpha = induced_map(i, ra, rb)
    beta = induced_map(p, rb, rc)
    psolvers = {q: Solver(p.mat(q)) for q in B.degrees()}
    isolvers = {q: Solver(i.mat(q)) for q in A.degrees()}
    # connecting map delta: H^q(C) -> H^{q+1}(A)
    delta: dict[int, SparseMatrix] = {}
    for q, reps in rc.reps.items():
        rows = ra.H.dim(q + 1)
        cols = len(reps)
        m = SparseMatrix(rows, cols, dom)
        for j, rep in enumerate(reps):
            sol = psolvers.get(q)
            x = sol.solve(rep) if sol else None
            assert x is not None, "surjectivity failed in zigzag"
            y = B.d(q).matvec(x)
            isol = isolvers.get(q + 1)
            a = isol.solve(y) if isol else ({} if not y else None)
            assert a is not None, "zigzag lift failed"
            for idx, v in ra.project(q + 1, a).items():
                m.entries[(idx, j)] = v
        if not m.is_zero():
            delta[q] = m

    def getm(d, q, rows, cols):
        m = d.get(q)
        return m if m is not None else SparseMatrix(rows, cols, dom)

    degs = sorted(set(ra.H.dims) | set(rb.H.dims) | set(rc.H.dims))
    if window is not None:
        degs = [q for q in degs if window[0] <= q <= window[1]]
    failures = []
    for q in degs:
        ha, hb, hc = ra.H.dim(q), rb.H.dim(q), rc.H.dim(q)
        ha1 = ra.H.dim(q + 1)
        aq = getm(alpha, q, hb, ha)
        bq = getm(beta, q, hc, hb)
        dq = getm(delta, q, ha1, hc)
        a_next = getm(alpha, q + 1, rb.H.dim(q + 1), ha1)
        if not (bq * aq).is_zero():
            failures.append((q, "beta.alpha != 0"))
        if not (dq * bq).is_zero():
            failures.append((q, "delta.beta != 0"))
        if not (a_next * dq).is_zero():
            failures.append((q, "alpha.delta != 0"))
        rank_a = mat_rank(aq) if ha and hb else 0
        rank_b = mat_rank(bq) if hb and hc else 0
        rank_d = mat_rank(dq) if hc and ha1 else 0
        rank_a1 = mat_rank(a_next) if ha1 and rb.H.dim(q + 1) else 0
        if rank_a + rank_b != hb:
            failures.append((q, f"exactness at B: {rank_a}+{rank_b} != {hb}"))
        if rank_b + rank_d != hc:
            failures.append((q, f"exactness at C: {rank_b}+{rank_d} != {hc}"))
        if (q + 1 in degs or window is None) and rank_d + rank_a1 != ha1:
            failures.append((q, f"exactness at A[{q+1}]: {rank_d}+{rank_a1} != {ha1}"))
    return {
        "exact": not failures,
        "failures": failures,
        "dims": {"A": dict(ra.H.dims), "B": dict(rb.H.dims), "C": dict(rc.H.dims)},
    }
