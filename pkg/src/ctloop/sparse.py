"""Sparse exact matrices: elimination, kernels, solving, Smith normal form.

Matrices are dicts keyed by (row, col) with nonzero canonical scalars from a
Domain.  Elimination keeps rows as column->value dicts and picks pivots
cheaply by sparsity; everything is exact (no floats anywhere).
"""
from __future__ import annotations

from fractions import Fraction

from .domains import Domain, QQ, ZZ


class SparseMatrix:
    __slots__ = ("rows", "cols", "domain", "entries")

    def __init__(self, rows: int, cols: int, domain: Domain, entries=None):
        self.rows = rows
        self.cols = cols
        self.domain = domain
        self.entries: dict = {}
        if entries:
            conv = domain.convert
            isz = domain.is_zero
            for (i, j), v in entries.items():
                if not (0 <= i < rows and 0 <= j < cols):
                    raise IndexError(f"entry {(i, j)} outside {rows}x{cols}")
                v = conv(v)
                if not isz(v):
                    self.entries[(i, j)] = v

    # -- constructors -------------------------------------------------------
    @classmethod
    def from_dense(cls, data, domain: Domain) -> "SparseMatrix":
        rows = len(data)
        cols = len(data[0]) if rows else 0
        ent = {}
        for i, row in enumerate(data):
            for j, v in enumerate(row):
                ent[(i, j)] = v
        return cls(rows, cols, domain, ent)

    @classmethod
    def identity(cls, n: int, domain: Domain) -> "SparseMatrix":
        one = domain.one()
        return cls(n, n, domain, {(i, i): one for i in range(n)})

    @classmethod
    def zeros(cls, rows: int, cols: int, domain: Domain) -> "SparseMatrix":
        return cls(rows, cols, domain)

    # -- basic ops ----------------------------------------------------------
    def copy(self) -> "SparseMatrix":
        m = SparseMatrix(self.rows, self.cols, self.domain)
        m.entries = dict(self.entries)
        return m

    def to_dense(self):
        z = self.domain.zero()
        out = [[z] * self.cols for _ in range(self.rows)]
        for (i, j), v in self.entries.items():
            out[i][j] = v
        return out

    def transpose(self) -> "SparseMatrix":
        m = SparseMatrix(self.cols, self.rows, self.domain)
        m.entries = {(j, i): v for (i, j), v in self.entries.items()}
        return m

    def __eq__(self, other):
        return (
            isinstance(other, SparseMatrix)
            and self.rows == other.rows
            and self.cols == other.cols
            and self.domain == other.domain
            and self.entries == other.entries
        )

    def is_zero(self) -> bool:
        return not self.entries

    def __add__(self, other: "SparseMatrix") -> "SparseMatrix":
        assert (self.rows, self.cols) == (other.rows, other.cols)
        D = self.domain
        out = dict(self.entries)
        for k, v in other.entries.items():
            w = D.add(out.get(k, D.zero()), v)
            if D.is_zero(w):
                out.pop(k, None)
            else:
                out[k] = w
        m = SparseMatrix(self.rows, self.cols, D)
        m.entries = out
        return m

    def __sub__(self, other: "SparseMatrix") -> "SparseMatrix":
        return self + other.scale(self.domain.neg(self.domain.one()))

    def __neg__(self) -> "SparseMatrix":
        return self.scale(self.domain.neg(self.domain.one()))

    def scale(self, c) -> "SparseMatrix":
        D = self.domain
        c = D.convert(c)
        m = SparseMatrix(self.rows, self.cols, D)
        if D.is_zero(c):
            return m
        m.entries = {k: D.mul(v, c) for k, v in self.entries.items()}
        m.entries = {k: v for k, v in m.entries.items() if not D.is_zero(v)}
        return m

    def __mul__(self, other: "SparseMatrix") -> "SparseMatrix":
        assert self.cols == other.rows, f"shape mismatch {self.cols} vs {other.rows}"
        D = self.domain
        rows_of_other: dict[int, list] = {}
        for (i, j), v in other.entries.items():
            rows_of_other.setdefault(i, []).append((j, v))
        acc: dict = {}
        for (i, k), a in self.entries.items():
            row = rows_of_other.get(k)
            if not row:
                continue
            for j, b in row:
                key = (i, j)
                w = D.mul(a, b)
                if key in acc:
                    acc[key] = D.add(acc[key], w)
                else:
                    acc[key] = w
        m = SparseMatrix(self.rows, other.cols, D)
        m.entries = {k: v for k, v in acc.items() if not D.is_zero(v)}
        return m

    def matvec(self, v: dict) -> dict:
        """Apply to a sparse column vector (dict col->val)."""
        D = self.domain
        out: dict = {}
        cols: dict[int, list] = {}
        for (i, j), a in self.entries.items():
            cols.setdefault(j, []).append((i, a))
        for j, x in v.items():
            if D.is_zero(x):
                continue
            for i, a in cols.get(j, ()):
                w = D.mul(a, x)
                if i in out:
                    out[i] = D.add(out[i], w)
                else:
                    out[i] = w
        return {i: w for i, w in out.items() if not D.is_zero(w)}

    def row_dicts(self) -> list[dict]:
        out: list[dict] = [dict() for _ in range(self.rows)]
        for (i, j), v in self.entries.items():
            out[i][j] = v
        return out

    def change_domain(self, domain: Domain) -> "SparseMatrix":
        return SparseMatrix(self.rows, self.cols, domain, dict(self.entries))

    def __repr__(self):
        return f"SparseMatrix({self.rows}x{self.cols} over {self.domain}, nnz={len(self.entries)})"


# -- block assembly ---------------------------------------------------------

def block_matrix(blocks, row_sizes, col_sizes, domain: Domain) -> SparseMatrix:
    """Assemble from {(bi, bj): SparseMatrix-or-None} with given block sizes."""
    ro = [0]
    for s in row_sizes:
        ro.append(ro[-1] + s)
    co = [0]
    for s in col_sizes:
        co.append(co[-1] + s)
    out = SparseMatrix(ro[-1], co[-1], domain)
    for (bi, bj), blk in blocks.items():
        if blk is None or blk.is_zero():
            continue
        assert blk.rows == row_sizes[bi] and blk.cols == col_sizes[bj]
        r0, c0 = ro[bi], co[bj]
        for (i, j), v in blk.entries.items():
            out.entries[(r0 + i, c0 + j)] = v
    return out


# -- elimination over a field ----------------------------------------------

class Echelon:
    """Row echelon form of a matrix over a field, reusable for solves.

    pivots: dict pivot_col -> row dict (normalized: row[pivot_col] == 1, all
    other columns of the row are > pivot_col or non-pivot columns).
    If track_transform, each pivot row also has an attached left-transform
    vector expressing it as a combination of the original rows.
    """

    def __init__(self, M: SparseMatrix, track_transform: bool = False):
        D = M.domain
        if not D.is_field:
            raise ValueError("Echelon requires a field")
        self.domain = D
        self.ncols = M.cols
        self.nrows = M.rows
        self.track = track_transform
        self.pivots: dict[int, dict] = {}
        self.transforms: dict[int, dict] = {}
        rows = M.row_dicts()
        order = sorted(range(len(rows)), key=lambda i: len(rows[i]))
        for i in order:
            row = dict(rows[i])
            tr = {i: D.one()} if track_transform else None
            self._reduce_insert(row, tr)
        self.rank = len(self.pivots)

    def _reduce_insert(self, row: dict, tr):
        D = self.domain
        while row:
            c = min(row)
            if c in self.pivots:
                f = row.pop(c)
                piv = self.pivots[c]
                for cc, v in piv.items():
                    if cc == c:
                        continue
                    w = D.sub(row.get(cc, D.zero()), D.mul(f, v))
                    if D.is_zero(w):
                        row.pop(cc, None)
                    else:
                        row[cc] = w
                if tr is not None:
                    ptr = self.transforms[c]
                    for rr, v in ptr.items():
                        w = D.sub(tr.get(rr, D.zero()), D.mul(f, v))
                        if D.is_zero(w):
                            tr.pop(rr, None)
                        else:
                            tr[rr] = w
            else:
                inv = D.inv(row[c])
                row = {cc: D.mul(v, inv) for cc, v in row.items()}
                self.pivots[c] = row
                if tr is not None:
                    self.transforms[c] = {rr: D.mul(v, inv) for rr, v in tr.items()}
                return

    def residue(self, vec: dict) -> dict:
        """Reduce a row vector modulo the row space; zero iff in row space."""
        D = self.domain
        row = {c: v for c, v in vec.items() if not D.is_zero(v)}
        while row:
            c = min(row)
            if c not in self.pivots:
                return row
            f = row.pop(c)
            for cc, v in self.pivots[c].items():
                if cc == c:
                    continue
                w = D.sub(row.get(cc, D.zero()), D.mul(f, v))
                if D.is_zero(w):
                    row.pop(cc, None)
                else:
                    row[cc] = w
        return {}

    def kernel_basis(self) -> list[dict]:
        """Basis of {x : Mx = 0} (column vectors as dicts)."""
        D = self.domain
        piv_cols = sorted(self.pivots)
        free_cols = [c for c in range(self.ncols) if c not in self.pivots]
        basis = []
        for f in free_cols:
            x = {f: D.one()}
            for c in reversed(piv_cols):
                row = self.pivots[c]
                s = D.zero()
                for cc, v in row.items():
                    if cc == c:
                        continue
                    xv = x.get(cc)
                    if xv is not None:
                        s = D.add(s, D.mul(v, xv))
                if not D.is_zero(s):
                    x[c] = D.neg(s)
            basis.append(x)
        return basis


def rank(M: SparseMatrix) -> int:
    if M.domain.is_field:
        return Echelon(M).rank
    if M.domain == ZZ:
        return Echelon(M.change_domain(QQ)).rank
    raise ValueError(f"rank over {M.domain} unsupported")


def kernel_basis(M: SparseMatrix) -> list[dict]:
    return Echelon(M).kernel_basis()


class Solver:
    """Solve M x = b repeatedly for fixed M over a field.

    Echelonizes the transpose-augmented system once: we echelonize M's
    transpose rows... (concretely: echelon of M's rows with left-transform is
    the wrong variance for Mx=b, so we echelonize columns: x-space).
    """

    def __init__(self, M: SparseMatrix):
        self.M = M
        self.domain = M.domain
        # Echelonize the columns of M (rows of M^T) with transform: each pivot
        # of M^T's row space is a combination of columns of M, i.e. M applied
        # to a known x-vector.
        self.ech = Echelon(M.transpose(), track_transform=True)

    def solve(self, b: dict):
        """Return x (dict) with Mx = b, or None if inconsistent."""
        D = self.domain
        row = {c: v for c, v in b.items() if not D.is_zero(v)}
        x: dict = {}
        while row:
            c = min(row)
            piv = self.ech.pivots.get(c)
            if piv is None:
                return None
            f = row.pop(c)
            for cc, v in piv.items():
                if cc == c:
                    continue
                w = D.sub(row.get(cc, D.zero()), D.mul(f, v))
                if D.is_zero(w):
                    row.pop(cc, None)
                else:
                    row[cc] = w
            for rr, v in self.ech.transforms[c].items():
                w = D.add(x.get(rr, D.zero()), D.mul(f, v))
                if D.is_zero(w):
                    x.pop(rr, None)
                else:
                    x[rr] = w
        return x


def solve_linear(M: SparseMatrix, b: dict):
    return Solver(M).solve(b)


# -- Smith normal form over ZZ ----------------------------------------------

def smith_normal_form(M: SparseMatrix, transforms: bool = True):
    """Return (invariants, U, V) with U*M*V diagonal = diag(invariants).

    invariants is the full list of nonzero diagonal entries d_1 | d_2 | ...,
    all positive.  U (rows x rows) and V (cols x cols) are unimodular; they are
    None when transforms=False.
    """
    if M.domain != ZZ:
        raise ValueError("smith_normal_form requires ZZ")
    nr, nc = M.rows, M.cols
    rows: dict[int, dict] = {}
    cols: dict[int, dict] = {}
    for (i, j), v in M.entries.items():
        rows.setdefault(i, {})[j] = v
        cols.setdefault(j, {})[i] = v

    U = SparseMatrix.identity(nr, ZZ) if transforms else None
    V = SparseMatrix.identity(nc, ZZ) if transforms else None
    urows: list[dict] = [{i: 1} for i in range(nr)] if transforms else None
    vcols: list[dict] = [{j: 1} for j in range(nc)] if transforms else None

    def set_entry(i, j, v):
        if v:
            rows.setdefault(i, {})[j] = v
            cols.setdefault(j, {})[i] = v
        else:
            r = rows.get(i)
            if r and j in r:
                del r[j]
                if not r:
                    del rows[i]
            c = cols.get(j)
            if c and i in c:
                del c[i]
                if not c:
                    del cols[j]

    def row_op(i1, i2, q):
        # row i1 -= q * row i2
        for j, v in list(rows.get(i2, {}).items()):
            set_entry(i1, j, rows.get(i1, {}).get(j, 0) - q * v)
        if transforms:
            r2 = urows[i2]
            r1 = urows[i1]
            for k, v in r2.items():
                w = r1.get(k, 0) - q * v
                if w:
                    r1[k] = w
                else:
                    r1.pop(k, None)

    def col_op(j1, j2, q):
        # col j1 -= q * col j2
        for i, v in list(cols.get(j2, {}).items()):
            set_entry(i, j1, rows.get(i, {}).get(j1, 0) - q * v)
        if transforms:
            c2 = vcols[j2]
            c1 = vcols[j1]
            for k, v in c2.items():
                w = c1.get(k, 0) - q * v
                if w:
                    c1[k] = w
                else:
                    c1.pop(k, None)

    def swap_rows(i1, i2):
        if i1 == i2:
            return
        r1, r2 = rows.get(i1, {}), rows.get(i2, {})
        for j in set(r1) | set(r2):
            a, b = r1.get(j, 0), r2.get(j, 0)
            set_entry(i1, j, b)
            set_entry(i2, j, a)
        if transforms:
            urows[i1], urows[i2] = urows[i2], urows[i1]

    def swap_cols(j1, j2):
        if j1 == j2:
            return
        c1, c2 = cols.get(j1, {}), cols.get(j2, {})
        for i in set(c1) | set(c2):
            a, b = c1.get(i, 0), c2.get(i, 0)
            set_entry(i, j1, b)
            set_entry(i, j2, a)
        if transforms:
            vcols[j1], vcols[j2] = vcols[j2], vcols[j1]

    def scale_row(i):
        for j in list(rows.get(i, {})):
            set_entry(i, j, -rows[i][j])
        if transforms:
            urows[i] = {k: -v for k, v in urows[i].items()}

    invariants = []
    k = 0
    limit = min(nr, nc)
    while k < limit:
        # find pivot: smallest |value| among remaining entries
        best = None
        for i, r in rows.items():
            if i < k:
                continue
            for j, v in r.items():
                if j < k:
                    continue
                a = abs(v)
                if best is None or a < best[0]:
                    best = (a, i, j)
                    if a == 1:
                        break
            if best and best[0] == 1:
                break
        if best is None:
            break
        _, pi, pj = best
        swap_rows(k, pi)
        swap_cols(k, pj)
        while True:
            p = rows[k][k]
            done = True
            for i in list(cols.get(k, {})):
                if i == k:
                    continue
                v = cols[k][i]
                q = v // p
                if q:
                    row_op(i, k, q)
                if rows.get(i, {}).get(k, 0):
                    # remainder smaller than pivot: swap up, restart
                    swap_rows(k, i)
                    done = False
                    break
            if not done:
                continue
            for j in list(rows.get(k, {})):
                if j == k:
                    continue
                v = rows[k][j]
                q = v // p
                if q:
                    col_op(j, k, q)
                if rows.get(k, {}).get(j, 0):
                    swap_cols(k, j)
                    done = False
                    break
            if not done:
                continue
            # row k and col k are clear outside the pivot; check divisibility
            p = rows[k][k]
            bad = None
            for i, r in rows.items():
                if i <= k:
                    continue
                for j, v in r.items():
                    if j <= k:
                        continue
                    if v % p:
                        bad = i
                        break
                if bad is not None:
                    break
            if bad is None:
                break
            row_op(k, bad, -1)  # fold the offending row in, redo
        if rows[k][k] < 0:
            scale_row(k)
        invariants.append(rows[k][k])
        k += 1

    if transforms:
        U = SparseMatrix(nr, nr, ZZ)
        for i, r in enumerate(urows):
            for j, v in r.items():
                U.entries[(i, j)] = v
        V = SparseMatrix(nc, nc, ZZ)
        for j, c in enumerate(vcols):
            for i, v in c.items():
                V.entries[(i, j)] = v
    return invariants, U, V
