"""Tests for mixed complexes and their truncated equivariant modules."""
import random

from ctloop.domains import QQ, GF
from ctloop.sparse import SparseMatrix
from ctloop.chain import cohomology_dims, dual_shift, verify_complex
from ctloop.mixed import (
    MixedComplex,
    UModule,
    barcode,
    dual_shift_mixed,
    equivariant_module,
    gysin_sequence,
    hfp,
    shift_mixed,
    stability_check,
    verify_mixed,
)

from oracles import two_line_equivariant_dims
from test_chain import _conjugators, _rand_scalar


def random_mixed(rng, dom, lo=-2, hi=2, max_pieces=2, K=2):
    """Random direct sum of basic mixed summands, conjugated by a random
    graded automorphism.  Returns (M, expected hfp H dims, expected bars)
    for truncation order K."""
    dims = {q: 0 for q in range(lo - 1, hi + 2)}
    b_ent, B_ent = [], []  # (q, row, col, val)
    hdims: dict[int, int] = {}
    bars: dict[tuple, int] = {}

    def add_h(n, k=1):
        hdims[n] = hdims.get(n, 0) + k

    def add_bar(s, e, k=1):
        bars[(s, e)] = bars.get((s, e), 0) + k

    for q in range(lo, hi + 1):
        for _ in range(rng.randint(0, max_pieces)):
            kind = rng.choice(["trivial", "free", "interval", "twoline"])
            if kind == "trivial":
                dims[q] += 1
                for j in range(K + 1):
                    add_h(q + 2 * j)
                add_bar(q, q + 2 * K)
            elif kind == "free":
                # generator g in degree q, eps*g in degree q-1, B g = eps g
                i, j = dims[q], dims[q - 1]
                dims[q] += 1
                dims[q - 1] += 1
                B_ent.append((q, j, i, dom.one()))
                add_h(q - 1)
                add_h(q + 2 * K)
                add_bar(q - 1, q - 1)
                add_bar(q + 2 * K, q + 2 * K)
            elif kind == "interval":
                # x in degree q, b x = y in degree q+1: acyclic
                i, j = dims[q], dims[q + 1]
                dims[q] += 1
                dims[q + 1] += 1
                b_ent.append((q, j, i, dom.one()))
            else:
                # x in degree q, y in degree q+1, B y = w x
                w = dom.convert(rng.randint(1, 3))
                i, j = dims[q], dims[q + 1]
                dims[q] += 1
                dims[q + 1] += 1
                B_ent.append((q + 1, i, j, w))
                add_h(q)
                add_h(q + 1 + 2 * K)
                add_bar(q, q)
                add_bar(q + 1 + 2 * K, q + 1 + 2 * K)
    b = {}
    for (q, i, j, v) in b_ent:
        m = b.setdefault(q, SparseMatrix(dims[q + 1], dims[q], dom))
        m.entries[(i, j)] = v
    B = {}
    for (q, i, j, v) in B_ent:
        m = B.setdefault(q, SparseMatrix(dims[q - 1], dims[q], dom))
        m.entries[(i, j)] = v
    P, Pinv = _conjugators(rng, dims, dom, lo - 1, hi + 1)
    bc = {q: P[q + 1] * m * Pinv[q] for q, m in b.items()}
    Bc = {q: P[q - 1] * m * Pinv[q] for q, m in B.items()}
    M = MixedComplex(dom, {q: n for q, n in dims.items() if n}, bc, Bc)
    bars_list = sorted((s, e, k) for (s, e), k in bars.items())
    return M, hdims, bars_list


def test_verify_mixed_random():
    rng = random.Random(101)
    for dom in (QQ, GF(5)):
        for _ in range(10):
            M, _, _ = random_mixed(rng, dom)
            assert verify_mixed(M) == []


def test_verify_mixed_catches_anticommutation_failure():
    # b(x) = y and B(y) = x: bB + Bb = id on both generators
    b = {0: SparseMatrix.from_dense([[1]], QQ)}
    B = {1: SparseMatrix.from_dense([[1]], QQ)}
    M = MixedComplex(QQ, {0: 1, 1: 1}, b, B)
    assert ("bB+Bb", 0) in verify_mixed(M)


def test_dual_shift_mixed_preserves_axioms():
    rng = random.Random(7)
    for _ in range(10):
        M, _, _ = random_mixed(rng, QQ)
        d = rng.randint(-1, 2)
        Md = dual_shift_mixed(M, d)
        assert verify_mixed(Md) == []
        MM = dual_shift_mixed(Md, d)
        assert MM.dims == M.dims


def test_shift_mixed_preserves_axioms_and_shifts_cohomology():
    rng = random.Random(11)
    for _ in range(10):
        M, _, _ = random_mixed(rng, QQ)
        d = rng.randint(-2, 3)
        Md = shift_mixed(M, d)
        assert verify_mixed(Md) == []
        h = cohomology_dims(M.to_cochain())
        hd = cohomology_dims(Md.to_cochain())
        assert hd == {q + d: n for q, n in h.items()}
        back = shift_mixed(Md, -d)
        assert back.dims == M.dims and back.b == M.b and back.B == M.B


def test_hfp_is_a_complex_and_u_is_chain_map():
    rng = random.Random(13)
    for dom in (QQ, GF(3)):
        for _ in range(6):
            M, _, _ = random_mixed(rng, dom)
            um = hfp(M, rng.randint(0, 3))
            assert verify_complex(um.cochain) == []
            assert um.u_map().verify() == []


def test_hfp_cohomology_matches_summand_accounting():
    rng = random.Random(19)
    for dom in (QQ, GF(7)):
        for _ in range(8):
            K = rng.randint(1, 3)
            M, hdims, _ = random_mixed(rng, dom, K=K)
            um = hfp(M, K)
            assert um.h_dims() == {n: v for n, v in hdims.items() if v}


def test_barcode_matches_summand_accounting():
    rng = random.Random(29)
    for _ in range(8):
        K = rng.randint(1, 2)
        M, hdims, bars = random_mixed(rng, QQ, K=K)
        got = barcode(hfp(M, K))
        assert got == bars
        # reconstruction: bars covering n account for every cohomology class
        for n, v in hdims.items():
            cover = sum(k for (s, e, k) in got
                        if s <= n <= e and (n - s) % 2 == 0)
            assert cover == v


def test_equivariant_module_two_line_vs_oracle():
    for w in (1, 2, 5):
        for d in (0, 1, 2):
            for K in (0, 1, 3):
                B = {1: SparseMatrix.from_dense([[w]], QQ)}
                M = MixedComplex(QQ, {0: 1, 1: 1}, {}, B)
                um = equivariant_module(M, K, d)
                assert um.h_dims() == two_line_equivariant_dims(w, d, K)
                assert um.window == (d - 1, d - 1 + 2 * K)


def test_equivariant_module_window_stability():
    rng = random.Random(31)
    for _ in range(6):
        M, _, _ = random_mixed(rng, QQ)
        assert stability_check(M, rng.randint(0, 2))
        assert stability_check(dual_shift_mixed(M, 1), 1)


def test_gysin_sequence_exact():
    rng = random.Random(37)
    for dom in (QQ, GF(2)):
        for _ in range(5):
            M, _, _ = random_mixed(rng, dom)
            rep = gysin_sequence(M, rng.randint(1, 3))
            assert rep["exact"], rep["failures"]


def test_dual_of_hfp_is_hfp_of_dual_up_to_shift():
    # linear duality of the truncated polynomial ring: the dual of the
    # truncated equivariant complex is the equivariant complex of the dual
    # mixed complex, reindexed by 2K.
    rng = random.Random(41)
    for _ in range(6):
        K = rng.randint(0, 2)
        M, _, _ = random_mixed(rng, QQ, K=K)
        left = cohomology_dims(dual_shift(hfp(M, K).cochain, 0))
        right = hfp(dual_shift_mixed(M, 0), K).h_dims()
        assert right == {n + 2 * K: v for n, v in left.items()}


def test_zl_cohomology_trivial_action():
    from ctloop.chain import CochainComplex, GradedMap
    from ctloop.mixed import zl_cohomology
    for K in (1, 2):
        # over F_3 with ell = 3: periodic resolution never cancels
        C = CochainComplex(GF(3), {0: 1}, {})
        sig = GradedMap.identity(C)
        um = zl_cohomology(C, sig, 3, K, 0)
        assert um.h_dims() == {n: 1 for n in range(2 * K + 2)}
        assert um.u_map().verify() == []
        # over Q the norm is invertible: only degree 0 inside the window
        Cq = CochainComplex(QQ, {0: 1}, {})
        umq = zl_cohomology(Cq, GradedMap.identity(Cq), 3, K, 0)
        h = {n: v for n, v in umq.h_dims().items() if n <= 2 * K}
        assert h == {0: 1}


def test_zl_cohomology_regular_representation():
    from ctloop.chain import CochainComplex, GradedMap
    from ctloop.mixed import zl_cohomology
    for dom, ell in ((QQ, 3), (GF(3), 3), (GF(2), 2)):
        C = CochainComplex(dom, {0: ell}, {})
        rot = SparseMatrix(ell, ell, dom)
        for i in range(ell):
            rot.entries[((i + 1) % ell, i)] = dom.one()
        sig = GradedMap(C, C, 0, {0: rot})
        um = zl_cohomology(C, sig, ell, 2, 0)
        h = {n: v for n, v in um.h_dims().items() if n <= 4}
        assert h == {0: 1}


def test_zl_cohomology_rejects_wrong_order():
    import pytest
    from ctloop.chain import CochainComplex, GradedMap
    from ctloop.mixed import zl_cohomology
    C = CochainComplex(QQ, {0: 1}, {})
    sig = GradedMap.identity(C).scale(QQ.convert(2))
    with pytest.raises(ValueError):
        zl_cohomology(C, sig, 3, 1, 0)


def test_zl_barcode_trivial_f3():
    from ctloop.chain import CochainComplex, GradedMap
    from ctloop.mixed import barcode_summary, zl_cohomology
    K = 2
    C = CochainComplex(GF(3), {0: 1}, {})
    um = zl_cohomology(C, GradedMap.identity(C), 3, K, 0)
    summ = barcode_summary(um, 2 * K)
    assert summ["free"] == [0, 1]
    assert summ["torsion"] == []


def test_gysin_check_dual_form():
    from ctloop.mixed import gysin_check
    rng = random.Random(43)
    for _ in range(4):
        M, _, _ = random_mixed(rng, QQ)
        rep = gysin_check(M, 2, 1)
        assert rep["exact"], rep["failures"]


def test_barcode_summary_torsion():
    from ctloop.mixed import barcode_summary
    # two-line with B = w: one singleton bar at bottom, one at the
    # unstable top; window cuts the top off as free-so-far
    B = {1: SparseMatrix.from_dense([[2]], QQ)}
    M = MixedComplex(QQ, {0: 1, 1: 1}, {}, B)
    K = 2
    um = equivariant_module(M, K, 1)
    summ = barcode_summary(um, um.window[0] + 2 * K)
    assert summ["torsion"] == [(0, 1, 1)]
