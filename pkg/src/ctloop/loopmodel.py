"""Discrete loop-space models on metric graphs.

A level-n configuration is a flat tuple of n*N vertices (n blocks of N),
read cyclically; the step from position p to p+1 (mod n*N) is charged to
budget class p mod N, and each class must stay within T/N.  The set of
configurations is thickened to the flag complex of the coordinatewise
adjacency graph, whose simplicial chains (placed in non-positive
cohomological degrees) form the levels of a pre-cocyclic complex: cofaces
insert a constant block at a seam, the cyclic operator rotates blocks with
the sign (-1)^{n-1}.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .domains import Domain
from .sparse import SparseMatrix
from .chain import CochainComplex, GradedMap
from .precyclic import PreCocyclicComplex

DEFAULT_STATE_CAP = 5_000_000


class MetricGraph:
    def __init__(self, m: int, edges, dim: int, size):
        """edges: iterable of (u, v, length) with positive rational lengths."""
        self.m = m
        self.dim = dim
        self.size = Fraction(size)
        self.edges = [(min(u, v), max(u, v), Fraction(w)) for (u, v, w) in edges]
        self.adj = {v: set() for v in range(m)}
        for (u, v, w) in self.edges:
            assert 0 <= u < m and 0 <= v < m and u != v and w > 0
            self.adj[u].add(v)
            self.adj[v].add(u)
        INF = None
        dist = [[INF] * m for _ in range(m)]
        for v in range(m):
            dist[v][v] = Fraction(0)
        for (u, v, w) in self.edges:
            if dist[u][v] is None or w < dist[u][v]:
                dist[u][v] = dist[v][u] = w
        for k in range(m):
            dk = dist[k]
            for i in range(m):
                dik = dist[i][k]
                if dik is None:
                    continue
                di = dist[i]
                for j in range(m):
                    if dk[j] is None:
                        continue
                    w = dik + dk[j]
                    if di[j] is None or w < di[j]:
                        di[j] = w
        assert all(all(x is not None for x in row) for row in dist), "graph not connected"
        for i in range(m):
            for j in range(m):
                assert dist[i][j] == dist[j][i]
        self.dist = dist
        # integer-rescaled distance table for exact bulk comparisons
        scale = 1
        for row in dist:
            for x in row:
                scale = scale * x.denominator // math.gcd(scale, x.denominator)
        self.dist_scale = scale
        self.dist_int = np.array(
            [[int(x * scale) for x in row] for row in dist], dtype=np.int64)

    def distance(self, u: int, v: int) -> Fraction:
        return self.dist[u][v]

    def adjacent(self, u: int, v: int) -> bool:
        return u == v or v in self.adj[u]

    @classmethod
    def from_file(cls, path: str) -> "MetricGraph":
        """First line "m d L"; then one "u v length" line per edge."""
        edges = []
        with open(path) as fh:
            header = fh.readline().split()
            m, d, L = int(header[0]), int(header[1]), Fraction(header[2])
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                u, v, w = line.split()
                edges.append((int(u), int(v), Fraction(w)))
        return cls(m, edges, d, L)


def build_cycle_graph(m: int, L) -> MetricGraph:
    if m < 3:
        raise ValueError("degenerate cycle")
    L = Fraction(L)
    step = L / m
    edges = [(i, (i + 1) % m, step) for i in range(m)]
    return MetricGraph(m, edges, 1, L)


def build_product_graph(G1: MetricGraph, G2: MetricGraph) -> MetricGraph:
    """l1-product: vertices are pairs (i, j) numbered i*m2 + j; edges move one
    coordinate along an edge of its factor."""
    m = G1.m * G2.m
    edges = []
    for (u, v, w) in G1.edges:
        for j in range(G2.m):
            edges.append((u * G2.m + j, v * G2.m + j, w))
    for (u, v, w) in G2.edges:
        for i in range(G1.m):
            edges.append((i * G2.m + u, i * G2.m + v, w))
    return MetricGraph(m, edges, G1.dim + G2.dim, G1.size + G2.size)


def enumerate_loop_tuples(X: MetricGraph, N: int, n: int, T,
                          state_cap: int = DEFAULT_STATE_CAP,
                          unit_cap: bool = True) -> list:
    """All closed configurations of n blocks of N vertices whose step
    lengths, grouped by position mod N, each stay within T/N.

    By default every single step is additionally capped at length 1 (the
    disk radius in graph units), which makes winding number an invariant
    of connected components; unit_cap=False keeps only the budget
    constraint."""
    assert N >= 1 and n >= 1
    T = Fraction(T)
    assert T >= 0
    budget = T / N
    total = n * N
    dist = X.dist
    out = []
    spent = [Fraction(0)] * N
    flat = [0] * total

    def extend(p):
        if len(out) > state_cap:
            raise RuntimeError(
                f"state-space overflow: more than {state_cap} configurations")
        if p == total:
            # closing step from the last position back to the start
            w = dist[flat[total - 1]][flat[0]]
            if unit_cap and w > 1:
                return
            if spent[(total - 1) % N] + w <= budget:
                out.append(tuple(flat))
            return
        prev = flat[p - 1] if p else None
        for v in range(X.m):
            flat[p] = v
            if p == 0:
                extend(1)
                continue
            w = dist[prev][v]
            if unit_cap and w > 1:
                continue
            cls = (p - 1) % N
            if spent[cls] + w <= budget:
                spent[cls] += w
                extend(p + 1)
                spent[cls] -= w
        flat[p] = 0

    extend(0)
    return out


def adjacency_masks(tuples, X: MetricGraph) -> list:
    """Bit masks of the coordinatewise adjacency graph on configurations:
    two configurations are adjacent when every coordinate pair is equal or at
    graph distance <= one edge length of the pair.  mask[i] has bit j set iff
    i != j are adjacent."""
    n = len(tuples)
    if n == 0:
        return []
    A = np.array(tuples, dtype=np.int32)
    # "equal or adjacent" as a 0/1 table on vertex pairs
    ok = np.zeros((X.m, X.m), dtype=bool)
    for u in range(X.m):
        ok[u, u] = True
        for v in X.adj[u]:
            ok[u, v] = True
    masks = [0] * n
    # chunk so the intermediate (chunk, n, width) table stays modest
    width = A.shape[1]
    chunk = max(1, min(n, 8_000_000 // max(1, n * width // 8)))
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        adj = ok[A[lo:hi, None, :], A[None, :, :]].all(axis=2)
        for r in range(hi - lo):
            row = adj[r]
            row[lo + r] = False
            b = np.packbits(row, bitorder="little").tobytes()
            masks[lo + r] = int.from_bytes(b, "little")
    return masks


class FlagComplex:
    """Flag (clique) complex on an explicit vertex list, truncated in
    dimension.  simplices[k] lists sorted index tuples of k-simplices."""

    def __init__(self, vertices, masks, top_dim: int):
        self.vertices = list(vertices)
        n = len(self.vertices)
        self.top_dim = top_dim
        self.masks = list(masks)
        self.simplices = {0: [(i,) for i in range(n)]}
        k = 1
        while k <= top_dim:
            prev = self.simplices[k - 1]
            cur = []
            for s in prev:
                common = self.masks[s[0]]
                for v in s[1:]:
                    common &= self.masks[v]
                common = common >> (s[-1] + 1) << (s[-1] + 1)
                while common:
                    v = (common & -common).bit_length() - 1
                    common &= common - 1
                    cur.append(s + (v,))
            if not cur:
                break
            self.simplices[k] = cur
            k += 1
        self.index = {k: {s: i for i, s in enumerate(ss)}
                      for k, ss in self.simplices.items()}

    def dims(self):
        return {k: len(ss) for k, ss in self.simplices.items()}


def thicken_flag_complex(tuples, X: MetricGraph, top_dim: int | None = None) -> FlagComplex:
    """Flag complex of the coordinatewise adjacency graph on configurations."""
    if top_dim is None:
        top_dim = X.dim + 1
    if top_dim < X.dim + 1:
        raise ValueError("truncation unsound: top dimension below model dimension + 1")
    return FlagComplex(tuples, adjacency_masks(tuples, X), top_dim)


def edge_collapse_core(masks) -> list:
    """Strong edge collapse: repeatedly remove an edge uv whose common open
    neighborhood lies inside a single closed neighborhood N[w].  Removal
    preserves the homotopy type of the flag complex; the result is the
    adjacency of a much smaller homotopy-equivalent core.

    Large graphs are routed to a compiled bitset kernel."""
    n = len(masks)
    if n >= 4000:
        return _edge_collapse_fast(masks)
    return _edge_collapse_py(masks)


def _edge_collapse_py(masks) -> list:
    N = list(masks)
    n = len(N)
    while True:
        removed = 0
        for u in range(n):
            w = N[u] >> (u + 1) << (u + 1)
            while w:
                v = (w & -w).bit_length() - 1
                w &= w - 1
                c = N[u] & N[v]
                if c == 0:
                    continue
                cc = c
                while cc:
                    x = (cc & -cc).bit_length() - 1
                    cc &= cc - 1
                    if c & ~(N[x] | (1 << x)) == 0:
                        N[u] &= ~(1 << v)
                        N[v] &= ~(1 << u)
                        removed += 1
                        break
        if not removed:
            return N


def _edge_collapse_fast(masks) -> list:
    """Bitset edge collapse compiled with numba; vertices are relabelled by
    descending degree so the candidate scan tries dominating hubs first."""
    n = len(masks)
    deg = [m.bit_count() for m in masks]
    order = sorted(range(n), key=lambda v: -deg[v])
    pos = [0] * n
    for r, v in enumerate(order):
        pos[v] = r
    # permute the bit matrix in chunks: rows by gather, columns by unpack /
    # fancy-index / repack
    nbytes = -(-n // 8)
    words = -(-n // 64)
    pos_arr = np.asarray(pos, dtype=np.int64)
    R = np.zeros((n, words * 8), dtype=np.uint8)
    chunk = max(1, 2_000_000_00 // max(1, n))
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        raw = np.zeros((hi - lo, nbytes), dtype=np.uint8)
        for r in range(lo, hi):
            raw[r - lo] = np.frombuffer(
                masks[order[r]].to_bytes(nbytes, "little"), dtype=np.uint8)
        bits = np.unpackbits(raw, axis=1, count=n, bitorder="little")
        perm = np.zeros((hi - lo, words * 64), dtype=np.uint8)
        perm[:, pos_arr] = bits
        R[lo:hi] = np.packbits(perm, axis=1, bitorder="little")
    R = R.view(np.uint64).reshape(n, words)
    degcl = np.array([deg[v] + 1 for v in order], dtype=np.int64)
    _collapse_kernel(R, degcl)
    # back to python ints in the original labelling
    out = [0] * n
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        bits = np.unpackbits(R[lo:hi].view(np.uint8), axis=1,
                             count=words * 64, bitorder="little")
        sel = bits[:, pos_arr]
        packed = np.packbits(sel, axis=1, bitorder="little")
        for r in range(lo, hi):
            out[order[r]] = int.from_bytes(packed[r - lo].tobytes(), "little")
    return out


_collapse_kernel = None


def _build_collapse_kernel():
    import numba

    m1 = np.uint64(0x5555555555555555)
    m2 = np.uint64(0x3333333333333333)
    m4 = np.uint64(0x0F0F0F0F0F0F0F0F)
    h01 = np.uint64(0x0101010101010101)

    @numba.njit(cache=True)
    def kern(R, degcl):
        # degcl: initial closed degrees, nonincreasing in the vertex index.
        # A candidate with degcl < |C| can never contain C, and later
        # candidates have no larger initial degree, so the scan breaks there.
        #
        # Worklist: removing edge (u, v) only shrinks the common
        # neighborhoods of edges at u and at v, so only those can become
        # removable; a vertex queue with dedup processes the cascade.
        n, w = R.shape
        one = np.uint64(1)
        zero = np.uint64(0)
        c = np.empty(w, np.uint64)
        queue = np.empty(n, np.int64)
        inq = np.ones(n, np.bool_)
        for i in range(n):
            # low-degree fringe first: hub edges are mostly gone by the
            # time the hubs themselves are processed
            queue[i] = n - 1 - i
        head = 0
        size = n
        while size > 0:
            u = queue[head]
            head = (head + 1) % n
            size -= 1
            inq[u] = False
            touched = False
            for wi in range(w):
                bits = R[u, wi]
                while bits != zero:
                    lsb = bits & (zero - bits)
                    bits ^= lsb
                    v = (wi << 6) + int(math.log2(float(lsb)))
                    cnt = 0
                    for k in range(w):
                        y = R[u, k] & R[v, k]
                        c[k] = y
                        if y != zero:
                            y = y - ((y >> one) & m1)
                            y = (y & m2) + ((y >> np.uint64(2)) & m2)
                            y = (y + (y >> np.uint64(4))) & m4
                            cnt += int((y * h01) >> np.uint64(56))
                    if cnt == 0:
                        continue
                    dominated = False
                    stop = False
                    for k in range(w):
                        cb = c[k]
                        while cb != zero:
                            l2 = cb & (zero - cb)
                            cb ^= l2
                            x = (k << 6) + int(math.log2(float(l2)))
                            if degcl[x] < cnt:
                                stop = True
                                break
                            ok = True
                            for k2 in range(w):
                                m = R[x, k2]
                                if k2 == (x >> 6):
                                    m |= one << np.uint64(x & 63)
                                if c[k2] & ~m != zero:
                                    ok = False
                                    break
                            if ok:
                                dominated = True
                                break
                        if dominated or stop:
                            break
                    if dominated:
                        R[u, v >> 6] &= ~(one << np.uint64(v & 63))
                        R[v, u >> 6] &= ~(one << np.uint64(u & 63))
                        touched = True
                        if not inq[v]:
                            inq[v] = True
                            queue[(head + size) % n] = v
                            size += 1
            if touched and not inq[u]:
                # earlier edges at u saw the pre-removal neighborhoods
                inq[u] = True
                queue[(head + size) % n] = u
                size += 1
        return

    return kern


def _collapse_kernel(R, degcl):
    global _collapse_kernel
    _collapse_kernel = _build_collapse_kernel()
    _collapse_kernel(R, degcl)


def graph_components(masks) -> list:
    """Connected components of a bitmask graph; returns a label per vertex."""
    n = len(masks)
    label = [-1] * n
    comp = 0
    for s in range(n):
        if label[s] >= 0:
            continue
        stack = [s]
        label[s] = comp
        while stack:
            u = stack.pop()
            w = masks[u]
            while w:
                v = (w & -w).bit_length() - 1
                w &= w - 1
                if label[v] < 0:
                    label[v] = comp
                    stack.append(v)
        comp += 1
    return label


def winding_number(t, X: MetricGraph) -> int:
    """Winding number of a configuration on a cycle graph: signed vertex
    steps (minimal lifts) summed around the loop, divided by the vertex
    count.  Well defined because every step is shorter than half the
    circumference."""
    m = X.m
    total = 0
    for p in range(len(t)):
        s = ((t[(p + 1) % len(t)] - t[p] + m // 2) % m) - m // 2
        total += s
    assert total % m == 0, "open configuration"
    return total // m


def single_move_components(tuples, X: MetricGraph) -> list:
    """Component labels under single-coordinate moves q_p -> neighbor of q_p
    (staying inside the enumerated set).  A refinement of the adjacency
    components that needs no pairwise testing; on cycle graphs, matching
    the winding count certifies it equals the true component count."""
    index = {t: i for i, t in enumerate(tuples)}
    parent = list(range(len(tuples)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for t, i in index.items():
        for p in range(len(t)):
            for v in X.adj[t[p]]:
                s = t[:p] + (v,) + t[p + 1:]
                j = index.get(s)
                if j is not None:
                    ri, rj = find(i), find(j)
                    if ri != rj:
                        parent[ri] = rj
    return [find(i) for i in range(len(tuples))]


def flag_h01(tuples, X: MetricGraph, domain: Domain) -> tuple:
    """Exact (b0, b1) of the flag complex on the configurations, computed on
    the strong-edge-collapse core.  b0 needs only components; b1 is the
    cohomology of the core's flag complex truncated at dimension 2, sound
    because the collapse preserves the homotopy type."""
    masks = adjacency_masks(tuples, X)
    core = edge_collapse_core(masks)
    b0 = len(set(graph_components(masks)))
    fc = FlagComplex(tuples, core, 2)
    C = chains_complex(fc, domain)
    from .chain import cohomology_dims
    h = cohomology_dims(C)
    return b0, h.get(-1, 0)


def chains_complex(fc: FlagComplex, domain: Domain) -> CochainComplex:
    """Simplicial chains with k-simplices in cohomological degree -k and the
    boundary operator as the (degree +1) differential."""
    dims = {-k: len(ss) for k, ss in fc.simplices.items()}
    diffs = {}
    for k, ss in fc.simplices.items():
        if k == 0:
            continue
        tgt = fc.index[k - 1]
        m = SparseMatrix(len(fc.simplices[k - 1]), len(ss), domain)
        one = domain.one()
        neg = domain.neg(one)
        for j, s in enumerate(ss):
            for i in range(k + 1):
                face = s[:i] + s[i + 1:]
                m.entries[(tgt[face], j)] = one if i % 2 == 0 else neg
        diffs[-k] = m
    return CochainComplex(domain, dims, diffs)


def chain_map(src: FlagComplex, dst: FlagComplex, domain: Domain, vmap,
              scale=None) -> GradedMap:
    """Pushforward along a simplicial vertex map (vmap: src vertex index ->
    dst vertex index), with orientation signs; degenerate images map to 0."""
    Csrc = chains_complex(src, domain)
    Cdst = chains_complex(dst, domain)
    mats = {}
    one = domain.one()
    neg = domain.neg(one)
    for k, ss in src.simplices.items():
        tgt = dst.index.get(k, {})
        m = SparseMatrix(len(dst.simplices.get(k, [])), len(ss), domain)
        for j, s in enumerate(ss):
            img = [vmap[v] for v in s]
            if len(set(img)) < len(img):
                continue
            order = sorted(range(len(img)), key=lambda i: img[i])
            inv = 0
            for a in range(len(order)):
                for b in range(a + 1, len(order)):
                    if order[a] > order[b]:
                        inv += 1
            key = tuple(sorted(img))
            assert key in tgt, f"image of a simplex is not a simplex: {key}"
            m.entries[(tgt[key], j)] = one if inv % 2 == 0 else neg
        if scale is not None:
            m = m.scale(scale)
        mats[-k] = m
    return GradedMap(Csrc, Cdst, 0, mats)


def _coface_vertex_maps(flat_tuples, level: int, N: int, index_next: dict):
    """Vertex maps of the insertion cofaces d_0..d_level at a level: d_i for
    i < level inserts a constant block with the seam value flat[i*N] at block
    position i; d_level appends a constant block with the start value."""
    maps = []
    for i in range(level + 1):
        vm = []
        for t in flat_tuples:
            if i < level:
                img = t[: i * N] + (t[i * N],) * N + t[i * N:]
            else:
                img = t + (t[0],) * N
            vm.append(index_next[img])
        maps.append(vm)
    return maps


def assemble_precocyclic(X: MetricGraph, N: int, n_max: int, T, domain: Domain,
                         top_dim: int | None = None,
                         state_cap: int = DEFAULT_STATE_CAP,
                         unit_cap: bool = True) -> PreCocyclicComplex:
    """Pre-cocyclic complex of the thickened loop models at levels 1..n_max.
    The result carries .spaces (level -> FlagComplex) and .tuples."""
    tuples = {}
    spaces = {}
    levels = {}
    index = {}
    for n in range(1, n_max + 1):
        ts = enumerate_loop_tuples(X, N, n, T, state_cap=state_cap, unit_cap=unit_cap)
        tuples[n] = ts
        index[n] = {t: i for i, t in enumerate(ts)}
        spaces[n] = thicken_flag_complex(ts, X, top_dim)
        levels[n] = chains_complex(spaces[n], domain)
    cofaces = {}
    for n in range(1, n_max):
        vms = _coface_vertex_maps(tuples[n], n, N, index[n + 1])
        cofaces[n] = [chain_map(spaces[n], spaces[n + 1], domain, vm) for vm in vms]
    t_ops = {}
    for n in range(1, n_max + 1):
        vm = []
        for t in tuples[n]:
            img = t[N:] + t[:N]
            vm.append(index[n][img])
        sign = domain.one() if (n - 1) % 2 == 0 else domain.neg(domain.one())
        t_ops[n] = chain_map(spaces[n], spaces[n], domain, vm, scale=sign)
    P = PreCocyclicComplex(domain, levels, cofaces, t_ops)
    P.spaces = spaces
    P.tuples = tuples
    P.params = {"N": N, "T": Fraction(T), "n_max": n_max, "unit_cap": unit_cap}
    return P


def diagonal_model(X: MetricGraph, N: int, n_max: int, T, domain: Domain,
                   top_dim: int | None = None,
                   full: PreCocyclicComplex | None = None):
    """The sub-model of constant configurations (every coordinate equal) with
    its inclusion into the full model.  Each level is the flag complex of the
    graph itself.  Returns (P_diag, {level: GradedMap into full})."""
    if full is None:
        full = assemble_precocyclic(X, N, n_max, T, domain, top_dim=top_dim)
    tuples = {}
    spaces = {}
    levels = {}
    index = {}
    for n in range(1, n_max + 1):
        ts = [(v,) * (n * N) for v in range(X.m)]
        tuples[n] = ts
        index[n] = {t: i for i, t in enumerate(ts)}
        spaces[n] = thicken_flag_complex(ts, X, top_dim)
        levels[n] = chains_complex(spaces[n], domain)
    cofaces = {}
    for n in range(1, n_max):
        vms = _coface_vertex_maps(tuples[n], n, N, index[n + 1])
        cofaces[n] = [chain_map(spaces[n], spaces[n + 1], domain, vm) for vm in vms]
    t_ops = {}
    for n in range(1, n_max + 1):
        sign = domain.one() if (n - 1) % 2 == 0 else domain.neg(domain.one())
        t_ops[n] = chain_map(spaces[n], spaces[n], domain,
                             list(range(X.m)), scale=sign)
    P = PreCocyclicComplex(domain, levels, cofaces, t_ops)
    P.spaces = spaces
    P.tuples = tuples
    incl = {}
    full_index = {n: {t: i for i, t in enumerate(full.tuples[n])}
                  for n in range(1, n_max + 1)}
    for n in range(1, n_max + 1):
        vm = [full_index[n][t] for t in tuples[n]]
        incl[n] = chain_map(spaces[n], full.spaces[n], domain, vm)
    return P, incl


def persistence_inclusions(X: MetricGraph, N: int, n_max: int, T_grid, domain: Domain,
                           top_dim: int | None = None,
                           state_cap: int = DEFAULT_STATE_CAP):
    """Models along an ascending T grid with the connecting chain maps
    (pushforward of tuple-set inclusion) from each grid point to the next.
    Returns (models, maps) with maps[k]: level -> GradedMap T_k -> T_{k+1}."""
    assert list(T_grid) == sorted(T_grid)
    models = [assemble_precocyclic(X, N, n_max, T, domain,
                                   top_dim=top_dim, state_cap=state_cap)
              for T in T_grid]
    maps = []
    for k in range(len(models) - 1):
        src, dst = models[k], models[k + 1]
        step = {}
        for n in range(1, n_max + 1):
            dst_index = {t: i for i, t in enumerate(dst.tuples[n])}
            vm = [dst_index[t] for t in src.tuples[n]]
            step[n] = chain_map(src.spaces[n], dst.spaces[n], domain, vm)
        maps.append(step)
    return models, maps
