"""Low-rate protograph LDPC codes: lifting, encoding, decoding, syndromes.

The inner code of the reconciliation protocol is a quasi-cyclic lift of a
small typed base matrix.  Base matrices are read from a plain text format
(``rows cols`` header, then the integer matrix row-major, then an optional
``puncture:`` line) so that any user-supplied construction can be plugged in.
"""

import warnings
from importlib import resources

import numpy as np

from . import gf2

LLR_MAX = 38.0

_EPS_MAG = 1e-300
_ATANH_CLIP = 1.0 - 1e-15


class LdpcError(ValueError):
    """Invalid code construction or dimension mismatch."""


class GirthWarning(UserWarning):
    """The circulant-selection heuristic could not avoid all 4-cycles."""


class RankDeficiencyWarning(UserWarning):
    """H is not full row rank; the effective rate is higher than designed."""


class Protograph:
    """Typed base graph of a protograph LDPC code.

    Parameters
    ----------
    base_matrix : array_like of shape (check_types, variable_types)
        Non-negative integers; entry (i, j) is the number of parallel edges
        between check type i and variable type j.
    punctured_cols : iterable of int, optional
        Variable types excluded from transmission.
    """

    def __init__(self, base_matrix, punctured_cols=()):
        b = np.asarray(base_matrix, dtype=np.int64)
        if b.ndim != 2 or b.size == 0:
            raise LdpcError("base matrix must be 2-D and non-empty")
        if (b < 0).any():
            raise LdpcError("base matrix entries must be non-negative")
        if (b.sum(axis=1) == 0).any() or (b.sum(axis=0) == 0).any():
            raise LdpcError("every row and column needs at least one edge")
        self.base = b
        self.punctured_cols = frozenset(int(c) for c in punctured_cols)
        if any(c < 0 or c >= b.shape[1] for c in self.punctured_cols):
            raise LdpcError("punctured column index out of range")
        if self.n_transmitted <= 0:
            raise LdpcError("all columns punctured")
        r = self.design_rate
        if not 0.0 < r < 1.0:
            raise LdpcError(f"design rate {r} outside (0, 1)")

    @property
    def n_checks(self):
        return self.base.shape[0]

    @property
    def n_vars(self):
        return self.base.shape[1]

    @property
    def n_transmitted(self):
        return self.n_vars - len(self.punctured_cols)

    @property
    def design_rate(self):
        return (self.n_vars - self.n_checks) / self.n_transmitted

    @classmethod
    def from_file(cls, path):
        """Read a base matrix from the plain text interchange format."""
        with open(path) as fh:
            tokens = []
            punct = []
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if line.startswith("puncture:"):
                    punct = [int(t) for t in line.split(":", 1)[1].split()]
                    continue
                tokens.extend(line.split())
        if len(tokens) < 2:
            raise LdpcError(f"{path}: missing 'rows cols' header")
        rows, cols = int(tokens[0]), int(tokens[1])
        vals = tokens[2:]
        if len(vals) != rows * cols:
            raise LdpcError(
                f"{path}: expected {rows * cols} entries, got {len(vals)}"
            )
        base = np.array(vals, dtype=np.int64).reshape(rows, cols)
        return cls(base, punct)

    def to_file(self, path):
        with open(path, "w") as fh:
            fh.write(f"{self.n_checks} {self.n_vars}\n")
            for row in self.base:
                fh.write(" ".join(str(int(v)) for v in row) + "\n")
            if self.punctured_cols:
                fh.write(
                    "puncture: " + " ".join(str(c) for c in sorted(self.punctured_cols)) + "\n"
                )

    def __repr__(self):
        return (
            f"Protograph({self.n_checks}x{self.n_vars}, "
            f"rate={self.design_rate:.4g}, punctured={sorted(self.punctured_cols)})"
        )


class ParityCheckMatrix:
    """Sparse binary parity-check matrix, stored as (row, col) coordinates."""

    def __init__(self, n, m_rows, rows, cols, lift_size=1, girth_ge6=None):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        if rows.shape != cols.shape:
            raise LdpcError("row/col coordinate arrays differ in length")
        if rows.size and (rows.min() < 0 or rows.max() >= m_rows):
            raise LdpcError("row index out of range")
        if cols.size and (cols.min() < 0 or cols.max() >= n):
            raise LdpcError("column index out of range")
        order = np.lexsort((cols, rows))
        rows, cols = rows[order], cols[order]
        if rows.size > 1:
            dup = (np.diff(rows) == 0) & (np.diff(cols) == 0)
            if dup.any():
                raise LdpcError("duplicate (row, col) entries")
        self.n = int(n)
        self.m_rows = int(m_rows)
        self.rows = rows
        self.cols = cols
        self.lift_size = int(lift_size)
        self.girth_ge6 = girth_ge6
        self._bp = None
        self._encoder = None
        colw = np.bincount(cols, minlength=n)
        if (colw == 0).any():
            raise LdpcError("zero-weight column")
        self.min_col_weight = int(colw.min())

    @property
    def k(self):
        """Design info length n - m_rows (before any rank adjustment)."""
        return self.n - self.m_rows

    @property
    def k_eff(self):
        """Actual info length, accounting for rank deficiency."""
        return self.encoder.k_eff

    @property
    def rank_deficiency(self):
        return self.encoder.rank_deficiency

    @property
    def info_cols(self):
        """Column indices from which the info bits of a codeword are read."""
        return self.encoder.info_cols

    def to_dense(self):
        h = np.zeros((self.m_rows, self.n), dtype=np.uint8)
        h[self.rows, self.cols] = 1
        return h

    def to_alist(self, path):
        """Export in the coordinate-list ("alist") text format."""
        colw = np.bincount(self.cols, minlength=self.n)
        roww = np.bincount(self.rows, minlength=self.m_rows)
        col_lists = [[] for _ in range(self.n)]
        row_lists = [[] for _ in range(self.m_rows)]
        for r, c in zip(self.rows, self.cols):
            col_lists[c].append(int(r) + 1)
            row_lists[r].append(int(c) + 1)
        with open(path, "w") as fh:
            fh.write(f"{self.n} {self.m_rows}\n")
            fh.write(f"{colw.max()} {roww.max()}\n")
            fh.write(" ".join(str(int(w)) for w in colw) + "\n")
            fh.write(" ".join(str(int(w)) for w in roww) + "\n")
            for lst in col_lists:
                fh.write(" ".join(map(str, lst)) + "\n")
            for lst in row_lists:
                fh.write(" ".join(map(str, lst)) + "\n")

    @property
    def encoder(self):
        if self._encoder is None:
            self._encoder = _Encoder(self)
        return self._encoder

    def __repr__(self):
        return (
            f"ParityCheckMatrix(n={self.n}, m={self.m_rows}, "
            f"nnz={self.rows.size}, lift={self.lift_size})"
        )


# ---------------------------------------------------------------------------
# lifting


def lift_protograph(proto, lift_size, seed=0, girth_tries=None):
    """Quasi-cyclic lift of a protograph into a ParityCheckMatrix.

    Each base edge gets a circulant shift; shifts are chosen greedily at
    random so that no 4-cycle is created when avoidable.  Deterministic for a
    fixed seed.  Punctured protographs are rejected here (puncturing is only
    supported by the density-evolution analysis).
    """
    if proto.punctured_cols:
        raise LdpcError("lifting of punctured protographs is not supported")
    lift_size = int(lift_size)
    if lift_size < 1:
        raise LdpcError("lift_size must be positive")
    if lift_size * proto.n_vars < 50:
        raise LdpcError("lifted blocklength below sanity floor of 50 bits")
    rng = np.random.default_rng(seed)

    cells = [
        (i, j, int(proto.base[i, j]))
        for i in range(proto.n_checks)
        for j in range(proto.n_vars)
        if proto.base[i, j] > 0
    ]
    order = rng.permutation(len(cells))

    col_edges = {j: [] for j in range(proto.n_vars)}  # col -> [(row, shift)]
    used = {}  # (r1, r2) ordered pair -> set of deltas already consumed
    girth_ok = True

    def conflicts(i, j, s):
        cnt = 0
        for (i2, s2) in col_edges[j]:
            if i2 == i and s2 == s:
                return np.inf  # duplicate edge, never allowed
            key, delta = _pair_key(i, s, i2, s2, lift_size)
            if key[0] == key[1]:
                if (2 * delta) % lift_size == 0:
                    cnt += 1
                    continue
            if delta in used.get(key, ()):
                cnt += 1
        return cnt

    def commit(i, j, s):
        for (i2, s2) in col_edges[j]:
            key, delta = _pair_key(i, s, i2, s2, lift_size)
            used.setdefault(key, set()).add(delta)
        col_edges[j].append((i, s))

    for ci in order:
        i, j, mult = cells[ci]
        for _ in range(mult):
            shifts = rng.permutation(lift_size)
            best, best_c = None, np.inf
            for s in shifts:
                c = conflicts(i, j, int(s))
                if c == 0:
                    best, best_c = int(s), 0
                    break
                if c < best_c:
                    best, best_c = int(s), c
            if best is None:
                raise LdpcError("cell multiplicity exceeds lift size")
            if best_c > 0:
                girth_ok = False
            commit(i, j, best)

    if not girth_ok:
        warnings.warn(
            f"girth 6 unreachable at lift size {lift_size}; 4-cycles remain",
            GirthWarning,
            stacklevel=2,
        )

    rows, cols = [], []
    ell = np.arange(lift_size)
    for j, edges in col_edges.items():
        for (i, s) in edges:
            cols.append(j * lift_size + ell)
            rows.append(i * lift_size + (ell + s) % lift_size)
    return ParityCheckMatrix(
        n=proto.n_vars * lift_size,
        m_rows=proto.n_checks * lift_size,
        rows=np.concatenate(rows),
        cols=np.concatenate(cols),
        lift_size=lift_size,
        girth_ge6=girth_ok,
    )


def _pair_key(i1, s1, i2, s2, lift):
    if i1 < i2 or (i1 == i2 and s1 <= s2):
        a, sa, b, sb = i1, s1, i2, s2
    else:
        a, sa, b, sb = i2, s2, i1, s1
    delta = (sa - sb) % lift
    if a == b:
        delta = min(delta, lift - delta)
    return (a, b), delta


def lift_for_blocklength(proto, n, seed=0):
    """Lift so that the transmitted blocklength equals ``n`` exactly."""
    if n % proto.n_vars != 0:
        raise LdpcError(
            f"blocklength {n} not a multiple of {proto.n_vars} variable types"
        )
    return lift_protograph(proto, n // proto.n_vars, seed=seed)


def has_four_cycle(H):
    """Graph search for 4-cycles: two checks sharing two variables."""
    from scipy import sparse

    sp = sparse.csr_matrix(
        (np.ones(H.rows.size, dtype=np.int32), (H.rows, H.cols)),
        shape=(H.m_rows, H.n),
    )
    gram = (sp @ sp.T).tocoo()
    mask = (gram.row != gram.col) & (gram.data >= 2)
    return bool(mask.any())


# ---------------------------------------------------------------------------
# encoding


class _Encoder:
    """One-time encodable form of H.

    Uses the approximate lower-triangular (greedy peeling) preprocessing; the
    residual gap system is solved densely over GF(2).  Small or rank-deficient
    matrices fall back to a dense generator built by Gaussian elimination.
    """

    _DENSE_LIMIT = 4096

    def __init__(self, H):
        self.H = H
        self.rank_deficiency = 0
        if H.n <= 512:
            self._init_dense()
        else:
            try:
                self._init_alt()
            except LdpcError:
                if H.n <= self._DENSE_LIMIT:
                    self._init_dense()
                else:
                    raise
        self.k_eff = self.info_cols.size
        if self.rank_deficiency:
            warnings.warn(
                f"H rank-deficient by {self.rank_deficiency}; "
                f"effective k = {self.k_eff}",
                RankDeficiencyWarning,
                stacklevel=4,
            )

    # dense generator path -------------------------------------------------
    def _init_dense(self):
        H = self.H
        words = gf2.pack_rows(H.to_dense())
        pivots = gf2.rref(words, H.n)
        rank = len(pivots)
        self.rank_deficiency = H.m_rows - rank
        piv = np.array(pivots, dtype=np.int64)
        free = np.setdiff1d(np.arange(H.n), piv)
        dense = gf2.unpack_rows(words[:rank], H.n)
        self._mode = "dense"
        self._piv = piv
        self._parity_map = dense[:, free]  # parity_i = parity_map @ s
        self.info_cols = free

    # approximate lower-triangular path ------------------------------------
    def _init_alt(self):
        H = self.H
        n, m = H.n, H.m_rows
        row_adj = [[] for _ in range(m)]
        col_adj = [[] for _ in range(n)]
        for r, c in zip(H.rows, H.cols):
            row_adj[r].append(int(c))
            col_adj[c].append(int(r))

        # greedy peeling: rows of residual degree 1 extend the triangular
        # diagonal; when stuck, the highest-residual-degree column is set
        # aside (it becomes a preferred p1 candidate)
        rdeg = np.array([len(a) for a in row_adj])
        cdeg = np.array([len(a) for a in col_adj])
        col_alive = np.ones(n, dtype=bool)
        row_alive = np.ones(m, dtype=bool)
        diag_rows, diag_cols = [], []
        aside_cols = []
        stack = list(np.nonzero(rdeg == 1)[0])

        def remove_col(c):
            col_alive[c] = False
            cdeg[c] = -1
            for r in col_adj[c]:
                if row_alive[r]:
                    rdeg[r] -= 1
                    if rdeg[r] == 1:
                        stack.append(r)

        def remove_row(r):
            row_alive[r] = False
            for c in row_adj[r]:
                if col_alive[c]:
                    cdeg[c] -= 1

        while True:
            while stack:
                r = stack.pop()
                if not row_alive[r] or rdeg[r] != 1:
                    continue
                c = next(cc for cc in row_adj[r] if col_alive[cc])
                diag_rows.append(r)
                diag_cols.append(c)
                remove_row(r)
                remove_col(c)
            if not row_alive.any():
                break
            cmax = int(np.argmax(cdeg))
            if cdeg[cmax] <= 0:
                break  # remaining rows are empty; they go to the bottom block
            aside_cols.append(cmax)
            remove_col(cmax)

        bottom_rows = list(np.nonzero(row_alive)[0])
        g = len(bottom_rows)
        t = m - g
        other_cols = np.setdiff1d(np.arange(n), np.array(diag_cols, dtype=np.int64))
        # local layout over the n - t non-diagonal columns; g of them will be
        # picked as parity (p1) by the gap elimination below
        loc = np.full(n, -1, dtype=np.int64)
        loc[other_cols] = np.arange(other_cols.size)
        w = other_cols.size
        diag_pos = np.full(n, -1, dtype=np.int64)
        diag_pos[np.array(diag_cols, dtype=np.int64)] = np.arange(t)

        words_w = -(-w // 64)
        U = np.zeros((t, words_w), dtype=np.uint64)
        scratch = np.zeros(w, dtype=np.uint8)
        for i, r in enumerate(diag_rows):
            scratch[:] = 0
            prev = []
            for c in row_adj[r]:
                p = loc[c]
                if p >= 0:
                    scratch[p] ^= 1
                else:
                    dp = diag_pos[c]
                    if dp < i:
                        prev.append(dp)
            U[i] = gf2.pack_rows(scratch[None, :])[0]
            for dp in prev:
                U[i] ^= U[dp]

        W = np.zeros((g, words_w), dtype=np.uint64)
        for bi, r in enumerate(bottom_rows):
            scratch[:] = 0
            for c in row_adj[r]:
                p = loc[c]
                if p >= 0:
                    scratch[p] ^= 1
            W[bi] = gf2.pack_rows(scratch[None, :])[0]
            for c in row_adj[r]:
                dp = diag_pos[c]
                if dp >= 0:
                    W[bi] ^= U[dp]

        aside_local = [int(loc[c]) for c in aside_cols]
        rest_local = [j for j in range(w) if j not in set(aside_local)]
        pref = aside_local + rest_local
        pivots = gf2.rref(W, w, col_order=pref)
        if len(pivots) < g:
            raise LdpcError("gap system singular (rank-deficient H)")
        piv_local = np.array(pivots, dtype=np.int64)
        free_local = np.setdiff1d(np.arange(w), piv_local)
        dense_w = gf2.unpack_rows(W, w)
        self._mode = "alt"
        self._w = w
        self._piv_local = piv_local
        self._free_local = free_local
        self._p1_map = dense_w[:, free_local]  # pivot bits = p1_map @ s
        self._U = U
        self._diag_cols = np.array(diag_cols, dtype=np.int64)
        local_to_orig = np.empty(w, dtype=np.int64)
        local_to_orig[loc[loc >= 0]] = np.nonzero(loc >= 0)[0]
        self._local_to_orig = local_to_orig
        self.info_cols = local_to_orig[free_local]

    def encode(self, s):
        s = np.asarray(s, dtype=np.uint8)
        if s.size != self.k_eff:
            raise LdpcError(f"info length {s.size} != k {self.k_eff}")
        H = self.H
        c = np.zeros(H.n, dtype=np.uint8)
        if self._mode == "dense":
            c[self.info_cols] = s
            c[self._piv] = (self._parity_map @ s.astype(np.int64)) & 1
        else:
            x = np.zeros(self._w, dtype=np.uint8)
            x[self._free_local] = s
            x[self._piv_local] = (self._p1_map @ s.astype(np.int64)) & 1
            c[self._local_to_orig] = x
            c[self._diag_cols] = gf2.matvec(self._U, x)
        return c


def encode(H, s):
    """Systematic-style encoding: codeword c with H c^T = 0, c[info_cols] = s."""
    return H.encoder.encode(s)


def extract_info(H, c):
    """Info bits of a codeword (inverse of encode on the info positions)."""
    return np.asarray(c, dtype=np.uint8)[H.info_cols]


def syndrome(H, v):
    """H v^T over GF(2)."""
    v = np.asarray(v, dtype=np.uint8)
    if v.size != H.n:
        raise LdpcError(f"vector length {v.size} != blocklength {H.n}")
    syn = np.bincount(H.rows, weights=v[H.cols].astype(np.float64), minlength=H.m_rows)
    return (syn.astype(np.int64) & 1).astype(np.uint8)


# ---------------------------------------------------------------------------
# belief propagation


def _bp_graph(H):
    if H._bp is None:
        order = np.lexsort((H.cols, H.rows))
        er, ec = H.rows[order], H.cols[order]
        row_counts = np.bincount(er, minlength=H.m_rows)
        if (row_counts == 0).any():
            raise LdpcError("empty check row")
        row_ptr = np.concatenate([[0], np.cumsum(row_counts)[:-1]])
        col_perm = np.argsort(ec, kind="stable")
        col_sorted = ec[col_perm]
        col_counts = np.bincount(col_sorted, minlength=H.n)
        col_ptr = np.concatenate([[0], np.cumsum(col_counts)[:-1]])
        inv_perm = np.empty_like(col_perm)
        inv_perm[col_perm] = np.arange(col_perm.size)
        H._bp = dict(
            er=er,
            ec=ec,
            row_ptr=row_ptr,
            row_counts=row_counts,
            col_perm=col_perm,
            col_ptr=col_ptr,
            col_counts=col_counts,
            inv_perm=inv_perm,
        )
    return H._bp


def decode_bp(H, llr, max_iters, min_sum=False, target_syndrome=None):
    """Flooding-schedule sum-product decoding.

    Parameters
    ----------
    H : ParityCheckMatrix
    llr : ndarray of float
        Channel LLRs, positive meaning bit 0 is more likely.
    max_iters : int
        Iteration budget; early exit on a satisfied syndrome.
    min_sum : bool
        Use the min-sum check rule instead of the exact tanh rule.
    target_syndrome : ndarray of {0,1}, optional
        Decode towards H c^T = target instead of 0 (syndrome decoding).

    Returns
    -------
    (c_hat, converged, iterations_used)
    """
    llr = np.asarray(llr, dtype=np.float64)
    if llr.size != H.n:
        raise LdpcError(f"llr length {llr.size} != blocklength {H.n}")
    if not np.isfinite(llr).all():
        raise LdpcError("non-finite LLR input")
    if max_iters < 1:
        raise LdpcError("max_iters must be >= 1")
    g = _bp_graph(H)
    er, ec = g["er"], g["ec"]
    row_ptr, row_counts = g["row_ptr"], g["row_counts"]
    col_perm, col_ptr, col_counts, inv_perm = (
        g["col_perm"],
        g["col_ptr"],
        g["col_counts"],
        g["inv_perm"],
    )
    if target_syndrome is None:
        tsyn = np.zeros(H.m_rows, dtype=np.uint8)
    else:
        tsyn = np.asarray(target_syndrome, dtype=np.uint8)
    # checks with odd target flip the sign of their outgoing messages
    check_flip = np.where(tsyn[er] == 1, -1.0, 1.0)

    llr = np.clip(llr, -LLR_MAX, LLR_MAX)
    V = llr[ec].copy()
    bits = np.zeros(H.n, dtype=np.uint8)
    posterior = llr.copy()

    for it in range(1, max_iters + 1):
        if min_sum:
            sign = np.where(V < 0, -1.0, 1.0)
            mag = np.abs(V)
            sg_neg = (V < 0).astype(np.int64)
            row_neg = np.add.reduceat(sg_neg, row_ptr)
            tot_sign = np.where(row_neg % 2 == 1, -1.0, 1.0)
            ext_sign = np.repeat(tot_sign, row_counts) * sign
            m1 = np.minimum.reduceat(mag, row_ptr)
            m1r = np.repeat(m1, row_counts)
            is_min = mag == m1r
            cnt = np.repeat(np.add.reduceat(is_min.astype(np.int64), row_ptr), row_counts)
            tmp = np.where(is_min, np.inf, mag)
            m2r = np.repeat(np.minimum.reduceat(tmp, row_ptr), row_counts)
            ext_mag = np.where(is_min & (cnt == 1), m2r, m1r)
            C = ext_sign * np.minimum(ext_mag, LLR_MAX) * check_flip
        else:
            t = np.tanh(V / 2.0)
            sign = np.where(t < 0, -1.0, 1.0)
            zero = t == 0.0
            lm = np.where(zero, 0.0, np.log(np.maximum(np.abs(t), _EPS_MAG)))
            row_lm = np.add.reduceat(lm, row_ptr)
            row_neg = np.add.reduceat((t < 0).astype(np.int64), row_ptr)
            row_nz = np.add.reduceat(zero.astype(np.int64), row_ptr)
            tot_sign = np.where(row_neg % 2 == 1, -1.0, 1.0)
            ext_lm = np.repeat(row_lm, row_counts) - lm
            ext_sign = np.repeat(tot_sign, row_counts) * sign
            # an exact-zero (erasure) input zeroes every other outgoing product
            ext_nz = np.repeat(row_nz, row_counts) - zero.astype(np.int64)
            extt = np.where(
                ext_nz > 0, 0.0, ext_sign * np.exp(np.minimum(ext_lm, 0.0))
            )
            C = 2.0 * np.arctanh(np.clip(extt, -_ATANH_CLIP, _ATANH_CLIP)) * check_flip
            C = np.clip(C, -LLR_MAX, LLR_MAX)

        Cc = C[col_perm]
        col_sum = np.add.reduceat(Cc, col_ptr)
        posterior = llr + col_sum
        V = np.clip(
            (np.repeat(posterior, col_counts) - Cc)[inv_perm], -LLR_MAX, LLR_MAX
        )

        bits = (posterior < 0).astype(np.uint8)
        decided = not np.any(posterior == 0.0)
        syn = np.add.reduceat(bits[ec].astype(np.int64), row_ptr) & 1
        if decided and np.array_equal(syn.astype(np.uint8), tsyn):
            return bits, True, it
    return bits, False, max_iters


# ---------------------------------------------------------------------------
# shipped base matrices


def load_shipped_protograph(name):
    """Load one of the base matrices shipped with the package.

    Available names: ``r1_50`` (the default rate-1/50 inner code),
    ``r3_6`` (a (3,6)-regular sanity protograph).
    """
    ref = resources.files("sbrec").joinpath(f"data/base_{name}.txt")
    if not ref.is_file():
        raise LdpcError(f"no shipped protograph named {name!r}")
    with resources.as_file(ref) as path:
        return Protograph.from_file(path)


def default_inner_protograph():
    """The shipped rate-1/50 base matrix used by the simulation harness."""
    return load_shipped_protograph("r1_50")
