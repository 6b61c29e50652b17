"""Bit-packed GF(2) linear algebra helpers.

Rows of binary matrices are packed into ``uint64`` words (little-endian bit
order within each word) so that row XOR, reduction and rank computations stay
cheap even for blocklengths of 10^5 and more.
"""

import numpy as np


def pack_rows(m):
    """Pack a (r, n) {0,1} uint8 matrix into (r, ceil(n/64)) uint64 words."""
    m = np.ascontiguousarray(m, dtype=np.uint8)
    r, n = m.shape
    nbytes = -(-n // 8)
    pad = nbytes * 8 - n
    if pad:
        m = np.concatenate([m, np.zeros((r, pad), dtype=np.uint8)], axis=1)
    packed = np.packbits(m, axis=1, bitorder="little")
    wbytes = -(-nbytes // 8) * 8
    if wbytes != nbytes:
        packed = np.concatenate(
            [packed, np.zeros((r, wbytes - nbytes), dtype=np.uint8)], axis=1
        )
    return packed.view(np.uint64)


def unpack_rows(words, n):
    """Inverse of :func:`pack_rows` for ``n`` columns."""
    r = words.shape[0]
    bits = np.unpackbits(words.view(np.uint8), axis=1, bitorder="little")
    return np.ascontiguousarray(bits[:, :n])


def get_col(words, j):
    """Column ``j`` of a packed matrix as a {0,1} uint8 vector."""
    return ((words[:, j >> 6] >> np.uint64(j & 63)) & np.uint64(1)).astype(np.uint8)


def rref(words, ncols, col_order=None):
    """In-place reduced row echelon form of a packed matrix.

    Parameters
    ----------
    words : ndarray
        Packed matrix, modified in place.
    ncols : int
        Number of meaningful columns.
    col_order : sequence of int, optional
        Preference order in which columns are tried as pivots.  Defaults to
        natural order.

    Returns
    -------
    pivots : list of int
        Pivot column indices, one per independent row, in elimination order.
    """
    nrows = words.shape[0]
    if col_order is None:
        col_order = range(ncols)
    pivots = []
    rank = 0
    for j in col_order:
        if rank == nrows:
            break
        col = get_col(words, j)
        cand = np.nonzero(col[rank:])[0]
        if cand.size == 0:
            continue
        i = rank + cand[0]
        if i != rank:
            words[[rank, i]] = words[[i, rank]]
        col = get_col(words, j)
        col[rank] = 0
        hit = np.nonzero(col)[0]
        if hit.size:
            words[hit] ^= words[rank]
        pivots.append(j)
        rank += 1
    return pivots


def matvec(words, v):
    """GF(2) product of a packed matrix with a {0,1} vector of length n."""
    vp = pack_rows(v[None, :])[0]
    acc = words & vp[None, :]
    # popcount parity per row
    x = acc
    for shift in (1, 2, 4, 8, 16, 32):
        x = x ^ (x >> np.uint64(shift))
    return (np.bitwise_xor.reduce(x & np.uint64(1), axis=1)).astype(np.uint8)
