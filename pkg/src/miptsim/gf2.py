"""Bit-packed GF(2) linear algebra.

Matrices are stored as uint64 arrays of shape (rows, words) with bit k of
word w holding column 64*w + k. Rank via XOR elimination is the
performance core of the stabilizer participation-entropy computations.
"""

from __future__ import annotations

import numpy as np

WORD = 64
_ONE = np.uint64(1)


def n_words(n_cols: int) -> int:
    return (n_cols + WORD - 1) // WORD


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a (rows, cols) 0/1 matrix into uint64 words, little-endian bits."""
    bits = np.asarray(bits, dtype=np.uint8)
    rows, cols = bits.shape
    pad = n_words(cols) * WORD - cols
    if pad:
        bits = np.concatenate([bits, np.zeros((rows, pad), dtype=np.uint8)], axis=1)
    packed = np.ascontiguousarray(np.packbits(bits, axis=1, bitorder="little"))
    return packed.view(np.uint64).reshape(rows, -1)


def unpack_bits(packed: np.ndarray, n_cols: int) -> np.ndarray:
    """Inverse of pack_bits, truncated to n_cols columns."""
    as_bytes = np.ascontiguousarray(packed).view(np.uint8)
    bits = np.unpackbits(as_bytes, axis=1, bitorder="little")
    return bits[:, :n_cols]


def select_columns(packed: np.ndarray, cols) -> np.ndarray:
    """Extract the given columns (any order) as a new packed matrix."""
    cols = np.asarray(cols, dtype=np.int64)
    words = cols // WORD
    shifts = (cols % WORD).astype(np.uint64)
    bits = ((packed[:, words] >> shifts) & _ONE).astype(np.uint8)
    return pack_bits(bits)


def rank_packed(m: np.ndarray, n_cols: int) -> int:
    """Rank over GF(2); the input is not mutated."""
    work = m.copy()
    nrows = work.shape[0]
    r = 0
    for col in range(n_cols):
        if r == nrows:
            break
        w, b = divmod(col, WORD)
        colbits = (work[r:, w] >> np.uint64(b)) & _ONE
        hits = np.nonzero(colbits)[0]
        if hits.size == 0:
            continue
        p = r + hits[0]
        if p != r:
            work[[r, p]] = work[[p, r]]
        if hits.size > 1:
            rows = r + hits[1:]
            work[rows] ^= work[r]
        r += 1
    return r


def gf2_rank(m, n_cols: int | None = None) -> int:
    """Rank of a 0/1 matrix (2D array-like of bits)."""
    bits = np.asarray(m, dtype=np.uint8)
    if bits.ndim != 2:
        raise ValueError("expected a 2D bit matrix")
    if n_cols is None:
        n_cols = bits.shape[1]
    if bits.shape[0] == 0 or n_cols == 0:
        return 0
    return rank_packed(pack_bits(bits), n_cols)
