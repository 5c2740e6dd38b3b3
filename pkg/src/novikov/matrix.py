"""Small helpers for object-dtype matrices over Z or a Novikov ring.

Entries are Python ints or :class:`~novikov.rings.NovikovElement`; an int
zero is the exact zero of every coefficient ring.  Products are ordinary
row-by-column products, which keeps the entry order needed by the
noncommutative twisted rings.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .rings import NovikovElement, RingContext


def zeros(rows: int, cols: int) -> np.ndarray:
    out = np.empty((rows, cols), dtype=object)
    out.fill(0)
    return out


def identity(n: int, one=1) -> np.ndarray:
    out = zeros(n, n)
    for i in range(n):
        out[i, i] = one
    return out


def asmatrix(data, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    if isinstance(data, np.ndarray) and data.dtype == object and data.ndim == 2:
        out = data
    else:
        rows_data = [list(r) for r in data]
        if rows is None:
            rows = len(rows_data)
        if cols is None:
            cols = len(rows_data[0]) if rows_data else 0
        out = zeros(rows, cols)
        for i, r in enumerate(rows_data):
            for j, v in enumerate(r):
                out[i, j] = int(v) if isinstance(v, (bool, np.integer)) else v
    if rows is not None and out.shape[0] != rows or cols is not None and out.shape[1] != cols:
        raise ValueError(f"matrix has shape {out.shape}, expected ({rows}, {cols})")
    return out


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"cannot multiply {a.shape} by {b.shape}")
    if a.shape[1] == 0 or a.shape[0] == 0 or b.shape[1] == 0:
        return zeros(a.shape[0], b.shape[1])
    return a @ b


def scale(c, a: np.ndarray) -> np.ndarray:
    """Left multiplication of every entry by c."""
    out = zeros(*a.shape)
    for idx, v in np.ndenumerate(a):
        out[idx] = c * v
    return out


def block(grid: Sequence[Sequence], row_sizes: Sequence[int], col_sizes: Sequence[int]) -> np.ndarray:
    """Assemble a block matrix; ``None`` or ``0`` stands for a zero block."""
    out = zeros(sum(row_sizes), sum(col_sizes))
    r0 = 0
    for bi, rs in enumerate(row_sizes):
        c0 = 0
        for bj, cs in enumerate(col_sizes):
            blk = grid[bi][bj]
            if blk is not None and not (isinstance(blk, int) and blk == 0):
                blk = asmatrix(blk)
                if blk.shape != (rs, cs):
                    raise ValueError(f"block ({bi},{bj}) has shape {blk.shape}, expected {(rs, cs)}")
                out[r0:r0 + rs, c0:c0 + cs] = blk
            c0 += cs
        r0 += rs
    return out


def entry_is_zero(e, n: int | None = None) -> bool:
    """Exact zero test, or congruence to zero mod z^n for series entries."""
    if isinstance(e, NovikovElement):
        if n is None:
            return e.is_zero()
        return e.zero_mod(n)
    return e == 0


def nonzero_entries(a: np.ndarray, n: int | None = None) -> list[tuple[int, int]]:
    return [idx for idx, v in np.ndenumerate(a) if not entry_is_zero(v, n)]


def equal(a: np.ndarray, b: np.ndarray, n: int | None = None) -> bool:
    if a.shape != b.shape:
        return False
    return not nonzero_entries(a - b, n)


def truncate(a: np.ndarray, n: int | None) -> np.ndarray:
    if n is None:
        return a
    out = zeros(*a.shape)
    for idx, v in np.ndenumerate(a):
        out[idx] = v.truncate(n) if isinstance(v, NovikovElement) else v
    return out


def to_series(a: np.ndarray, context: RingContext, precision: int | None) -> np.ndarray:
    """Coerce int entries to series at the given precision."""
    out = zeros(*a.shape)
    for idx, v in np.ndenumerate(a):
        if isinstance(v, NovikovElement):
            out[idx] = v.truncate(precision)
        else:
            out[idx] = context.constant(int(v), precision)
    return out


def is_integer_matrix(a: np.ndarray) -> bool:
    return all(isinstance(v, (int, np.integer)) for v in a.flat)


def to_lists(a: np.ndarray) -> list[list]:
    return [list(r) for r in a]


def permutation(n: int, order: Sequence[int]) -> np.ndarray:
    """Matrix P with P e_j = e_{order[j]}."""
    out = zeros(n, n)
    for j, i in enumerate(order):
        out[i, j] = 1
    return out
