"""CSR lower-triangular symmetric matrices with static-allocation semantics.

Storage is the classic three-array compressed sparse row layout restricted
to the lower triangle of a symmetric matrix.  Elements are only ever
appended row-wise in ascending column order, never shifted, which mirrors
a static-allocation implementation.  On top of that sit the reverse
Cuthill-McKee ordering, a symbolic fill analysis, the column-by-column
Cholesky factorization, and the two triangular solves.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class NotPositiveDefiniteError(ValueError):
    pass


class CsrLower:
    """Lower triangle (diagonal included) of a symmetric matrix in CSR form.

    Structural zeros are first-class: a slot inserted with value 0 counts
    toward nnz, matching a preallocated-pattern implementation.
    """

    __slots__ = ("dim", "values", "col_index", "row_pointer", "_row", "_last_col")

    def __init__(self, dim: int):
        if dim <= 0:
            raise ValueError("dimension must be positive")
        self.dim = dim
        self.values: list[float] = []
        self.col_index: list[int] = []
        self.row_pointer = [0] * (dim + 1)
        self._row = 0
        self._last_col = -1

    @property
    def nnz(self) -> int:
        return len(self.values)

    def insert_ordered(self, i: int, j: int, v: float = 0.0) -> None:
        """Append a slot; insertion must be row-major with ascending columns."""
        if not (0 <= j <= i < self.dim):
            raise ValueError(f"({i}, {j}) is not a lower-triangle index of dim {self.dim}")
        if i < self._row or (i == self._row and j <= self._last_col):
            raise ValueError(f"out-of-order insertion at ({i}, {j})")
        while self._row < i:
            self._row += 1
            self.row_pointer[self._row] = len(self.values)
        self.values.append(float(v))
        self.col_index.append(j)
        self.row_pointer[i + 1] = len(self.values)
        self._last_col = j

    def finalize(self) -> "CsrLower":
        """Close trailing empty rows and freeze the arrays as numpy vectors."""
        for r in range(self._row + 1, self.dim + 1):
            self.row_pointer[r] = len(self.values)
        self.values = np.asarray(self.values, dtype=float)
        self.col_index = np.asarray(self.col_index, dtype=np.int64)
        self.row_pointer = np.asarray(self.row_pointer, dtype=np.int64)
        return self

    def slot(self, i: int, j: int) -> int:
        """Position of slot (i, j) in the values array, or -1 if absent."""
        lo, hi = self.row_pointer[i], self.row_pointer[i + 1]
        cols = self.col_index
        while lo < hi:
            mid = (lo + hi) // 2
            if cols[mid] < j:
                lo = mid + 1
            else:
                hi = mid
        if lo < self.row_pointer[i + 1] and cols[lo] == j:
            return int(lo)
        return -1

    def add_to(self, i: int, j: int, v: float) -> None:
        """Accumulate into an existing slot."""
        k = self.slot(i, j)
        if k < 0:
            raise KeyError(f"no slot at ({i}, {j})")
        self.values[k] += v

    def get(self, i: int, j: int) -> float:
        k = self.slot(i, j)
        return float(self.values[k]) if k >= 0 else 0.0

    def row_slice(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.row_pointer[i], self.row_pointer[i + 1]
        return (np.asarray(self.col_index[lo:hi]), np.asarray(self.values[lo:hi]))

    def pattern(self) -> list[tuple[int, int]]:
        out = []
        for i in range(self.dim):
            lo, hi = self.row_pointer[i], self.row_pointer[i + 1]
            out.extend((i, int(c)) for c in self.col_index[lo:hi])
        return out

    def to_dense_symmetric(self) -> np.ndarray:
        m = np.zeros((self.dim, self.dim))
        for i in range(self.dim):
            lo, hi = self.row_pointer[i], self.row_pointer[i + 1]
            for k in range(lo, hi):
                j = int(self.col_index[k])
                m[i, j] = self.values[k]
                m[j, i] = self.values[k]
        return m

    def to_dense_lower(self) -> np.ndarray:
        m = np.zeros((self.dim, self.dim))
        for i in range(self.dim):
            lo, hi = self.row_pointer[i], self.row_pointer[i + 1]
            for k in range(lo, hi):
                m[i, int(self.col_index[k])] = self.values[k]
        return m

    def dump(self) -> str:
        """Debug text dump: one `row col value` triplet per line."""
        lines = []
        for i in range(self.dim):
            lo, hi = self.row_pointer[i], self.row_pointer[i + 1]
            for k in range(lo, hi):
                lines.append(f"{i} {int(self.col_index[k])} {self.values[k]!r}")
        return "\n".join(lines)

    @staticmethod
    def from_pattern(dim: int, slots) -> "CsrLower":
        """Build a zero-valued matrix from sorted (row, col) slots."""
        m = CsrLower(dim)
        for i, j in slots:
            m.insert_ordered(i, j, 0.0)
        return m.finalize()


@dataclass(frozen=True)
class Permutation:
    """Bijection on indices; pi maps new index -> old index."""

    pi: np.ndarray

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=np.int64)
        object.__setattr__(self, "pi", pi)
        if sorted(pi.tolist()) != list(range(len(pi))):
            raise ValueError("permutation must be a bijection on 0..dim-1")

    def __len__(self) -> int:
        return len(self.pi)

    @property
    def inverse(self) -> np.ndarray:
        inv = np.empty_like(self.pi)
        inv[self.pi] = np.arange(len(self.pi))
        return inv

    @staticmethod
    def identity(dim: int) -> "Permutation":
        return Permutation(np.arange(dim))

    def apply_vector(self, b: np.ndarray) -> np.ndarray:
        """b_P with b_P[i] = b[pi[i]]."""
        return np.asarray(b)[self.pi]

    def unapply_vector(self, x_p: np.ndarray) -> np.ndarray:
        out = np.empty_like(np.asarray(x_p))
        out[self.pi] = np.asarray(x_p)
        return out


def adjacency_from_lower(m: CsrLower) -> list[list[int]]:
    """Neighbor lists (self excluded) of the symmetric pattern of m."""
    adj: list[set[int]] = [set() for _ in range(m.dim)]
    for i in range(m.dim):
        lo, hi = m.row_pointer[i], m.row_pointer[i + 1]
        for k in range(lo, hi):
            j = int(m.col_index[k])
            if i != j:
                adj[i].add(j)
                adj[j].add(i)
    return [sorted(s) for s in adj]


def rcm(pattern) -> Permutation:
    """Reverse Cuthill-McKee ordering of a symmetric sparsity pattern.

    Accepts a CsrLower or precomputed neighbor lists.  Each BFS starts at
    the unvisited minimum-degree node with the lowest index; neighbors are
    visited in ascending degree with ties broken by index; the complete
    Cuthill-McKee order is reversed at the end.
    """
    adj = adjacency_from_lower(pattern) if isinstance(pattern, CsrLower) else [sorted(a) for a in pattern]
    n = len(adj)
    degree = [len(a) for a in adj]
    visited = [False] * n
    order: list[int] = []
    by_degree = sorted(range(n), key=lambda v: (degree[v], v))
    for seed in by_degree:
        if visited[seed]:
            continue
        visited[seed] = True
        queue = [seed]
        head = 0
        while head < len(queue):
            u = queue[head]
            head += 1
            order.append(u)
            nbrs = sorted((v for v in adj[u] if not visited[v]), key=lambda v: (degree[v], v))
            for v in nbrs:
                visited[v] = True
                queue.append(v)
    return Permutation(np.asarray(order[::-1], dtype=np.int64))


def permute_lower(h: CsrLower, perm: Permutation) -> CsrLower:
    """H_P = P H P^T as a lower CSR, with H_P(i, j) = H(pi[i], pi[j])."""
    inv = perm.inverse
    slots = []
    for i in range(h.dim):
        lo, hi = h.row_pointer[i], h.row_pointer[i + 1]
        a = inv[i]
        for k in range(lo, hi):
            b = inv[int(h.col_index[k])]
            r, c = (a, b) if a >= b else (b, a)
            slots.append((int(r), int(c), float(h.values[k])))
    slots.sort(key=lambda t: (t[0], t[1]))
    out = CsrLower(h.dim)
    for r, c, v in slots:
        out.insert_ordered(r, c, v)
    return out.finalize()


def bandwidth(m: CsrLower) -> int:
    w = 0
    for i in range(m.dim):
        lo, hi = m.row_pointer[i], m.row_pointer[i + 1]
        if hi > lo:
            w = max(w, i - int(min(m.col_index[lo:hi])))
    return w


def symbolic_cholesky(h: CsrLower) -> CsrLower:
    """Zero-valued factor holding the allocation pattern of L for H = L L^T.

    A nonzero H(i, j) yields a nonzero L(i, j), which in turn can make
    every later element of the same row nonzero, so each row of L is
    allocated contiguously from its leftmost H entry to the diagonal (the
    row profile).  Fill never extends left of a row's first entry.
    """
    n = h.dim
    out = CsrLower(n)
    for i in range(n):
        lo, hi = h.row_pointer[i], h.row_pointer[i + 1]
        leftmost = int(h.col_index[lo]) if hi > lo else i
        for j in range(leftmost, i + 1):
            out.insert_ordered(i, j, 0.0)
    return out.finalize()


def cholesky_crout(h: CsrLower, out: CsrLower | None = None, n_workers: int = 1) -> CsrLower:
    """Sparse Cholesky factor of a symmetric positive definite matrix.

    Proceeds column by column: the diagonal entry first, then every
    below-diagonal entry of the column, each a sparse dot product of two
    already-computed rows.  The pattern is allocated up front by the
    symbolic analysis (pass `out` to reuse it).  Worker partitioning of a
    column's entries cannot change any sum, so n_workers is accepted for
    interface parity and ignored.
    """
    L = out if out is not None else symbolic_cholesky(h)
    vals = L.values
    cols = L.col_index
    rp = L.row_pointer
    vals[:] = 0.0

    # Column-wise view of the pattern: rows below the diagonal per column.
    col_rows: list[list[tuple[int, int]]] = [[] for _ in range(h.dim)]
    diag_pos = np.full(h.dim, -1, dtype=np.int64)
    for i in range(h.dim):
        for k in range(int(rp[i]), int(rp[i + 1])):
            j = int(cols[k])
            if j == i:
                diag_pos[i] = k
            else:
                col_rows[j].append((i, k))

    for j in range(h.dim):
        lo_j, hi_j = int(rp[j]), int(rp[j + 1])
        sum0 = 0.0
        for k in range(lo_j, hi_j):
            if int(cols[k]) < j:
                sum0 += vals[k] * vals[k]
        pivot = h.get(j, j) - sum0
        if pivot <= 0.0 or not math.isfinite(pivot):
            raise NotPositiveDefiniteError(f"matrix not positive definite at pivot {j}")
        dj = math.sqrt(pivot)
        vals[diag_pos[j]] = dj
        for i, pos in col_rows[j]:
            # sum1: dot product of rows i and j over columns left of j.
            lo_i, hi_i = int(rp[i]), int(rp[i + 1])
            a, b = lo_i, lo_j
            sum1 = 0.0
            while a < hi_i and b < hi_j:
                ca, cb = int(cols[a]), int(cols[b])
                if ca >= j or cb >= j:
                    break
                if ca == cb:
                    sum1 += vals[a] * vals[b]
                    a += 1
                    b += 1
                elif ca < cb:
                    a += 1
                else:
                    b += 1
            vals[pos] = (h.get(i, j) - sum1) / dj
    return L


def solve_lower(L: CsrLower, b: np.ndarray) -> np.ndarray:
    """Forward substitution for L y = b."""
    y = np.asarray(b, dtype=float).copy()
    vals, cols, rp = L.values, L.col_index, L.row_pointer
    for i in range(L.dim):
        lo, hi = int(rp[i]), int(rp[i + 1])
        if hi == lo or int(cols[hi - 1]) != i:
            raise ZeroDivisionError(f"missing diagonal at row {i}")
        s = y[i]
        for k in range(lo, hi - 1):
            s -= vals[k] * y[int(cols[k])]
        d = vals[hi - 1]
        if d == 0.0:
            raise ZeroDivisionError(f"zero diagonal at row {i}")
        y[i] = s / d
    return y


def solve_upper_transposed(L: CsrLower, y: np.ndarray) -> np.ndarray:
    """Backward substitution for L^T x = y, sweeping rows of L bottom-up."""
    x = np.asarray(y, dtype=float).copy()
    vals, cols, rp = L.values, L.col_index, L.row_pointer
    for i in range(L.dim - 1, -1, -1):
        lo, hi = int(rp[i]), int(rp[i + 1])
        d = vals[hi - 1]
        if d == 0.0:
            raise ZeroDivisionError(f"zero diagonal at row {i}")
        x[i] /= d
        xi = x[i]
        for k in range(lo, hi - 1):
            x[int(cols[k])] -= vals[k] * xi
    return x


def solve_spd(h: CsrLower, b: np.ndarray, perm: Permutation | None = None) -> np.ndarray:
    """Solve H x = b via permuted Cholesky; perm defaults to RCM of H."""
    if perm is None:
        perm = rcm(h)
    hp = permute_lower(h, perm)
    L = cholesky_crout(hp)
    y = solve_lower(L, perm.apply_vector(b))
    xp = solve_upper_transposed(L, y)
    return perm.unapply_vector(xp)
