"""Minimal sparse/dense numeric kernel.

Coordinate (COO) and compressed-sparse-row (CSR) matrices in 64-bit
floating point, sparse-dense multiplication, and the symmetric degree
normalization used to turn a graph adjacency into a propagation operator.
All matrices are immutable after construction and safe to share across
threads; every kernel here runs with a fixed reduction order, so results
are bitwise reproducible run-to-run.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

# Dense matrices are plain row-major float64 numpy arrays.
DenseMatrix = np.ndarray


@dataclass(frozen=True)
class CooMatrix:
    """Coordinate-form sparse matrix; duplicate coordinates are allowed
    and are summed on conversion to CSR."""

    n_rows: int
    n_cols: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    @classmethod
    def from_triples(cls, n_rows, n_cols, triples) -> "CooMatrix":
        rows = np.fromiter((t[0] for t in triples), dtype=np.int64, count=len(triples))
        cols = np.fromiter((t[1] for t in triples), dtype=np.int64, count=len(triples))
        vals = np.fromiter((t[2] for t in triples), dtype=np.float64, count=len(triples))
        return cls(n_rows, n_cols, rows, cols, vals)

    @property
    def nnz(self) -> int:
        return len(self.values)

    def triples(self):
        return list(zip(self.rows.tolist(), self.cols.tolist(), self.values.tolist()))

    def to_dense(self) -> DenseMatrix:
        out = np.zeros((self.n_rows, self.n_cols))
        np.add.at(out, (self.rows, self.cols), self.values)
        return out


@dataclass(frozen=True)
class CsrMatrix:
    """CSR matrix with sorted, duplicate-free column indices per row."""

    n_rows: int
    n_cols: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray

    @property
    def nnz(self) -> int:
        return len(self.values)

    def to_dense(self) -> DenseMatrix:
        out = np.zeros((self.n_rows, self.n_cols))
        for i in range(self.n_rows):
            lo, hi = self.row_offsets[i], self.row_offsets[i + 1]
            out[i, self.col_indices[lo:hi]] = self.values[lo:hi]
        return out

    def _scipy(self) -> sp.csr_matrix:
        # Zero-copy view; scipy only provides the multiply kernel.
        return sp.csr_matrix(
            (self.values, self.col_indices, self.row_offsets),
            shape=(self.n_rows, self.n_cols),
        )

    def scale_columns(self, factors: np.ndarray) -> "CsrMatrix":
        """New CSR with column j multiplied by factors[j] (structure kept)."""
        if len(factors) != self.n_cols:
            raise ValueError("factor length must equal n_cols")
        return CsrMatrix(
            self.n_rows,
            self.n_cols,
            self.row_offsets,
            self.col_indices,
            self.values * factors[self.col_indices],
        )


def coo_to_csr(m: CooMatrix) -> CsrMatrix:
    """Finalize a COO matrix into CSR form, summing duplicate coordinates.

    Raises ValueError on out-of-range coordinates.
    """
    if m.nnz == 0:
        return CsrMatrix(
            m.n_rows,
            m.n_cols,
            np.zeros(m.n_rows + 1, dtype=np.int64),
            np.zeros(0, dtype=np.int64),
            np.zeros(0),
        )
    if m.rows.min() < 0 or m.rows.max() >= m.n_rows:
        raise ValueError("row index out of range")
    if m.cols.min() < 0 or m.cols.max() >= m.n_cols:
        raise ValueError("column index out of range")

    keys = m.rows * np.int64(m.n_cols) + m.cols
    order = np.argsort(keys, kind="stable")
    keys = keys[order]
    vals = m.values[order]
    # Group boundaries of equal (row, col) runs; duplicates summed in order.
    starts = np.flatnonzero(np.concatenate(([True], keys[1:] != keys[:-1])))
    summed = np.add.reduceat(vals, starts)
    ukeys = keys[starts]
    urows = ukeys // m.n_cols
    ucols = ukeys % m.n_cols
    offsets = np.zeros(m.n_rows + 1, dtype=np.int64)
    np.add.at(offsets, urows + 1, 1)
    offsets = np.cumsum(offsets)
    return CsrMatrix(m.n_rows, m.n_cols, offsets, ucols, summed)


def spmm(a: CsrMatrix, b: DenseMatrix) -> DenseMatrix:
    """Sparse-dense product a @ b in float64."""
    b = np.asarray(b, dtype=np.float64)
    if b.ndim != 2 or a.n_cols != b.shape[0]:
        raise ValueError(
            f"dimension mismatch: {a.n_rows}x{a.n_cols} @ {b.shape}"
        )
    if a.nnz == 0:
        return np.zeros((a.n_rows, b.shape[1]))
    return np.asarray(a._scipy() @ b)


def sym_normalize(a: CooMatrix) -> CsrMatrix:
    """Symmetric degree normalization of a non-negative adjacency.

    Self-loops are added here (not by the caller): with the self-looped
    adjacency and its diagonal degree matrix, each entry (i, j) becomes
    value / sqrt(degree_i * degree_j).  Every row has at least its
    self-loop, so degrees are >= 1 and no division by zero can occur.
    """
    if a.n_rows != a.n_cols:
        raise ValueError("adjacency must be square")
    csr = coo_to_csr(a)
    if csr.nnz and csr.values.min() < 0:
        raise ValueError("adjacency weights must be non-negative")
    n = a.n_rows
    diag_mask = csr.col_indices == _row_of(csr)
    if np.any(csr.values[diag_mask] != 0.0):
        raise ValueError("adjacency must have a zero diagonal; self-loops are added here")

    # Degrees of A + I: row sums plus the unit self-loop.
    deg = np.ones(n)
    np.add.at(deg, _row_of(csr), csr.values)
    inv_sqrt = 1.0 / np.sqrt(deg)

    rows = np.concatenate([_row_of(csr), np.arange(n, dtype=np.int64)])
    cols = np.concatenate([csr.col_indices, np.arange(n, dtype=np.int64)])
    vals = np.concatenate([csr.values, np.ones(n)])
    # grouping the scale product keeps exact (i,j)/(j,i) value equality
    vals = vals * (inv_sqrt[rows] * inv_sqrt[cols])
    keep = vals != 0.0
    return coo_to_csr(CooMatrix(n, n, rows[keep], cols[keep], vals[keep]))


def _row_of(csr: CsrMatrix) -> np.ndarray:
    """Expanded row index per stored entry."""
    return np.repeat(
        np.arange(csr.n_rows, dtype=np.int64), np.diff(csr.row_offsets)
    )


def write_coo(m: CooMatrix, path, header_comments=()) -> None:
    """Write the COO text format: optional '#' comment lines, then
    ``COO n_rows n_cols nnz`` and one ``row col value`` line per entry
    at 17 significant digits."""
    with open(path, "w", encoding="utf-8") as fh:
        for line in header_comments:
            fh.write(f"# {line}\n")
        fh.write(f"COO {m.n_rows} {m.n_cols} {m.nnz}\n")
        for r, c, v in zip(m.rows, m.cols, m.values):
            fh.write(f"{r} {c} {v:.17g}\n")


def read_coo(path) -> CooMatrix:
    """Read the COO text format written by :func:`write_coo`; '#' comment
    lines before the header are skipped."""
    with open(path, encoding="utf-8") as fh:
        line = fh.readline()
        while line.startswith("#"):
            line = fh.readline()
        parts = line.split()
        if len(parts) != 4 or parts[0] != "COO":
            raise ValueError(f"malformed COO header: {line!r}")
        n_rows, n_cols, nnz = int(parts[1]), int(parts[2]), int(parts[3])
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz)
        for k in range(nnz):
            fields = fh.readline().split()
            if len(fields) != 3:
                raise ValueError(f"malformed COO entry at line {k}")
            rows[k], cols[k], vals[k] = int(fields[0]), int(fields[1]), float(fields[2])
    return CooMatrix(n_rows, n_cols, rows, cols, vals)
