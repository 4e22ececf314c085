"""Sparse linear operators stored in compressed sparse row format."""

import struct
from enum import Enum
from typing import Union

import numpy as np
import scipy.sparse as sp
from numpy.typing import ArrayLike

from svtv.errors import ImageFormatError, ShapeError

CSR_MAGIC = b"SVTV-CSR1"


class ApplyMode(Enum):
    """Direction of a matrix-vector product."""

    FORWARD = "forward"
    ADJOINT = "adjoint"


class SparseOperator:
    """Immutable linear operator backed by a CSR matrix.

    Parameters
    ----------
    matrix : Union[sp.spmatrix, sp.sparray, ArrayLike]
        The matrix entries. Converted to a float64 CSR array.

    Attributes
    ----------
    matrix : sp.csr_array
        The underlying CSR array. Must not be modified in place.
    """

    def __init__(self, matrix: Union[sp.spmatrix, sp.sparray, ArrayLike]):
        csr = sp.csr_array(matrix, dtype=np.float64)
        csr.sum_duplicates()
        csr.sort_indices()
        if not np.all(np.isfinite(csr.data)):
            raise ValueError("Operator values must be finite.")
        self.matrix = csr

    @property
    def shape(self) -> tuple:
        return self.matrix.shape

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_cols(self) -> int:
        return self.matrix.shape[1]

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    @property
    def row_offsets(self) -> np.ndarray:
        return self.matrix.indptr

    @property
    def col_indices(self) -> np.ndarray:
        return self.matrix.indices

    @property
    def values(self) -> np.ndarray:
        return self.matrix.data

    def forward(self, v: ArrayLike) -> np.ndarray:
        """Product with the operator."""
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.n_cols,):
            raise ShapeError(
                f"Forward product expects a vector of length {self.n_cols}, "
                f"got shape {v.shape}."
            )
        return self.matrix @ v

    def adjoint(self, v: ArrayLike) -> np.ndarray:
        """Product with the transposed operator."""
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.n_rows,):
            raise ShapeError(
                f"Adjoint product expects a vector of length {self.n_rows}, "
                f"got shape {v.shape}."
            )
        return self.matrix.T @ v

    def apply(self, v: ArrayLike, mode: Union[ApplyMode, str]) -> np.ndarray:
        if ApplyMode(mode) == ApplyMode.FORWARD:
            return self.forward(v)
        return self.adjoint(v)

    def transpose(self) -> "SparseOperator":
        return SparseOperator(self.matrix.T)

    def vstack(self, other: "SparseOperator") -> "SparseOperator":
        """Operator obtained by stacking `other` below this one row-wise."""
        if other.n_cols != self.n_cols:
            raise ShapeError(
                f"Cannot stack operators with {self.n_cols} and "
                f"{other.n_cols} columns."
            )
        return SparseOperator(sp.vstack([self.matrix, other.matrix]))

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def frobenius_norm(self) -> float:
        return float(np.linalg.norm(self.matrix.data))

    def save(self, path) -> None:
        """Write the operator to a binary CSR file.

        The layout is the magic `SVTV-CSR1`, the row count, column count and
        number of nonzeros as little-endian u64, then the row offsets (u64),
        the column indices (u64) and the values (f64), all little-endian.
        """
        with open(path, "wb") as f:
            f.write(CSR_MAGIC)
            f.write(struct.pack("<QQQ", self.n_rows, self.n_cols, self.nnz))
            f.write(self.row_offsets.astype("<u8").tobytes())
            f.write(self.col_indices.astype("<u8").tobytes())
            f.write(self.values.astype("<f8").tobytes())

    @classmethod
    def load(cls, path) -> "SparseOperator":
        """Read an operator written by `save`."""
        with open(path, "rb") as f:
            raw = f.read()
        header_size = len(CSR_MAGIC) + 24
        if len(raw) < header_size or raw[: len(CSR_MAGIC)] != CSR_MAGIC:
            raise ImageFormatError(f"{path}: not a SVTV-CSR1 file.")
        n_rows, n_cols, nnz = struct.unpack(
            "<QQQ", raw[len(CSR_MAGIC) : header_size]
        )
        expected = header_size + 8 * (n_rows + 1) + 16 * nnz
        if len(raw) != expected:
            raise ImageFormatError(
                f"{path}: expected {expected} bytes, found {len(raw)}."
            )
        offset = header_size
        indptr = np.frombuffer(raw, "<u8", n_rows + 1, offset)
        offset += 8 * (n_rows + 1)
        indices = np.frombuffer(raw, "<u8", nnz, offset)
        offset += 8 * nnz
        data = np.frombuffer(raw, "<f8", nnz, offset)
        if indptr[0] != 0 or indptr[-1] != nnz or np.any(np.diff(indptr) < 0):
            raise ImageFormatError(f"{path}: invalid row offsets.")
        if nnz and indices.max() >= n_cols:
            raise ImageFormatError(f"{path}: column index out of range.")
        matrix = sp.csr_array(
            (
                data.astype(np.float64),
                indices.astype(np.int64),
                indptr.astype(np.int64),
            ),
            shape=(n_rows, n_cols),
        )
        return cls(matrix)

    def __repr__(self):
        return f"SparseOperator(shape={self.shape}, nnz={self.nnz})"


def apply(
    op: SparseOperator, v: ArrayLike, mode: Union[ApplyMode, str]
) -> np.ndarray:
    """Exact CSR product with `op` (forward) or its transpose (adjoint).

    Parameters
    ----------
    op : SparseOperator
        The operator.
    v : ArrayLike
        Input vector, of length `op.n_cols` (forward) or `op.n_rows`
        (adjoint).
    mode : Union[ApplyMode, str]
        Product direction.

    Returns
    -------
    np.ndarray
        The product.
    """
    return op.apply(v, mode)


def identity(n: int) -> SparseOperator:
    return SparseOperator(sp.identity(n, format="csr"))
