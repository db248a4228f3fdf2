"""Tensor-product polynomial chaos bases over total-degree multi-index sets.

Multi-indices are ordered graded-lexicographically (by total degree, then by
lexicographic comparison of the index tuple), so the zero index always comes
first and the ordering is reproducible across runs and platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .polynomials import Measure, PolynomialFamily

# Refuse to materialize index sets larger than this without an explicit cap.
DEFAULT_INDEX_CAP = 5_000_000


def _all_indices(dim: int, degree: int) -> np.ndarray:
    """All multi-indices with total degree <= degree, in some fixed order.

    Grows the array one dimension at a time: every partial index with budget
    left gets one block of rows per admissible value of the next coordinate.
    """
    idx = np.arange(degree + 1, dtype=np.int32)[:, None]
    sums = np.arange(degree + 1, dtype=np.int64)
    for _ in range(dim - 1):
        counts = degree - sums + 1
        total = int(counts.sum())
        idx = np.repeat(idx, counts, axis=0)
        offsets = np.repeat(np.cumsum(counts) - counts, counts)
        new_col = (np.arange(total, dtype=np.int64) - offsets).astype(np.int32)
        idx = np.hstack((idx, new_col[:, None]))
        sums = np.repeat(sums, counts) + new_col
    return idx


@dataclass(frozen=True)
class MultiIndexSet:
    """Immutable ordered collection of d-dimensional multi-indices."""

    dim: int
    degree: int
    indices: np.ndarray = field(repr=False)  # (size, dim) int32, graded-lex

    def __len__(self) -> int:
        return self.indices.shape[0]

    def __iter__(self):
        return (tuple(int(v) for v in row) for row in self.indices)

    @cached_property
    def _positions(self) -> dict[tuple[int, ...], int]:
        return {k: i for i, k in enumerate(self)}

    def position(self, index) -> int:
        key = tuple(int(v) for v in index)
        try:
            return self._positions[key]
        except KeyError:
            raise KeyError(f"multi-index {key} not in the set") from None

    def __contains__(self, index) -> bool:
        return tuple(int(v) for v in index) in self._positions

    def to_text(self, path) -> None:
        """Write one space-separated index per line."""
        lines = (" ".join(str(int(v)) for v in row) for row in self.indices)
        Path(path).write_text("\n".join(lines) + "\n")

    @staticmethod
    def from_text(path, dim: int | None = None) -> "MultiIndexSet":
        rows = [
            [int(tok) for tok in line.split()]
            for line in Path(path).read_text().splitlines()
            if line.strip()
        ]
        arr = np.asarray(rows, dtype=np.int32)
        if dim is not None and arr.shape[1] != dim:
            raise ValueError(f"expected dimension {dim}, file has {arr.shape[1]}")
        return MultiIndexSet(int(arr.shape[1]), int(arr.sum(axis=1).max()), arr)


def total_degree_set(dim: int, degree: int, cap: int = DEFAULT_INDEX_CAP) -> MultiIndexSet:
    """Multi-index set {k : |k| <= degree} in graded-lexicographic order."""
    if dim < 1:
        raise ValueError("dimension must be at least 1")
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    size = math.comb(dim + degree, degree)
    if size > cap:
        raise ValueError(
            f"index set of size {size} exceeds the cap {cap}; raise cap explicitly"
        )
    idx = _all_indices(dim, degree)
    totals = idx.sum(axis=1)
    order = np.lexsort(tuple(idx[:, j] for j in range(dim - 1, -1, -1)) + (totals,))
    return MultiIndexSet(dim, degree, np.ascontiguousarray(idx[order]))


@dataclass(frozen=True)
class PceBasis:
    """Tensor-product orthonormal basis over a total-degree index set."""

    index_set: MultiIndexSet
    families: tuple[PolynomialFamily, ...]

    def __post_init__(self):
        if len(self.families) != self.index_set.dim:
            raise ValueError("need one polynomial family per dimension")
        kinds = {fam.kind for fam in self.families}
        if len(kinds) != 1:
            raise ValueError("mixed support kinds in one basis are not supported")
        for fam in self.families:
            if fam.max_degree < self.index_set.degree:
                raise ValueError("family table shorter than the basis degree")

    # -- constructors ------------------------------------------------------

    @staticmethod
    def from_measure(measure: Measure, dim: int, degree: int, cap: int = DEFAULT_INDEX_CAP) -> "PceBasis":
        fam = PolynomialFamily.from_measure(measure, max(degree, 1))
        return PceBasis(total_degree_set(dim, degree, cap), (fam,) * dim)

    @staticmethod
    def legendre(dim: int, degree: int, **kw) -> "PceBasis":
        return PceBasis.from_measure(Measure.uniform(), dim, degree, **kw)

    @staticmethod
    def chebyshev(dim: int, degree: int, **kw) -> "PceBasis":
        return PceBasis.from_measure(Measure.chebyshev(), dim, degree, **kw)

    @staticmethod
    def jacobi(alpha: float, beta: float, dim: int, degree: int, **kw) -> "PceBasis":
        return PceBasis.from_measure(Measure.jacobi(alpha, beta), dim, degree, **kw)

    @staticmethod
    def hermite(dim: int, degree: int, **kw) -> "PceBasis":
        return PceBasis.from_measure(Measure.gaussian(), dim, degree, **kw)

    # -- properties --------------------------------------------------------

    @property
    def dim(self) -> int:
        return self.index_set.dim

    @property
    def degree(self) -> int:
        return self.index_set.degree

    @property
    def size(self) -> int:
        return len(self.index_set)

    @property
    def kind(self) -> str:
        return self.families[0].kind

    # -- evaluation --------------------------------------------------------

    def _point_array(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :]
        if pts.ndim != 2 or pts.shape[1] != self.dim:
            raise ValueError(f"points must have shape (N, {self.dim})")
        return pts

    def _tables(self, points: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
        values, derivs = [], []
        for j, fam in enumerate(self.families):
            v, d = fam.eval_table(points[:, j], self.degree)
            values.append(v)
            derivs.append(d)
        return values, derivs

    def matrix(self, points) -> np.ndarray:
        """Basis matrix with entry (n, k) = psi_k(points[n])."""
        pts = self._point_array(points)
        values, _ = self._tables(pts)
        idx = self.index_set.indices
        out = np.ones((pts.shape[0], self.size))
        for j in range(self.dim):
            out *= values[j][:, idx[:, j]]
        return out

    def gradient_matrix(self, points, axis: int) -> np.ndarray:
        """Matrix of partial derivatives of the basis along one coordinate."""
        if not 0 <= axis < self.dim:
            raise ValueError(f"axis {axis} out of range for dimension {self.dim}")
        pts = self._point_array(points)
        values, derivs = self._tables(pts)
        idx = self.index_set.indices
        out = np.ones((pts.shape[0], self.size))
        for j in range(self.dim):
            table = derivs[j] if j == axis else values[j]
            out *= table[:, idx[:, j]]
        return out

    def evaluate(self, index, points) -> np.ndarray:
        """Value of the basis function for one multi-index in the set."""
        pos = self.index_set.position(index)
        return self.matrix(points)[:, pos]

    def evaluate_gradient(self, index, points, axis: int) -> np.ndarray:
        pos = self.index_set.position(index)
        return self.gradient_matrix(points, axis)[:, pos]
