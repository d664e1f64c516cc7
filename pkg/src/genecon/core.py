"""Foundational numeric types: trait grids, symmetric matrices, and a
deterministic symmetric eigensolver with negative-eigenvalue clipping.

The eigensolver is a cyclic Jacobi sweep. Trait covariance matrices in this
domain are small (K of order 10), so a fixed rotation order plus a fixed sign
convention buys exact run-to-run determinism at negligible cost.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, InvalidGrid, InvalidMatrix

SYMMETRY_RTOL = 1e-10          # allowed asymmetry relative to max |entry|
DEGENERACY_RTOL = 1e-9         # eigenvalue gap below this fraction of the largest flags degeneracy
_OFFDIAG_TARGET = 1e-12        # Jacobi stopping threshold relative to max(1, ||A||_F)
_MAX_SWEEPS = 64


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class TraitGrid:
    """Ordered measurement coordinates (ages, days, temperatures) for the K traits."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1)
        if pts.size < 2:
            raise InvalidGrid(f"need at least 2 measurement points, got {pts.size}")
        if not np.all(np.isfinite(pts)):
            raise InvalidGrid("measurement points must be finite")
        if not np.all(np.diff(pts) > 0):
            raise InvalidGrid("measurement points must be strictly increasing")
        object.__setattr__(self, "points", _readonly(pts))

    @property
    def size(self) -> int:
        return int(self.points.size)

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(self.points)

    @property
    def min_gap(self) -> float:
        return float(self.gaps.min())

    def to_payload(self) -> dict:
        return {"points": [float(t) for t in self.points]}

    @classmethod
    def from_payload(cls, payload: dict) -> "TraitGrid":
        if "points" not in payload:
            raise InvalidGrid("grid payload missing 'points'")
        return cls(np.asarray(payload["points"], dtype=float))

    def __eq__(self, other):
        return isinstance(other, TraitGrid) and np.array_equal(self.points, other.points)


@dataclass(frozen=True)
class SymMatrix:
    """Exactly symmetric K x K matrix.

    Input may be asymmetric up to ``SYMMETRY_RTOL`` relative to the largest
    entry magnitude; the stored form is the symmetrized average (M + M')/2.
    Anything worse is rejected rather than silently repaired.
    """

    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidMatrix(f"expected a square matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InvalidMatrix("matrix entries must be finite")
        scale = max(1.0, float(np.abs(m).max())) if m.size else 1.0
        asym = float(np.abs(m - m.T).max()) if m.size else 0.0
        if asym > SYMMETRY_RTOL * scale:
            raise InvalidMatrix(
                f"matrix is asymmetric: max |M - M'| = {asym:.3e} exceeds "
                f"{SYMMETRY_RTOL:.0e} * {scale:.3e}"
            )
        object.__setattr__(self, "entries", _readonly((m + m.T) / 2.0))

    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])

    def frobenius(self) -> float:
        return float(np.linalg.norm(self.entries))

    def to_payload(self) -> dict:
        return {"dim": self.dim, "entries": [float(x) for x in self.entries.reshape(-1)]}

    @classmethod
    def from_payload(cls, payload: dict) -> "SymMatrix":
        try:
            dim = int(payload["dim"])
            raw = np.asarray(payload["entries"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidMatrix(f"malformed matrix payload: {exc}") from exc
        if raw.size != dim * dim:
            raise InvalidMatrix(
                f"matrix payload has {raw.size} entries, expected dim*dim = {dim * dim}"
            )
        return cls(raw.reshape(dim, dim))

    def __eq__(self, other):
        return isinstance(other, SymMatrix) and np.array_equal(self.entries, other.entries)


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    """Eigenvalues in descending order with orthonormal eigenvector columns.

    ``degenerate`` is set when two adjacent eigenvalues are closer than
    ``DEGENERACY_RTOL`` times the largest one, in which case the affected
    eigenvectors are only defined up to rotation within their eigenspace.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # column k is the eigenvector for eigenvalues[k]
    source_dim: int
    degenerate: bool = False

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", _readonly(self.eigenvalues))
        object.__setattr__(self, "eigenvectors", _readonly(self.eigenvectors))

    def vector(self, k: int) -> np.ndarray:
        return self.eigenvectors[:, k]

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.T


def _jacobi_rotate(a: np.ndarray, v: np.ndarray, p: int, q: int) -> None:
    """Apply one Jacobi rotation zeroing a[p, q], accumulating into v."""
    apq = a[p, q]
    h = a[q, q] - a[p, p]
    if abs(apq) * 1e12 < abs(h):
        t = apq / h
    else:
        theta = h / (2.0 * apq)
        t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
        if theta < 0.0:
            t = -t
    c = 1.0 / np.sqrt(t * t + 1.0)
    s = t * c

    ap = a[p, :].copy()
    aq = a[q, :].copy()
    a[p, :] = c * ap - s * aq
    a[q, :] = s * ap + c * aq
    ap = a[:, p].copy()
    aq = a[:, q].copy()
    a[:, p] = c * ap - s * aq
    a[:, q] = s * ap + c * aq
    a[p, q] = 0.0
    a[q, p] = 0.0

    vp = v[:, p].copy()
    vq = v[:, q].copy()
    v[:, p] = c * vp - s * vq
    v[:, q] = s * vp + c * vq


def symmetric_eigen(m: SymMatrix) -> EigenDecomposition:
    """Eigendecompose a symmetric matrix by cyclic Jacobi sweeps.

    Output is deterministic for identical input: rotations are applied in a
    fixed row-major order, eigenvalues are sorted descending with a stable
    tie-break, and each eigenvector is flipped so its first component of
    magnitude above 1e-8 is positive.
    """
    if not isinstance(m, SymMatrix):
        m = SymMatrix(np.asarray(m, dtype=float))
    k = m.dim
    a = np.array(m.entries, copy=True)
    v = np.eye(k)
    threshold = _OFFDIAG_TARGET * m.frobenius()  # relative: Jacobi is scale invariant

    for _ in range(_MAX_SWEEPS):
        off = np.sqrt(2.0 * sum(a[p, q] ** 2 for p in range(k - 1) for q in range(p + 1, k)))
        if off <= threshold:
            break
        for p in range(k - 1):
            for q in range(p + 1, k):
                if a[p, q] != 0.0:
                    _jacobi_rotate(a, v, p, q)
    else:
        raise InvalidMatrix("Jacobi iteration failed to converge")

    lam = np.diag(a).copy()
    order = np.argsort(-lam, kind="stable")
    lam = lam[order]
    v = v[:, order]

    for col in range(k):
        nz = np.nonzero(np.abs(v[:, col]) > 1e-8)[0]
        if nz.size and v[nz[0], col] < 0.0:
            v[:, col] = -v[:, col]

    gaps = -np.diff(lam)
    degenerate = bool(gaps.size and gaps.min() < DEGENERACY_RTOL * abs(lam[0]))
    return EigenDecomposition(lam, v, source_dim=k, degenerate=degenerate)


@dataclass(frozen=True, eq=False)
class GMatrix:
    """Genetic covariance matrix with its cached eigendecomposition.

    Positive semidefinite within tolerance; build one from a possibly
    indefinite estimate with :func:`clip_negative_eigenvalues`.
    """

    matrix: SymMatrix
    eig: EigenDecomposition
    grid: TraitGrid | None = None
    clipped_indices: tuple[int, ...] = field(default=())

    def __post_init__(self):
        lam = self.eig.eigenvalues
        floor = -1e-8 * max(float(lam.max()), 0.0)
        if float(lam.min()) < floor:
            raise InvalidMatrix(
                f"eigenvalues not PSD within tolerance: min {lam.min():.3e} < {floor:.3e}"
            )
        if self.grid is not None and self.grid.size != self.matrix.dim:
            raise DimensionMismatch(
                f"grid has {self.grid.size} points but matrix is {self.matrix.dim}-dimensional"
            )

    @property
    def dim(self) -> int:
        return self.matrix.dim

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.eig.eigenvalues

    @property
    def rank(self) -> int:
        lam = self.eig.eigenvalues
        if lam.size == 0 or lam[0] <= 0.0:
            return 0
        return int(np.sum(lam > 1e-12 * lam[0]))


def _rebuild_from_eig(eig: EigenDecomposition, clipped: np.ndarray) -> SymMatrix:
    v = eig.eigenvectors
    return SymMatrix((v * clipped) @ v.T)


def clip_negative_eigenvalues(
    m: SymMatrix | GMatrix,
    tol: float = 0.0,
    grid: TraitGrid | None = None,
) -> GMatrix:
    """Zero out eigenvalues below ``tol`` and rebuild the matrix.

    Eigenvectors are untouched; only the spectrum changes, so the rebuilt
    matrix is V diag(clipped) V'. Passing an already-clipped :class:`GMatrix`
    whose spectrum clears ``tol`` returns it unchanged, which makes the
    operation exactly idempotent.
    """
    if tol < 0.0:
        raise ValueError(f"clip tolerance must be nonnegative, got {tol}")
    if isinstance(m, GMatrix):
        eig = m.eig
        source = m.matrix
        if grid is None:
            grid = m.grid
    else:
        source = m if isinstance(m, SymMatrix) else SymMatrix(np.asarray(m, dtype=float))
        eig = symmetric_eigen(source)

    below = eig.eigenvalues < tol
    if not below.any():
        if isinstance(m, GMatrix) and grid is m.grid:
            return m
        return GMatrix(source, eig, grid=grid, clipped_indices=())

    clipped = np.where(below, 0.0, eig.eigenvalues)
    new_eig = EigenDecomposition(
        clipped, eig.eigenvectors, source_dim=eig.source_dim, degenerate=eig.degenerate
    )
    return GMatrix(
        _rebuild_from_eig(eig, clipped),
        new_eig,
        grid=grid,
        clipped_indices=tuple(int(i) for i in np.nonzero(below)[0]),
    )


def load_matrix_json(path: str | Path) -> SymMatrix:
    with open(path, encoding="utf-8") as fh:
        return SymMatrix.from_payload(json.load(fh))


def load_grid_json(path: str | Path) -> TraitGrid:
    with open(path, encoding="utf-8") as fh:
        return TraitGrid.from_payload(json.load(fh))
