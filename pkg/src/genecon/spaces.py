"""Model-space / nearly-null-space partitions, selection responses, and
subspace distances.

The model space is the span of the top-J eigenvectors of G; its orthogonal
complement, the nearly null space, is re-expressed in a simplicity basis so
that low-variance directions can be read off in interpretable form. Expected
selection responses follow the Breeder's equation: response = G (G+E)^-1 s,
or G beta when the gradient beta is given directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import GMatrix, SymMatrix, _readonly, symmetric_eigen
from .errors import DimensionMismatch, InvalidMatrix, SingularPhenotypicCovariance
from .parallel import ordered_map
from .simplicity import SimplicityBasis, SimplicityMeasure, simplicity_basis

CONDITION_LIMIT = 1e12
BOUNDARY_TIE_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class SelectionVectors:
    """Selection gradient, differential, and the expected response they imply.

    ``differential`` is None when only the gradient is known (no E supplied).
    """

    gradient: np.ndarray
    response: np.ndarray
    response_norm: float
    differential: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "gradient", _readonly(self.gradient))
        object.__setattr__(self, "response", _readonly(self.response))
        if self.differential is not None:
            object.__setattr__(self, "differential", _readonly(self.differential))


@dataclass(frozen=True, eq=False)
class VarianceShares:
    """Per-vector response norms and their normalized proportions."""

    norms: np.ndarray
    proportions: np.ndarray
    zero_total: bool = False

    def __post_init__(self):
        object.__setattr__(self, "norms", _readonly(self.norms))
        object.__setattr__(self, "proportions", _readonly(self.proportions))

    def pairs(self) -> list[tuple[float, float]]:
        return [(float(n), float(p)) for n, p in zip(self.norms, self.proportions)]


@dataclass(frozen=True, eq=False)
class SubspacePartition:
    """J-dimensional model space plus simplicity basis of the complement.

    The combined basis (model eigenvectors followed by nearly-null simplicity
    vectors) is orthonormal in R^K. Per-vector ``scores``, ``response_norms``
    and ``proportions`` run over that combined basis. The model/null variance
    fractions split the total response-norm mass of the eigenbasis at J,
    which does not depend on the basis chosen for either subspace.
    """

    j: int
    model_vectors: np.ndarray       # (J, K) rows, eigenvectors of G
    model_eigenvalues: np.ndarray   # (J,)
    null_basis: SimplicityBasis     # K - J simplicity-ordered vectors
    scores: np.ndarray              # (K,) simplicity score of every basis vector
    response_norms: np.ndarray      # (K,) ||G b|| per basis vector
    proportions: np.ndarray         # (K,) norms normalized to sum 1
    model_variance_fraction: float
    null_variance_fraction: float
    zero_variance: bool
    boundary_tie: bool              # eigenvalue J ties eigenvalue J+1 within tolerance

    def __post_init__(self):
        for name in ("model_vectors", "model_eigenvalues", "scores",
                     "response_norms", "proportions"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))

    @property
    def dim(self) -> int:
        return int(self.model_vectors.shape[1])

    @property
    def null_dim(self) -> int:
        return len(self.null_basis)

    def combined_basis(self) -> np.ndarray:
        """(K, K) rows: model eigenvectors first, then null simplicity vectors."""
        return np.vstack([self.model_vectors, self.null_basis.vectors])


def _as_vector(x, dim: int, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=float).reshape(-1)
    if v.size != dim:
        raise DimensionMismatch(f"{name} has length {v.size}, expected {dim}")
    return v


def response_to_selection(g: GMatrix, beta) -> SelectionVectors:
    """Expected response G beta for a selection gradient beta."""
    b = _as_vector(beta, g.dim, "selection gradient")
    response = g.matrix.entries @ b
    return SelectionVectors(b, response, float(np.linalg.norm(response)))


def _solve_phenotypic(g: GMatrix, e: SymMatrix, rhs: np.ndarray) -> np.ndarray:
    """(G+E)^-1 rhs via the eigendecomposition, guarding the condition number."""
    if e.dim != g.dim:
        raise DimensionMismatch(f"E is {e.dim}-dimensional, G is {g.dim}-dimensional")
    total = SymMatrix(g.matrix.entries + e.entries)
    eig = symmetric_eigen(total)
    mags = np.abs(eig.eigenvalues)
    if mags.min() == 0.0 or mags.max() / mags.min() > CONDITION_LIMIT:
        raise SingularPhenotypicCovariance(
            f"G + E condition number exceeds {CONDITION_LIMIT:.0e}"
        )
    v = eig.eigenvectors
    coords = v.T @ rhs
    if coords.ndim == 1:
        coords = coords / eig.eigenvalues
    else:
        coords = coords / eig.eigenvalues[:, None]
    return v @ coords


def breeders_response(g: GMatrix, e: SymMatrix, s) -> SelectionVectors:
    """Breeder's equation: response = G (G+E)^-1 s, with the gradient back-filled."""
    diff = _as_vector(s, g.dim, "selection differential")
    beta = _solve_phenotypic(g, e, diff)
    response = g.matrix.entries @ beta
    return SelectionVectors(beta, response, float(np.linalg.norm(response)), differential=diff)


def heritability_matrix(g: GMatrix, e: SymMatrix) -> np.ndarray:
    """Multivariate heritability operator G (G+E)^-1 (not symmetric in general)."""
    return _solve_phenotypic(g, e, g.matrix.entries.T).T


def variance_proportions(g: GMatrix, basis) -> VarianceShares:
    """Response norms ||G b|| per basis vector, normalized to proportions.

    For the eigenbasis the norms are the eigenvalues, so the proportions
    coincide with eigenvalue shares; for any other orthonormal basis they are
    the genuinely basis-dependent response-norm shares.
    """
    b = np.asarray(basis, dtype=float)
    if b.ndim == 1:
        b = b.reshape(1, -1)
    if b.shape[1] != g.dim:
        raise DimensionMismatch(f"basis vectors have length {b.shape[1]}, expected {g.dim}")
    gram = b @ b.T
    if b.size and np.abs(gram - np.eye(b.shape[0])).max() > 1e-8:
        raise InvalidMatrix("basis rows are not orthonormal within 1e-8")
    norms = np.linalg.norm(b @ g.matrix.entries.T, axis=1)
    total = float(norms.sum())
    if total <= 0.0:
        return VarianceShares(norms, np.zeros_like(norms), zero_total=True)
    return VarianceShares(norms, norms / total, zero_total=False)


def partition(g: GMatrix, j: int, measure: SimplicityMeasure) -> SubspacePartition:
    """Split trait space at J: top-J eigenvectors vs simplicity basis of the rest.

    A tie between eigenvalues J and J+1 makes the split ill-defined; it is
    flagged (``boundary_tie``) rather than rejected.
    """
    k = g.dim
    if not 0 <= j <= k:
        raise ValueError(f"model dimension must be in [0, {k}], got {j}")
    if measure.dim != k:
        raise DimensionMismatch(f"measure is {measure.dim}-dimensional, G is {k}-dimensional")

    lam = g.eig.eigenvalues
    vectors = g.eig.eigenvectors.T  # rows
    model_vectors = vectors[:j]
    null_b = simplicity_basis(vectors[j:], measure)

    combined = np.vstack([model_vectors, null_b.vectors])
    shares = variance_proportions(g, combined)
    lam_mat = measure.lambda_matrix.entries
    scores = np.einsum("ij,jk,ik->i", combined, lam_mat, combined)

    total = float(lam.sum())
    if shares.zero_total or total <= 0.0:
        model_frac, null_frac = 0.0, 0.0
        zero = True
    else:
        model_frac = float(lam[:j].sum() / total)
        null_frac = float(lam[j:].sum() / total)
        zero = False

    boundary_tie = bool(
        0 < j < k and lam[j - 1] - lam[j] < BOUNDARY_TIE_RTOL * max(1.0, abs(lam[0]))
    )
    return SubspacePartition(
        j=j,
        model_vectors=model_vectors,
        model_eigenvalues=lam[:j],
        null_basis=null_b,
        scores=scores,
        response_norms=shares.norms,
        proportions=shares.proportions,
        model_variance_fraction=model_frac,
        null_variance_fraction=null_frac,
        zero_variance=zero,
        boundary_tie=boundary_tie,
    )


def sweep_partitions(g: GMatrix, measure: SimplicityMeasure) -> list[SubspacePartition]:
    """Partitions for every J from 0 to K, in order."""
    return ordered_map(lambda j: partition(g, j, measure), range(g.dim + 1))


def canonical_angle_distance(u, w) -> float:
    """Squared subspace distance: sum of squared sines of the canonical angles.

    Equals L - ||U'W||_F^2 for orthonormal bases U, W of two L-dimensional
    subspaces, and lies in [0, L].
    """
    ub = np.asarray(u, dtype=float)
    wb = np.asarray(w, dtype=float)
    if ub.ndim == 1:
        ub = ub.reshape(1, -1)
    if wb.ndim == 1:
        wb = wb.reshape(1, -1)
    if ub.shape[0] != wb.shape[0]:
        raise DimensionMismatch(
            f"subspaces have dimensions {ub.shape[0]} and {wb.shape[0]}"
        )
    if ub.shape[1] != wb.shape[1]:
        raise DimensionMismatch(
            f"ambient dimensions differ: {ub.shape[1]} vs {wb.shape[1]}"
        )
    for name, b in (("first", ub), ("second", wb)):
        if b.size and np.abs(b @ b.T - np.eye(b.shape[0])).max() > 1e-8:
            raise InvalidMatrix(f"{name} basis rows are not orthonormal within 1e-8")
    cross = ub @ wb.T
    dist2 = ub.shape[0] - float(np.sum(cross * cross))
    return max(dist2, 0.0)
