"""Method-of-moments estimation of the genetic covariance matrix from
balanced family data (one-way MANOVA), plus ingestion of externally
estimated matrices.

For a balanced design with N_f families of n members each:

    MSB = n * sum_j (ybar_j - ybar)(ybar_j - ybar)' / (N_f - 1)
    MSW = sum_{j,i} (y_ij - ybar_j)(y_ij - ybar_j)' / (N_f (n - 1))
    sigma2_f = (MSB - MSW) / n
    G_hat_raw = c * sigma2_f

with relatedness coefficient c = 4 for half-siblings (family variance is a
quarter of the additive genetic variance) and c = 2 for full siblings. The
raw estimate may be indefinite; the usable estimate clips its negative
eigenvalues to zero. Both are kept, because the sign of the smallest raw
eigenvalue is itself a useful diagnostic.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (
    EigenDecomposition,
    GMatrix,
    SymMatrix,
    TraitGrid,
    _readonly,
    clip_negative_eigenvalues,
    symmetric_eigen,
)
from .errors import (
    DimensionMismatch,
    InsufficientData,
    InvalidMatrix,
    UnbalancedDesign,
)

HALF_SIB = "half-sib"
FULL_SIB = "full-sib"
RELATEDNESS = {HALF_SIB: 4.0, FULL_SIB: 2.0}


def normalize_design(tag: str) -> str:
    cleaned = tag.strip().lower().replace("_", "-")
    if cleaned in (HALF_SIB, "halfsib"):
        return HALF_SIB
    if cleaned in (FULL_SIB, "fullsib"):
        return FULL_SIB
    raise ValueError(f"unknown family design {tag!r}; expected half-sib or full-sib")


@dataclass(frozen=True, eq=False)
class FamilyDataset:
    """Balanced family-structured phenotype records.

    ``values[j, i]`` is the trait vector of member i of family j. Every family
    must have the same number of members; that balance is what makes the
    closed-form moment estimator valid.
    """

    values: np.ndarray  # (N_f, n, K)
    grid: TraitGrid
    design: str

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 3:
            raise UnbalancedDesign(
                f"expected a (families, members, traits) array, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise InvalidMatrix("phenotype records must be finite")
        if v.shape[0] < 2 or v.shape[1] < 2:
            raise InsufficientData(
                f"need at least 2 families of 2 members, got {v.shape[0]} x {v.shape[1]}"
            )
        if v.shape[2] != self.grid.size:
            raise DimensionMismatch(
                f"records have {v.shape[2]} traits but grid has {self.grid.size} points"
            )
        object.__setattr__(self, "design", normalize_design(self.design))
        object.__setattr__(self, "values", _readonly(v))

    @classmethod
    def from_records(cls, families, grid: TraitGrid, design: str) -> "FamilyDataset":
        """Build from a list of per-family record lists, enforcing balance."""
        sizes = {len(fam) for fam in families}
        if len(sizes) > 1:
            raise UnbalancedDesign(f"family sizes differ: {sorted(sizes)}")
        return cls(np.asarray(families, dtype=float), grid, design)

    @property
    def n_families(self) -> int:
        return int(self.values.shape[0])

    @property
    def family_size(self) -> int:
        return int(self.values.shape[1])

    @property
    def n_traits(self) -> int:
        return int(self.values.shape[2])

    @property
    def relatedness(self) -> float:
        return RELATEDNESS[self.design]


@dataclass(frozen=True, eq=False)
class VarianceComponents:
    """Mean-square matrices and the derived genetic covariance estimates."""

    between_ms: SymMatrix
    within_ms: SymMatrix
    family_component: SymMatrix
    g_hat_raw: SymMatrix
    g_hat: GMatrix
    raw_eigenvalues: np.ndarray
    clipped_indices: tuple[int, ...]
    relatedness: float

    def __post_init__(self):
        object.__setattr__(self, "raw_eigenvalues", _readonly(self.raw_eigenvalues))

    @property
    def min_raw_eigenvalue(self) -> float:
        return float(self.raw_eigenvalues.min())


def anova_estimate(data: FamilyDataset) -> VarianceComponents:
    """One-way MANOVA moment estimator of G from a balanced family design."""
    values = data.values
    n_f, n, _ = values.shape
    family_means = values.mean(axis=1)
    grand_mean = family_means.mean(axis=0)

    dev_b = family_means - grand_mean
    msb = SymMatrix(n * (dev_b.T @ dev_b) / (n_f - 1))

    dev_w = (values - family_means[:, None, :]).reshape(n_f * n, -1)
    msw = SymMatrix((dev_w.T @ dev_w) / (n_f * (n - 1)))

    family_component = SymMatrix((msb.entries - msw.entries) / n)
    g_raw = SymMatrix(data.relatedness * family_component.entries)

    raw_eig = symmetric_eigen(g_raw)
    below = raw_eig.eigenvalues < 0.0
    clipped = np.where(below, 0.0, raw_eig.eigenvalues)
    g_hat = GMatrix(
        SymMatrix((raw_eig.eigenvectors * clipped) @ raw_eig.eigenvectors.T),
        EigenDecomposition(clipped, raw_eig.eigenvectors,
                           source_dim=raw_eig.source_dim, degenerate=raw_eig.degenerate),
        grid=data.grid,
        clipped_indices=tuple(int(i) for i in np.nonzero(below)[0]),
    )
    return VarianceComponents(
        between_ms=msb,
        within_ms=msw,
        family_component=family_component,
        g_hat_raw=g_raw,
        g_hat=g_hat,
        raw_eigenvalues=raw_eig.eigenvalues,
        clipped_indices=g_hat.clipped_indices,
        relatedness=data.relatedness,
    )


def ingest_gmatrix(
    source: str | Path | dict,
    grid: TraitGrid | None = None,
    clip_tolerance: float = 0.0,
) -> GMatrix:
    """Load an externally estimated G (JSON path or payload), clip, decompose."""
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            payload = json.load(fh)
    else:
        payload = source
    matrix = SymMatrix.from_payload(payload)
    if grid is not None and grid.size != matrix.dim:
        raise DimensionMismatch(
            f"matrix is {matrix.dim}-dimensional but grid has {grid.size} points"
        )
    return clip_negative_eigenvalues(matrix, clip_tolerance, grid=grid)


def load_family_csv(path: str | Path, grid: TraitGrid, design: str) -> FamilyDataset:
    """Read `family,individual,t1,...,tK` records, validating balance."""
    k = grid.size
    expected = ["family", "individual"] + [f"t{i + 1}" for i in range(k)]
    families: dict[str, list[list[float]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != expected:
            raise InvalidMatrix(
                f"{path}: expected header {','.join(expected)}, got "
                f"{','.join(header) if header else '<empty>'}"
            )
        for row_num, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != k + 2:
                raise InvalidMatrix(f"{path}:{row_num}: expected {k + 2} fields, got {len(row)}")
            try:
                traits = [float(x) for x in row[2:]]
            except ValueError as exc:
                raise InvalidMatrix(f"{path}:{row_num}: {exc}") from exc
            families.setdefault(row[0], []).append(traits)
    if not families:
        raise InsufficientData(f"{path}: no records")
    return FamilyDataset.from_records(list(families.values()), grid, design)


def save_family_csv(data: FamilyDataset, path: str | Path) -> None:
    """Write a dataset in the same CSV layout `load_family_csv` reads."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["family", "individual"] + [f"t{i + 1}" for i in range(data.n_traits)])
        for j in range(data.n_families):
            for i in range(data.family_size):
                writer.writerow(
                    [f"F{j + 1}", f"I{i + 1}"] + [repr(float(x)) for x in data.values[j, i]]
                )
