"""Reference designs and surrogate covariance parameters.

Two published study designs anchor the bundled scripts and the test suite:
growth rate of an insect larva measured at six temperatures, and plant height
measured at six ages. Only the eigenvalue spectra of the estimated genetic
covariances are public, so the surrogate G places those spectra on the
standard coordinate frame; E and the measurement variance are not published
at all and are set to simple plausible values. The surrogates support
structural and ordering checks, not numeric replication of the original fits.
"""

from __future__ import annotations

import numpy as np

from .core import GMatrix, SymMatrix, TraitGrid, clip_negative_eigenvalues
from .simulate import SimulationParams

# growth-rate-at-temperature design: measurements at 11..40 degrees C
TEMPERATURE_POINTS = (11.0, 17.0, 23.0, 29.0, 35.0, 40.0)
GROWTH_EIGENVALUES = (0.618, 0.200, 0.153, 0.061, 0.008, 0.0)

# height-at-age design: measurements at 18..57 days
AGE_POINTS = (18.0, 26.0, 33.0, 39.0, 47.0, 57.0)
HEIGHT_EIGENVALUES = (48.98, 0.82, 0.33, 0.08, 0.0, 0.0)

# surrogate nuisance parameters for the simulation study (not published)
SURROGATE_ENV_VARIANCE = 0.10
SURROGATE_NOISE_VARIANCE = 0.01
STUDY_FAMILIES = 100
STUDY_FAMILY_SIZE = 20
STUDY_REPS = 200
STUDY_NULL_DIM = 3
STUDY_SEED = 20260808


def temperature_grid() -> TraitGrid:
    return TraitGrid(np.array(TEMPERATURE_POINTS))


def age_grid() -> TraitGrid:
    return TraitGrid(np.array(AGE_POINTS))


def surrogate_g(eigenvalues=GROWTH_EIGENVALUES, grid: TraitGrid | None = None) -> GMatrix:
    """Diagonal G carrying a published spectrum on the coordinate frame."""
    if grid is None:
        grid = temperature_grid()
    return clip_negative_eigenvalues(SymMatrix(np.diag(eigenvalues)), 0.0, grid=grid)


def surrogate_e(dim: int = 6, variance: float = SURROGATE_ENV_VARIANCE) -> SymMatrix:
    return SymMatrix(variance * np.eye(dim))


def study_params(
    n_families: int = STUDY_FAMILIES,
    family_size: int = STUDY_FAMILY_SIZE,
    seed: int = STUDY_SEED,
) -> SimulationParams:
    """Half-sib study at the reference scale with surrogate covariances."""
    g = surrogate_g()
    return SimulationParams(
        mu=np.zeros(g.dim),
        g=g,
        e=surrogate_e(g.dim),
        sigma2=SURROGATE_NOISE_VARIANCE,
        n_families=n_families,
        family_size=family_size,
        design="half-sib",
        seed=seed,
    )
