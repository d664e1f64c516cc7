"""Acceptance criteria, one test per numbered criterion.

Each test prints a single pass/fail line (visible with `pytest -s`) and
enforces its runtime budget. Monte Carlo checks run on fixed seeds, so every
assertion here is deterministic.
"""

import json
import time
import xml.etree.ElementTree as ET
from contextlib import contextmanager

import numpy as np
import pytest

from genecon.cli import main
from genecon.core import SymMatrix, TraitGrid, clip_negative_eigenvalues
from genecon.estimate import FamilyDataset, anova_estimate
from genecon.reference import (
    GROWTH_EIGENVALUES,
    HEIGHT_EIGENVALUES,
    age_grid,
    study_params,
    surrogate_g,
    temperature_grid,
)
from genecon.simplicity import first_difference_measure, simplicity_basis, simplicity_score
from genecon.simulate import run_study
from genecon.spaces import partition, variance_proportions

SVG_NS = "{http://www.w3.org/2000/svg}"


@contextmanager
def criterion(num, name, budget_s=None):
    t0 = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"criterion {num:02d} ({name}): FAIL")
        raise
    elapsed = time.perf_counter() - t0
    if budget_s is not None:
        assert elapsed < budget_s, (
            f"criterion {num} exceeded its runtime budget: {elapsed:.1f}s >= {budget_s}s"
        )
    print(f"criterion {num:02d} ({name}): PASS ({elapsed:.1f}s)")


def quadratic_scores(vectors, measure):
    lam = measure.lambda_matrix.entries
    return np.einsum("ij,jk,ik->i", vectors, lam, vectors)


def random_psd(k, rng, eigenvalues=None):
    if eigenvalues is None:
        eigenvalues = rng.uniform(0.0, 2.0, size=k)
    q, r = np.linalg.qr(rng.standard_normal((k, k)))
    q *= np.sign(np.diag(r))
    return clip_negative_eigenvalues(SymMatrix((q * eigenvalues) @ q.T), 0.0)


def test_criterion_01_simplicity_bounds():
    with criterion(1, "simplicity score bounds", budget_s=5.0):
        rng = np.random.default_rng(101)
        for grid in (temperature_grid(), age_grid()):
            measure = first_difference_measure(grid)
            raw = rng.standard_normal((100_000, grid.size))
            unit = raw / np.linalg.norm(raw, axis=1, keepdims=True)
            scores = quadratic_scores(unit, measure)
            assert scores.min() >= -1e-9
            assert scores.max() <= 4.0 + 1e-9
            constant = np.ones(grid.size) / np.sqrt(grid.size)
            assert abs(simplicity_score(constant, measure) - 4.0) <= 1e-12


def test_criterion_02_simplicity_basis_oracle():
    with criterion(2, "simplicity basis vs random search", budget_s=30.0):
        rng = np.random.default_rng(202)
        measure = first_difference_measure(temperature_grid())
        for trial in range(100):
            dims = 1 + trial % 5
            p, _ = np.linalg.qr(rng.standard_normal((6, dims)))
            basis = simplicity_basis(p.T, measure)
            coef = rng.standard_normal((10_000, dims))
            coef /= np.linalg.norm(coef, axis=1, keepdims=True)
            reduced = p.T @ measure.lambda_matrix.entries @ p
            sampled = np.einsum("ij,jk,ik->i", coef, reduced, coef)
            assert sampled.max() <= basis.scores[0] + 1e-8

        # hand-solved K=3 case: P' Lambda P = [[3,1],[1,2]]
        eq_measure = first_difference_measure(TraitGrid(np.array([0.0, 1.0, 2.0])))
        hand = simplicity_basis(np.eye(3)[:2], eq_measure)
        expected = np.array([(5 + np.sqrt(5)) / 2, (5 - np.sqrt(5)) / 2])
        np.testing.assert_allclose(hand.scores, expected, atol=1e-10)


def test_criterion_03_variance_bookkeeping():
    with criterion(3, "variance bookkeeping", budget_s=1.0):
        growth = surrogate_g(GROWTH_EIGENVALUES, temperature_grid())
        shares = variance_proportions(growth, growth.eig.eigenvectors.T)
        assert shares.proportions[0] == pytest.approx(0.5942, abs=0.0005)

        part = partition(growth, 4, first_difference_measure(temperature_grid()))
        # The source study reports this share with two roundings that
        # disagree: 0.7% as quoted, 0.008/1.040 = 0.769% from the per-vector
        # values. The 0.00865 target matches neither exactly, so either
        # rounding is accepted.
        null_frac = part.null_variance_fraction
        assert (
            abs(null_frac - 0.00865) <= 0.0005
            or abs(null_frac - 0.008 / 1.040) <= 0.0005
        )

        height = surrogate_g(HEIGHT_EIGENVALUES, age_grid())
        h_shares = variance_proportions(height, height.eig.eigenvectors.T)
        assert h_shares.proportions[0] == pytest.approx(0.9755, abs=0.0005)
        assert h_shares.proportions[:2].sum() == pytest.approx(0.9918, abs=0.0005)


def test_criterion_04_eigen_response_identity():
    with criterion(4, "eigen-response identity and spectral bounds", budget_s=30.0):
        rng = np.random.default_rng(404)
        for trial in range(1000):
            eigenvalues = rng.uniform(0.0, 2.0, size=6)
            if trial % 4 == 0:
                eigenvalues[rng.integers(0, 6)] = 0.0  # rank-deficient cases too
            g = random_psd(6, rng, eigenvalues=np.sort(eigenvalues)[::-1])
            lam = g.eig.eigenvalues
            tol = 1e-9 * max(1.0, lam[0])
            norms = np.linalg.norm(g.matrix.entries @ g.eig.eigenvectors, axis=0)
            assert np.abs(norms - lam).max() <= tol

            j = int(rng.integers(1, 6))
            vectors = g.eig.eigenvectors.T
            cm = rng.standard_normal((1000, j))
            cm /= np.linalg.norm(cm, axis=1, keepdims=True)
            model_norms = np.linalg.norm((cm @ vectors[:j]) @ g.matrix.entries.T, axis=1)
            assert model_norms.min() >= lam[j - 1] - 1e-9

            cn = rng.standard_normal((1000, 6 - j))
            cn /= np.linalg.norm(cn, axis=1, keepdims=True)
            null_norms = np.linalg.norm((cn @ vectors[j:]) @ g.matrix.entries.T, axis=1)
            assert null_norms.max() <= lam[j] + 1e-9


def test_criterion_05_breeders_consistency():
    from genecon.spaces import breeders_response, response_to_selection

    with criterion(5, "breeder's equation consistency"):
        rng = np.random.default_rng(505)
        for _ in range(1000):
            k = int(rng.integers(2, 7))
            g = random_psd(k, rng)
            e = random_psd(k, rng, eigenvalues=rng.uniform(0.1, 2.0, size=k)).matrix
            beta = rng.standard_normal(k)
            s = (g.matrix.entries + e.entries) @ beta
            via_s = breeders_response(g, e, s)
            direct = response_to_selection(g, beta)
            assert np.abs(via_s.response - direct.response).max() <= 1e-9

        scalar = breeders_response(
            clip_negative_eigenvalues(SymMatrix([[1.0]]), 0.0), SymMatrix([[3.0]]), [2.0]
        )
        assert abs(scalar.response[0] - 0.5) <= 1e-12


def test_criterion_06_anova_estimator():
    with criterion(6, "moment estimator", budget_s=180.0):
        # scalar hand example {1,-1}, {3,5}: the trait grid needs K >= 2, so
        # the scalar records ride on two identical trait coordinates; every
        # entry then equals the scalar hand value
        fam = np.array([[[1.0, 1.0], [-1.0, -1.0]], [[3.0, 3.0], [5.0, 5.0]]])
        grid2 = TraitGrid(np.array([0.0, 1.0]))
        vc = anova_estimate(FamilyDataset(fam, grid2, "half-sib"))
        assert np.array_equal(vc.between_ms.entries, np.full((2, 2), 16.0))
        assert np.array_equal(vc.within_ms.entries, np.full((2, 2), 2.0))
        assert np.array_equal(vc.g_hat_raw.entries, np.full((2, 2), 28.0))

        # unbiasedness at scale: mean of 50 raw estimates within 3 MC
        # standard errors of the generating G, elementwise
        from genecon.simulate import generate_dataset

        true_g = surrogate_g().matrix.entries
        raws = []
        params = study_params(n_families=2000, family_size=20, seed=606)
        for rep in range(50):
            data = generate_dataset(params, replicate=rep)
            raws.append(anova_estimate(data).g_hat_raw.entries)
        raws = np.array(raws)
        mean = raws.mean(axis=0)
        se = raws.std(axis=0, ddof=1) / np.sqrt(len(raws))
        assert np.all(np.abs(mean - true_g) <= 3.0 * se)

        # consistency: mean Frobenius error strictly decreases with family count
        errors = []
        for n_f in (50, 200, 800):
            params = study_params(n_families=n_f, family_size=20, seed=607)
            errs = [
                np.linalg.norm(
                    anova_estimate(generate_dataset(params, replicate=r)).g_hat.matrix.entries
                    - true_g
                )
                for r in range(50)
            ]
            errors.append(np.mean(errs))
        assert errors[0] > errors[1] > errors[2]


def test_criterion_07_study_reproduction():
    with criterion(7, "replicated study, structural", budget_s=300.0):
        measure = first_difference_measure(temperature_grid())
        summary = run_study(study_params(), reps=200, null_dim=3, measure=measure)

        # (a) negative smallest raw eigenvalue in the majority of replicates
        assert summary.negative_fraction > 0.5

        # (b) simplest nearly-null response well below the fourth-eigenvector
        # response: gap beyond three pooled standard deviations
        gap = summary.pc_norm_means[0] - summary.simplest_norm_mean
        pooled = np.sqrt((summary.simplest_norm_sd**2 + summary.pc_norm_sds[0] ** 2) / 2)
        assert gap > 3.0 * pooled

        # (c) the simplest vector's response length is the more stable statistic
        assert summary.simplest_norm_sd < summary.pc_norm_sds[0]


def test_criterion_08_nearly_null_space_consistency():
    with criterion(8, "nearly-null-space consistency", budget_s=180.0):
        measure = first_difference_measure(temperature_grid())
        means = []
        for n_f in (50, 200, 800):
            summary = run_study(
                study_params(n_families=n_f, seed=808), reps=20, null_dim=3, measure=measure
            )
            means.append(summary.mean_canonical_distance_sq)
        assert means[0] > means[1] > means[2]


def _write_cli_inputs(tmp_path):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({"points": [11.0, 17.0, 23.0, 29.0, 35.0, 40.0]}))
    g = tmp_path / "g.json"
    g.write_text(
        json.dumps({"dim": 6, "entries": list(np.diag(GROWTH_EIGENVALUES).ravel())})
    )
    cfg = tmp_path / "study.json"
    cfg.write_text(
        json.dumps(
            {
                "grid": {"points": [11.0, 17.0, 23.0, 29.0, 35.0, 40.0]},
                "g": {"dim": 6, "entries": list(np.diag(GROWTH_EIGENVALUES).ravel())},
                "e": {"dim": 6, "entries": list((0.1 * np.eye(6)).ravel())},
                "sigma2": 0.01,
                "families": 12,
                "siblings": 5,
                "design": "half-sib",
                "seed": 99,
                "reps": 4,
                "null_dim": 3,
                "measure": "d1",
            }
        )
    )
    return grid, g, cfg


def test_criterion_09_cli_determinism(tmp_path, monkeypatch):
    with criterion(9, "byte-identical CLI outputs"):
        grid, g, cfg = _write_cli_inputs(tmp_path)
        outputs = []
        for tag, threads in (("a", None), ("b", "1"), ("c", "3")):
            if threads is None:
                monkeypatch.delenv("GENECON_THREADS", raising=False)
            else:
                monkeypatch.setenv("GENECON_THREADS", threads)
            rep = tmp_path / f"report_{tag}.json"
            fig = tmp_path / f"figure_{tag}.svg"
            summ = tmp_path / f"summary_{tag}.json"
            sfig = tmp_path / f"study_{tag}.svg"
            assert main(["analyze", "--g", str(g), "--grid", str(grid), "--J", "4",
                         "--out", str(rep), "--svg", str(fig)]) == 0
            assert main(["simulate", "--config", str(cfg), "--out", str(summ),
                         "--svg", str(sfig)]) == 0
            outputs.append(
                (rep.read_bytes(), fig.read_bytes(), summ.read_bytes(), sfig.read_bytes())
            )
        assert outputs[0] == outputs[1] == outputs[2]


def test_criterion_10_figure_structure(tmp_path):
    with criterion(10, "figure structure"):
        grid, g, _ = _write_cli_inputs(tmp_path)
        fig = tmp_path / "fig.svg"
        assert main(["analyze", "--g", str(g), "--grid", str(grid), "--J", "4",
                     "--out", str(tmp_path / "r.json"), "--svg", str(fig)]) == 0
        root = ET.fromstring(fig.read_text())
        groups = [el for el in root.iter(f"{SVG_NS}g")]
        vector_panels = [el for el in groups
                         if {"panel", "vector"} <= set(el.get("class", "").split())]
        assert len(vector_panels) == 6
        assert sum("model" in p.get("class").split() for p in vector_panels) == 4
        assert sum("null" in p.get("class").split() for p in vector_panels) == 2
        scatter = [el for el in groups if "scatter" in el.get("class", "").split()]
        assert len(scatter) == 1
        assert len(scatter[0].findall(f"{SVG_NS}circle")) == 6
        bars = [el for el in groups if "bars" in el.get("class", "").split()]
        assert len(bars) == 1
        bar_rects = [r for r in bars[0].findall(f"{SVG_NS}rect")
                     if "bar" in r.get("class", "")]
        assert len(bar_rects) == 2

        out_dir = tmp_path / "sweep"
        assert main(["sweep", "--g", str(g), "--grid", str(grid),
                     "--out-dir", str(out_dir)]) == 0
        assert len(list(out_dir.glob("report_J*.json"))) == 7
        assert len(list(out_dir.glob("figure_J*.svg"))) == 7
