import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from genecon.core import SymMatrix, TraitGrid, clip_negative_eigenvalues
from genecon.errors import DimensionMismatch
from genecon.reference import study_params, surrogate_g, temperature_grid
from genecon.report import (
    FigureSpec,
    make_provenance,
    partition_report,
    render_partition_figure,
    render_study_figure,
    report_json_bytes,
    study_report,
    write_json,
    write_svg,
)
from genecon.simplicity import first_difference_measure
from genecon.simulate import run_study
from genecon.spaces import partition

GRID = temperature_grid()
MEASURE = first_difference_measure(GRID)


def svg_elements(svg_text, local_tag):
    root = ET.fromstring(svg_text)
    ns = "{http://www.w3.org/2000/svg}"
    return [el for el in root.iter(f"{ns}{local_tag}")]


def panels(svg_text, kind=None):
    groups = svg_elements(svg_text, "g")
    out = []
    for g in groups:
        classes = g.get("class", "").split()
        if "panel" in classes and (kind is None or kind in classes):
            out.append(g)
    return out


def make_partition(j=4):
    g = surrogate_g()
    return g, partition(g, j, MEASURE)


class TestPartitionFigure:
    def test_panel_structure(self):
        g, part = make_partition(4)
        svg = render_partition_figure(FigureSpec(part, GRID))
        vector_panels = panels(svg, "vector")
        assert len(vector_panels) == 6
        model = [p for p in vector_panels if "model" in p.get("class").split()]
        null = [p for p in vector_panels if "null" in p.get("class").split()]
        assert len(model) == 4 and len(null) == 2
        # exactly one curve per vector panel
        ns = "{http://www.w3.org/2000/svg}"
        for p in vector_panels:
            assert len(p.findall(f"{ns}polyline")) == 1
        assert len(panels(svg, "scatter")) == 1
        assert len(panels(svg, "bars")) == 1
        scatter = panels(svg, "scatter")[0]
        assert len(scatter.findall(f"{ns}circle")) == 6
        bars = panels(svg, "bars")[0]
        rects = [r for r in bars.findall(f"{ns}rect") if "bar" in r.get("class", "")]
        assert len(rects) == 2

    def test_full_model_space_layout(self):
        g, part = make_partition(6)
        svg = render_partition_figure(FigureSpec(part, GRID))
        vector_panels = panels(svg, "vector")
        assert all("model" in p.get("class").split() for p in vector_panels)
        bars = panels(svg, "bars")[0]
        ns = "{http://www.w3.org/2000/svg}"
        null_bar = [r for r in bars.findall(f"{ns}rect") if "null" in r.get("class", "")][0]
        assert float(null_bar.get("height")) == 0.0

    def test_deterministic(self):
        g, part = make_partition(3)
        spec = FigureSpec(part, GRID)
        assert render_partition_figure(spec) == render_partition_figure(spec)

    def test_scatter_matches_report_formatting(self):
        g, part = make_partition(4)
        svg = render_partition_figure(FigureSpec(part, GRID))
        doc = partition_report(g, part, GRID, MEASURE, make_provenance({}))
        ns = "{http://www.w3.org/2000/svg}"
        circles = panels(svg, "scatter")[0].findall(f"{ns}circle")
        for circle, entry in zip(circles, doc["vectors"]):
            assert circle.get("data-proportion") == format(entry["proportion"], ".6g")
            assert circle.get("data-score") == format(entry["simplicity_score"], ".6g")

    def test_grid_mismatch_rejected(self):
        g, part = make_partition(4)
        with pytest.raises(DimensionMismatch):
            FigureSpec(part, TraitGrid(np.array([0.0, 1.0])))

    def test_panel_count_property(self):
        g, part = make_partition(2)
        assert FigureSpec(part, GRID).panel_count == 8


class TestStudyFigure:
    def make_summary(self, reps=3):
        return run_study(study_params(n_families=12, family_size=4),
                         reps=reps, null_dim=3, measure=MEASURE)

    def test_overlay_counts(self):
        summary = self.make_summary(reps=3)
        svg = render_study_figure(summary)
        all_panels = panels(svg)
        assert len(all_panels) == 2 * (summary.null_dim + 1)
        ns = "{http://www.w3.org/2000/svg}"
        for panel in all_panels:
            lines = panel.findall(f"{ns}polyline")
            reps = [p for p in lines if "rep" in p.get("class").split()]
            truth = [p for p in lines if "truth" in p.get("class").split()]
            assert len(reps) == 3
            assert len(truth) == 1

    def test_single_replicate(self):
        svg = render_study_figure(self.make_summary(reps=1))
        ns = "{http://www.w3.org/2000/svg}"
        for panel in panels(svg):
            reps = [p for p in panel.findall(f"{ns}polyline")
                    if "rep" in p.get("class").split()]
            assert len(reps) == 1

    def test_deterministic(self):
        summary = self.make_summary(reps=2)
        assert render_study_figure(summary) == render_study_figure(summary)


class TestJsonReports:
    def test_round_trip_bit_exact(self):
        g, part = make_partition(4)
        doc = partition_report(g, part, GRID, MEASURE,
                               make_provenance({"g": "g.json"}, clip_tolerance=0.0))
        data = report_json_bytes(doc)
        assert json.loads(data) == doc
        # numerics preserved exactly
        back = json.loads(data)
        assert back["vectors"][0]["proportion"] == part.proportions[0]
        assert back["eigenvalues"] == [float(x) for x in g.eig.eigenvalues]

    def test_leading_share_of_reference_spectrum(self):
        g, part = make_partition(6)
        doc = partition_report(g, part, GRID, MEASURE, make_provenance({}))
        assert doc["vectors"][0]["proportion"] == pytest.approx(0.595, abs=0.001)

    def test_figure_provenance_metadata(self):
        g, part = make_partition(4)
        prov = make_provenance({"g": "g.json"}, seed=3)
        svg = render_partition_figure(FigureSpec(part, GRID), prov)
        assert '<metadata id="provenance">' in svg
        assert render_partition_figure(FigureSpec(part, GRID), prov) == svg

    def test_clipped_indices_recorded(self):
        rng = np.random.default_rng(1)
        q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
        m = SymMatrix((q * np.array([5.0, 2.0, 1.0, 0.5, -0.1, -0.2])) @ q.T)
        g = clip_negative_eigenvalues(m, 0.0, grid=GRID)
        part = partition(g, 4, MEASURE)
        doc = partition_report(g, part, GRID, MEASURE, make_provenance({}))
        assert doc["clipped_indices"] == [4, 5]

    def test_provenance_fields(self):
        prov = make_provenance({"config": "s.json"}, seed=7, measure_kind="d1",
                               clip_tolerance=0.0, relatedness=4.0, rng="philox")
        for key in ("software", "version", "inputs", "seed", "measure",
                    "clip_tolerance", "relatedness_c", "rng", "tolerances"):
            assert key in prov
        assert prov["seed"] == 7
        assert prov["relatedness_c"] == 4.0

    def test_study_report_shape(self):
        summary = run_study(study_params(n_families=12, family_size=4),
                            reps=2, null_dim=3, measure=MEASURE)
        doc = study_report(summary, make_provenance({}))
        assert doc["reps"] == 2
        assert len(doc["replicates"]["simplest_vectors"]) == 2
        assert len(doc["replicates"]["null_pc_vectors"][0]) == 3
        assert doc["params"]["relatedness_c"] == 4.0
        assert json.loads(report_json_bytes(doc)) == doc


class TestAtomicWrites:
    def test_write_json(self, tmp_path):
        path = tmp_path / "out.json"
        write_json({"a": 1.5}, path)
        assert json.loads(path.read_text()) == {"a": 1.5}
        assert list(tmp_path.iterdir()) == [path]  # no leftover temp files

    def test_write_svg(self, tmp_path):
        path = tmp_path / "fig.svg"
        write_svg("<svg/>", path)
        assert path.read_text() == "<svg/>"
