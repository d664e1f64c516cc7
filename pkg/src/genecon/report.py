"""Figure and report emission: small-multiple SVG panels and lossless JSON.

Figures are plain SVG 1.1 built by string assembly so that identical inputs
yield byte-identical documents: element order is fixed and every number is
formatted to six significant digits. Styling is class-based (solid model
curves, dashed nearly-null curves) with defaults in the embedded stylesheet.
JSON reports serialize every numeric result at full precision and carry a
provenance block (inputs, tolerances, seed, measure kind, relatedness, and
software version).
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from xml.sax import saxutils

import numpy as np

from . import __version__
from .core import DEGENERACY_RTOL, SYMMETRY_RTOL, GMatrix, TraitGrid
from .errors import DimensionMismatch
from .simplicity import SimplicityMeasure
from .simulate import StudySummary
from .spaces import SubspacePartition

_STYLE = """\
text { font-family: sans-serif; font-size: 10px; fill: #222; }
.title { font-size: 11px; }
.frame { fill: none; stroke: #888888; stroke-width: 1; }
.zero { stroke: #bbbbbb; stroke-width: 0.75; }
.curve { fill: none; stroke-width: 1.5; }
.curve.model { stroke: #1f77b4; }
.curve.null { stroke: #d62728; stroke-dasharray: 5 3; }
.curve.rep { stroke: #9e9e9e; stroke-width: 0.5; opacity: 0.55; }
.curve.truth { stroke: #000000; stroke-width: 2.5; }
.pt.model { fill: #1f77b4; }
.pt.null { fill: #d62728; }
.bar.model { fill: #1f77b4; }
.bar.null { fill: #d62728; }
.label.model { fill: #1f77b4; font-weight: bold; }
.label.null { fill: #d62728; font-weight: bold; }"""

_PAD = 16


def _fmt(x: float) -> str:
    return format(float(x), ".6g")


@dataclass(frozen=True)
class FigureSpec:
    """Inputs for one partition figure: K vector panels plus two summaries."""

    partition: SubspacePartition
    grid: TraitGrid
    title: str = ""
    panel_width: int = 170
    panel_height: int = 130

    def __post_init__(self):
        if self.grid.size != self.partition.dim:
            raise DimensionMismatch(
                f"grid has {self.grid.size} points, partition is "
                f"{self.partition.dim}-dimensional"
            )

    @property
    def panel_count(self) -> int:
        return self.partition.dim + 2


def _panel_open(x: float, y: float, classes: str) -> str:
    return f'<g class="{classes}" transform="translate({_fmt(x)},{_fmt(y)})">'


def _frame(w: float, h: float) -> str:
    return f'<rect class="frame" x="0" y="0" width="{_fmt(w)}" height="{_fmt(h)}"/>'


def _polyline(xs, ys, classes: str) -> str:
    pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in zip(xs, ys))
    return f'<polyline class="{classes}" points="{pts}"/>'


def _x_pixels(t: np.ndarray, width: float) -> np.ndarray:
    span = t[-1] - t[0]
    return _PAD + (t - t[0]) / span * (width - 2 * _PAD)


def _y_pixels(values: np.ndarray, lo: float, hi: float, height: float) -> np.ndarray:
    return height - _PAD - (values - lo) / (hi - lo) * (height - 2 * _PAD)


def _vector_panel(x, y, w, h, t, vec, role, number, caption) -> list[str]:
    xs = _x_pixels(t, w)
    ys = _y_pixels(np.asarray(vec), -1.0, 1.0, h)
    zero = _y_pixels(np.zeros(1), -1.0, 1.0, h)[0]
    return [
        _panel_open(x, y, f"panel vector {role}"),
        _frame(w, h),
        f'<line class="zero" x1="{_fmt(_PAD)}" y1="{_fmt(zero)}" '
        f'x2="{_fmt(w - _PAD)}" y2="{_fmt(zero)}"/>',
        _polyline(xs, ys, f"curve {role}"),
        f'<text class="label {role}" x="{_fmt(_PAD + 3)}" y="{_fmt(_PAD - 3)}">{number}</text>',
        f'<text class="title" x="{_fmt(w / 2 - 12)}" y="{_fmt(h - 3)}">{caption}</text>',
        "</g>",
    ]


def _scatter_panel(x, y, w, h, part: SubspacePartition, bound: float) -> list[str]:
    lines = [
        _panel_open(x, y, "panel scatter"),
        _frame(w, h),
        f'<text class="title" x="{_fmt(_PAD)}" y="{_fmt(_PAD - 3)}">'
        "simplicity vs variance share</text>",
    ]
    roles = ["model"] * part.j + ["null"] * part.null_dim
    top = max(bound, float(part.scores.max()) if part.scores.size else 1.0)
    for role, prop, score in zip(roles, part.proportions, part.scores):
        cx = _PAD + float(np.clip(prop, 0.0, 1.0)) * (w - 2 * _PAD)
        cy = h - _PAD - float(np.clip(score / top, 0.0, 1.0)) * (h - 2 * _PAD)
        lines.append(
            f'<circle class="pt {role}" cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="3" '
            f'data-proportion="{_fmt(prop)}" data-score="{_fmt(score)}"/>'
        )
    lines.append("</g>")
    return lines


def _bars_panel(x, y, w, h, part: SubspacePartition) -> list[str]:
    lines = [
        _panel_open(x, y, "panel bars"),
        _frame(w, h),
        f'<text class="title" x="{_fmt(_PAD)}" y="{_fmt(_PAD - 3)}">variance split</text>',
    ]
    bar_w = (w - 2 * _PAD) / 3.0
    for idx, (role, frac) in enumerate(
        (("model", part.model_variance_fraction), ("null", part.null_variance_fraction))
    ):
        bh = float(np.clip(frac, 0.0, 1.0)) * (h - 2 * _PAD)
        bx = _PAD + bar_w * (0.5 + 1.5 * idx)
        lines.append(
            f'<rect class="bar {role}" x="{_fmt(bx)}" y="{_fmt(h - _PAD - bh)}" '
            f'width="{_fmt(bar_w * 0.8)}" height="{_fmt(bh)}" data-fraction="{_fmt(frac)}"/>'
        )
        lines.append(
            f'<text x="{_fmt(bx)}" y="{_fmt(h - 3)}">{role} {_fmt(frac)}</text>'
        )
    lines.append("</g>")
    return lines


def _metadata_element(provenance: dict | None) -> list[str]:
    if provenance is None:
        return []
    blob = saxutils.escape(json.dumps(provenance, sort_keys=True))
    return [f'<metadata id="provenance">{blob}</metadata>']


def render_partition_figure(spec: FigureSpec, provenance: dict | None = None) -> str:
    """K vector panels in one top row, scatter and variance bars below.

    The top row runs model vectors first (leading eigenvector leftmost), then
    nearly-null simplicity vectors simplest-first, so it always shows the
    leading eigenvector and, when the nearly null space is nonempty, the
    simplest nearly-null vector.
    """
    part = spec.partition
    k = part.dim
    pw, ph = spec.panel_width, spec.panel_height
    gap = 12
    margin = 16
    width = 2 * margin + k * pw + (k - 1) * gap
    height = 2 * margin + 2 * ph + gap + (18 if spec.title else 0)
    top = margin + (18 if spec.title else 0)

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f"<style>{_STYLE}</style>",
        *_metadata_element(provenance),
    ]
    if spec.title:
        lines.append(f'<text class="title" x="{margin}" y="{margin}">{spec.title}</text>')

    combined = part.combined_basis()
    t = np.asarray(spec.grid.points)
    for i in range(k):
        role = "model" if i < part.j else "null"
        number = i + 1 if i < part.j else i - part.j + 1
        caption = f"{'PC' if role == 'model' else 'S'}{number}"
        x = margin + i * (pw + gap)
        lines += _vector_panel(x, top, pw, ph, t, combined[i], role, number, caption)

    bound = 1.0
    if part.scores.size:
        bound = max(1.0, float(part.scores.max()))
    lines += _scatter_panel(margin, top + ph + gap, pw, ph, part, bound)
    lines += _bars_panel(margin + pw + gap, top + ph + gap, pw, ph, part)
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def render_study_figure(
    summary: StudySummary,
    provenance: dict | None = None,
    panel_width: int = 170,
    panel_height: int = 130,
) -> str:
    """Overlay panels for the replicated study.

    Top row: all replicates' simplest nearly-null vectors, then the estimated
    nearly-null eigenvectors by rank; bottom row: the matching expected
    responses under the generating G. Each panel draws one faint curve per
    replicate and the true-parameter curve as a heavy line on top.
    """
    k = summary.params.dim
    j = k - summary.null_dim
    grid = summary.params.g.grid
    t = np.asarray(grid.points) if grid is not None else np.arange(k, dtype=float)
    cols = summary.null_dim + 1
    pw, ph = panel_width, panel_height
    gap = 12
    margin = 16
    width = 2 * margin + cols * pw + (cols - 1) * gap
    height = 2 * margin + 2 * ph + gap

    vector_sets = [summary.simplest_vectors()] + [
        summary.null_pc_vectors()[:, r, :] for r in range(summary.null_dim)
    ]
    response_sets = [summary.simplest_responses()] + [
        summary.null_pc_responses()[:, r, :] for r in range(summary.null_dim)
    ]
    truth_vectors = [summary.true_simplest] + list(summary.true_null_pcs)
    truth_responses = [summary.true_simplest_response] + list(summary.true_pc_responses)
    captions = ["simplest"] + [f"PC{j + r + 1}" for r in range(summary.null_dim)]

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f"<style>{_STYLE}</style>",
        *_metadata_element(provenance),
    ]
    xs = _x_pixels(t, pw)
    for col in range(cols):
        x = margin + col * (pw + gap)
        lines.append(_panel_open(x, margin, "panel vector overlay"))
        lines.append(_frame(pw, ph))
        zero = _y_pixels(np.zeros(1), -1.0, 1.0, ph)[0]
        lines.append(
            f'<line class="zero" x1="{_fmt(_PAD)}" y1="{_fmt(zero)}" '
            f'x2="{_fmt(pw - _PAD)}" y2="{_fmt(zero)}"/>'
        )
        for vec in vector_sets[col]:
            lines.append(_polyline(xs, _y_pixels(vec, -1.0, 1.0, ph), "curve rep"))
        lines.append(
            _polyline(xs, _y_pixels(truth_vectors[col], -1.0, 1.0, ph), "curve truth")
        )
        lines.append(
            f'<text class="title" x="{_fmt(_PAD)}" y="{_fmt(_PAD - 3)}">{captions[col]}</text>'
        )
        lines.append("</g>")

        span = max(
            float(np.abs(response_sets[col]).max()),
            float(np.abs(truth_responses[col]).max()),
            1e-12,
        )
        y = margin + ph + gap
        lines.append(_panel_open(x, y, "panel response overlay"))
        lines.append(_frame(pw, ph))
        zero = _y_pixels(np.zeros(1), -span, span, ph)[0]
        lines.append(
            f'<line class="zero" x1="{_fmt(_PAD)}" y1="{_fmt(zero)}" '
            f'x2="{_fmt(pw - _PAD)}" y2="{_fmt(zero)}"/>'
        )
        for vec in response_sets[col]:
            lines.append(_polyline(xs, _y_pixels(vec, -span, span, ph), "curve rep"))
        lines.append(
            _polyline(xs, _y_pixels(truth_responses[col], -span, span, ph), "curve truth")
        )
        lines.append(
            f'<text class="title" x="{_fmt(_PAD)}" y="{_fmt(_PAD - 3)}">'
            f"response to {captions[col]}</text>"
        )
        lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def make_provenance(
    inputs: dict,
    seed: int | None = None,
    measure_kind: str | None = None,
    clip_tolerance: float | None = None,
    relatedness: float | None = None,
    rng: str | None = None,
) -> dict:
    return {
        "software": "genecon",
        "version": __version__,
        "inputs": inputs,
        "seed": seed,
        "measure": measure_kind,
        "clip_tolerance": clip_tolerance,
        "relatedness_c": relatedness,
        "rng": rng,
        "tolerances": {
            "symmetry_rtol": SYMMETRY_RTOL,
            "degeneracy_rtol": DEGENERACY_RTOL,
        },
    }


def partition_report(
    g: GMatrix,
    part: SubspacePartition,
    grid: TraitGrid,
    measure: SimplicityMeasure,
    provenance: dict,
) -> dict:
    """Lossless JSON document for one partition."""
    combined = part.combined_basis()
    vectors = []
    for i in range(part.dim):
        role = "model" if i < part.j else "null"
        number = i + 1 if i < part.j else i - part.j + 1
        entry = {
            "role": role,
            "number": number,
            "coordinates": [float(x) for x in combined[i]],
            "simplicity_score": float(part.scores[i]),
            "response_norm": float(part.response_norms[i]),
            "proportion": float(part.proportions[i]),
        }
        if role == "model":
            entry["eigenvalue"] = float(part.model_eigenvalues[i])
        vectors.append(entry)
    return {
        "provenance": provenance,
        "grid": [float(t) for t in grid.points],
        "dim": part.dim,
        "J": part.j,
        "eigenvalues": [float(x) for x in g.eig.eigenvalues],
        "clipped_indices": [int(i) for i in g.clipped_indices],
        "model_variance_fraction": float(part.model_variance_fraction),
        "null_variance_fraction": float(part.null_variance_fraction),
        "zero_variance": bool(part.zero_variance),
        "boundary_tie": bool(part.boundary_tie),
        "null_degenerate": bool(part.null_basis.degenerate),
        "measure": {
            "kind": measure.kind,
            "score_upper_bound": float(measure.score_upper_bound),
        },
        "vectors": vectors,
    }


def study_report(summary: StudySummary, provenance: dict) -> dict:
    """Lossless JSON document for a replicated study."""
    p = summary.params
    reps = summary.replicates
    return {
        "provenance": provenance,
        "reps": summary.reps,
        "null_dim": summary.null_dim,
        "measure": summary.measure_kind,
        "params": {
            "mu": [float(x) for x in p.mu],
            "g": p.g.matrix.to_payload(),
            "e": p.e.to_payload(),
            "sigma2": float(p.sigma2),
            "families": p.n_families,
            "siblings": p.family_size,
            "design": p.design,
            "relatedness_c": float(p.relatedness),
            "seed": p.seed,
        },
        "replicates": {
            "min_raw_eigenvalue": [float(r.min_raw_eigenvalue) for r in reps],
            "negative_min_eigenvalue": [bool(r.negative_min_eigenvalue) for r in reps],
            "canonical_distance_sq": [float(r.canonical_distance_sq) for r in reps],
            "simplest_response_norm": [float(r.simplest_response_norm) for r in reps],
            "null_pc_response_norms": [
                [float(x) for x in r.null_pc_response_norms] for r in reps
            ],
            "simplest_vectors": [[float(x) for x in r.simplest_vector] for r in reps],
            "null_pc_vectors": [
                [[float(x) for x in row] for row in r.null_pc_vectors] for r in reps
            ],
            "simplest_responses": [
                [float(x) for x in r.simplest_response] for r in reps
            ],
            "null_pc_responses": [
                [[float(x) for x in row] for row in r.null_pc_responses] for r in reps
            ],
        },
        "true": {
            "null_pcs": [[float(x) for x in row] for row in summary.true_null_pcs],
            "simplest": [float(x) for x in summary.true_simplest],
            "simplest_response": [float(x) for x in summary.true_simplest_response],
            "pc_responses": [[float(x) for x in row] for row in summary.true_pc_responses],
        },
        "aggregate": {
            "simplest_norm_mean": float(summary.simplest_norm_mean),
            "simplest_norm_sd": float(summary.simplest_norm_sd),
            "pc_norm_means": [float(x) for x in summary.pc_norm_means],
            "pc_norm_sds": [float(x) for x in summary.pc_norm_sds],
            "negative_fraction": float(summary.negative_fraction),
            "min_eigenvalue_observed": float(summary.min_eigenvalue_observed),
            "mean_canonical_distance_sq": float(summary.mean_canonical_distance_sq),
        },
    }


def report_json_bytes(doc: dict) -> bytes:
    return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8")


def write_bytes_atomic(data: bytes, path: str | Path) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(doc: dict, path: str | Path) -> None:
    write_bytes_atomic(report_json_bytes(doc), path)


def write_svg(text: str, path: str | Path) -> None:
    write_bytes_atomic(text.encode("utf-8"), path)
