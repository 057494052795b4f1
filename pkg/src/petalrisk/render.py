"""SVG rendering of petal flowers and graphical score charts.

Output is deterministic presentation-layer text: identical inputs produce
byte-identical documents. Element ids follow a stable scheme so tests and
the browser UI can address parts structurally: ``petal-<factor>``,
``grid-<factor>-<level>``, ``legend-color``, ``legend-lobe`` and
``cell-<smoking>-<age>-<sbp>-<nonhdl>`` for chart cells.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from typing import Mapping, Sequence
from xml.sax.saxutils import escape

from .geometry import FlowerLayout, PetalPlacement, sample_outline
from .score2 import (
    PatientRecord,
    RiskRegion,
    Score2CoefficientBundle,
    Sex,
    evaluate_score2,
    format_percent,
    percent_integer,
)
from .surrogate import (
    FACTOR_LABELS,
    FACTOR_ORDER,
    FACTOR_UNITS,
    GscSpec,
    SurrogateModel,
    bin_midpoint,
    default_gsc_spec,
    denormalize_factor,
    gsc_cell_patient,
    normalize,
    predict,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class RiskColorClass(str, Enum):
    GREEN = "green"
    ORANGE = "orange"
    RED = "red"


_FILL = {
    RiskColorClass.GREEN: "#43a047",
    RiskColorClass.ORANGE: "#fb8c00",
    RiskColorClass.RED: "#e53935",
}

_LEGEND_TEXT = {
    RiskColorClass.RED: "Very high CVD risk (treatment recommended)",
    RiskColorClass.ORANGE: "High CVD risk (treatment to be considered)",
    RiskColorClass.GREEN: "Low-to-moderate CVD risk (treatment not recommended)",
}


@dataclass(frozen=True)
class AgeBandThresholds:
    age_min: float
    age_max: float
    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError("risk cut points must be strictly increasing")


@dataclass(frozen=True)
class ColorThresholds:
    provenance: str
    bands: tuple[AgeBandThresholds, ...]

    def band_for(self, age: float) -> AgeBandThresholds:
        last = self.bands[-1]
        for band in self.bands:
            if band.age_min <= age < band.age_max:
                return band
        if last.age_min <= age <= last.age_max:
            return last
        raise ValueError(f"age {age:g} outside configured color-scale bands")


def load_color_thresholds(path: str | None = None) -> ColorThresholds:
    if path is None:
        path = str(resources.files("petalrisk.data") / "color_thresholds.toml")
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    bands = tuple(
        AgeBandThresholds(
            age_min=float(b["age_min"]),
            age_max=float(b["age_max"]),
            lower=float(b["lower"]),
            upper=float(b["upper"]),
        )
        for b in raw["band"]
    )
    return ColorThresholds(provenance=str(raw.get("provenance", "")), bands=bands)


def risk_color(risk: float, age: float, thresholds: ColorThresholds) -> RiskColorClass:
    """Three-class treatment color for a risk fraction at a given age."""
    band = thresholds.band_for(age)
    if risk < band.lower:
        return RiskColorClass.GREEN
    if risk < band.upper:
        return RiskColorClass.ORANGE
    return RiskColorClass.RED


@dataclass(frozen=True)
class RenderOptions:
    size: int = 600
    color_thresholds: ColorThresholds | None = None
    show_numeric_overlay: bool = False
    grid_levels: tuple[float, ...] = (0.0, 0.25, 0.5, 0.75, 1.0)
    samples_per_lobe: int = 128
    labels: Mapping[str, str] = field(default_factory=lambda: dict(FACTOR_LABELS))

    def __post_init__(self):
        if list(self.grid_levels) != sorted(self.grid_levels):
            raise ValueError("grid levels must be sorted")
        if any(not 0.0 <= g <= 1.0 for g in self.grid_levels):
            raise ValueError("grid levels must lie in [0, 1]")

    def thresholds(self) -> ColorThresholds:
        return self.color_thresholds or load_color_thresholds()


def _n(x: float) -> str:
    # fixed two-decimal coordinates keep output byte-stable
    return f"{x:.2f}"


def _level_id(level: float) -> str:
    return f"{level:g}"


def _factor_value_label(factor_id: str, value: float) -> str:
    if factor_id == "smoking":
        return "yes" if value >= 0.5 else "no"
    if factor_id == "nonhdl":
        return f"{value:.1f}"
    return f"{value:.0f}"


def _svg_open(size: int, title: str) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}" font-family="sans-serif">',
        f"<title>{escape(title)}</title>",
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="#ffffff"/>',
    ]


def _to_canvas(point: tuple[float, float], cx: float, cy: float, scale: float) -> tuple[float, float]:
    x, y = point
    return (cx + scale * x, cy - scale * y)


def _path_d(points: Sequence[tuple[float, float]], close: bool) -> str:
    pieces = [f"M {_n(points[0][0])},{_n(points[0][1])}"]
    pieces.extend(f"L {_n(x)},{_n(y)}" for x, y in points[1:])
    if close:
        pieces.append("Z")
    return " ".join(pieces)


def _boundary_points(
    petal: PetalPlacement, kappa: float, length: float, samples_per_lobe: int
) -> list[tuple[float, float]]:
    """Boundary polyline (no origin closure) for a petal drawn at a given length."""
    scaled = PetalPlacement(
        factor_id=petal.factor_id,
        eta=petal.eta,
        gamma=petal.gamma,
        start_angle=petal.start_angle,
        length=length,
    )
    outline = sample_outline(scaled, kappa, samples_per_lobe)
    return outline[1:-1] if len(outline) > 2 else [(0.0, 0.0)]


def _grid_levels_for(factor_id: str, levels: Sequence[float]) -> list[float]:
    if factor_id == "smoking":
        return [0.0, 1.0]
    return list(levels)


def render_flower_svg(
    layout: FlowerLayout,
    patient: PatientRecord,
    model: SurrogateModel,
    options: RenderOptions | None = None,
) -> str:
    """Flower chart for one patient: petals, grid, labels, legends.

    Every petal is one closed filled path; the whole flower carries the
    single treatment color of the surrogate risk. Grid lines are dotted
    petal outlines at the configured levels of the normalized factor value
    (only 0 and 1 for smoking), labeled with denormalized values.
    """
    options = options or RenderOptions()
    if model.has_negative_alphas:
        raise ValueError("cannot render a surrogate with negative coefficients")
    layout_factors = [p.factor_id for p in layout.petals]
    if sorted(layout_factors) != sorted(FACTOR_ORDER):
        raise ValueError(f"layout factors {layout_factors} do not match the surrogate factors")

    size = options.size
    cx, cy = size * 0.40, size * 0.54
    scale = size * 0.30
    thresholds = options.thresholds()

    z = normalize(patient)
    risk = predict(model, z)
    color_class = risk_color(risk, patient.age, thresholds)
    fill = _FILL[color_class]
    raw_values = {
        "age": patient.age,
        "sbp": patient.sbp,
        "smoking": 1.0 if patient.smoking else 0.0,
        "nonhdl": patient.non_hdl,
    }

    lines = _svg_open(size, "10-year cardiovascular risk flower chart")

    # petals
    lines.append('<g id="petals">')
    for petal in layout.petals:
        outline = sample_outline(petal, layout.kappa, options.samples_per_lobe)
        pts = [_to_canvas(p, cx, cy, scale) for p in outline]
        lines.append(
            f'<path id="petal-{petal.factor_id}" d="{_path_d(pts, close=True)}" '
            f'fill="{fill}" stroke="#31363b" stroke-width="1"/>'
        )
    lines.append("</g>")

    # dotted grid: petal-shaped outlines at each level of the normalized value
    lines.append('<g id="grid" fill="none" stroke="#6b7177" stroke-width="0.8" '
                 'stroke-dasharray="3 3">')
    for petal in layout.petals:
        for level in _grid_levels_for(petal.factor_id, options.grid_levels):
            pts = [
                _to_canvas(p, cx, cy, scale)
                for p in _boundary_points(
                    petal, layout.kappa, math.sqrt(level), options.samples_per_lobe
                )
            ]
            lines.append(
                f'<path id="grid-{petal.factor_id}-{_level_id(level)}" '
                f'd="{_path_d(pts, close=False)}"/>'
            )
    lines.append("</g>")

    # grid labels with denormalized factor values
    lines.append('<g id="grid-labels" font-size="9" fill="#44494e">')
    for petal in layout.petals:
        mid = petal.start_angle + petal.gamma / 2.0
        for level in _grid_levels_for(petal.factor_id, options.grid_levels):
            if level == 0.0:
                continue  # the zero line is the flower center
            radius = math.sqrt(level) * scale + 4.0
            x, y = cx + radius * math.sin(mid), cy - radius * math.cos(mid)
            value = denormalize_factor(petal.factor_id, level)
            lines.append(
                f'<text x="{_n(x)}" y="{_n(y)}" text-anchor="middle">'
                f"{escape(_factor_value_label(petal.factor_id, value))}</text>"
            )
    lines.append("</g>")

    # petal labels outside the grid: factor name and the patient's value
    lines.append('<g id="petal-labels" font-size="12" fill="#1c1f22">')
    for petal in layout.petals:
        mid = petal.start_angle + petal.gamma / 2.0
        radius = scale + 34.0
        x, y = cx + radius * math.sin(mid), cy - radius * math.cos(mid)
        unit = FACTOR_UNITS[petal.factor_id]
        value = _factor_value_label(petal.factor_id, raw_values[petal.factor_id])
        text = f"{options.labels[petal.factor_id]}: {value}{' ' + unit if unit else ''}"
        lines.append(
            f'<text x="{_n(x)}" y="{_n(y)}" text-anchor="middle">{escape(text)}</text>'
        )
    lines.append("</g>")

    # color legend
    lines.append('<g id="legend-color" font-size="10" fill="#1c1f22">')
    ly = 20.0
    lines.append(
        f'<text x="{_n(size - 250.0)}" y="{_n(ly)}" font-size="11" font-weight="bold">'
        "Risk color</text>"
    )
    for cls in (RiskColorClass.RED, RiskColorClass.ORANGE, RiskColorClass.GREEN):
        ly += 16.0
        lines.append(
            f'<rect x="{_n(size - 250.0)}" y="{_n(ly - 9.0)}" width="10" height="10" '
            f'fill="{_FILL[cls]}"/>'
        )
        lines.append(
            f'<text x="{_n(size - 235.0)}" y="{_n(ly)}">{escape(_LEGEND_TEXT[cls])}</text>'
        )
    lines.append("</g>")

    # lobe-risk legend: what one lobe is worth at each grid level
    alpha_norm = sum(model.alphas)
    lobe_full = alpha_norm / layout.total_lobes
    lines.append('<g id="legend-lobe" font-size="10" fill="#1c1f22">')
    ly = size - 86.0
    lines.append(
        f'<text x="{_n(size - 250.0)}" y="{_n(ly)}" font-size="11" font-weight="bold">'
        "Risk per lobe</text>"
    )
    for level in options.grid_levels:
        if level == 0.0:
            continue
        ly += 14.0
        lines.append(
            f'<text x="{_n(size - 250.0)}" y="{_n(ly)}">lobe filled to {_level_id(level)}: '
            f"{format_percent(level * lobe_full)}</text>"
        )
    lines.append("</g>")

    if options.show_numeric_overlay:
        lines.append('<g id="overlay-numeric" font-size="12" fill="#1c1f22">')
        lines.append(
            f'<text x="{_n(cx)}" y="{_n(size - 24.0)}" text-anchor="middle" '
            f'font-weight="bold">Total 10-year CVD risk: {format_percent(risk)}</text>'
        )
        parts = [
            f"{options.labels[f]}: {format_percent(c)}"
            for f, c in zip(FACTOR_ORDER, (a * v for a, v in zip(model.alphas, z.as_tuple())))
        ]
        lines.append(
            f'<text x="{_n(cx)}" y="{_n(size - 8.0)}" text-anchor="middle" font-size="10">'
            f"{escape(' | '.join(parts))}</text>"
        )
        lines.append("</g>")

    lines.append("</svg>")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Graphical score chart
# ---------------------------------------------------------------------------

def render_gsc_svg(
    bundle: Score2CoefficientBundle,
    region: RiskRegion,
    sex: Sex,
    spec: GscSpec | None = None,
    options: RenderOptions | None = None,
) -> str:
    """Score chart: cells per (smoking, age bin, SBP bin, non-HDL bin).

    Each cell is colored with the treatment color of the risk at its bin
    midpoints and prints that risk rounded to the nearest integer percent.
    """
    spec = spec or default_gsc_spec()
    options = options or RenderOptions()
    thresholds = options.thresholds()
    size = options.size

    n_age = len(spec.age_edges) - 1
    n_sbp = len(spec.sbp_edges) - 1
    n_nh = len(spec.nonhdl_edges) - 1

    left, gutter, right = 64.0, 56.0, 12.0
    top, bottom = 56.0, 44.0
    cell_w = (size - left - gutter - right) / (2 * n_nh)
    cell_h = (size - top - bottom) / (n_age * n_sbp)

    def cell_x(smoking: bool, nh_idx: int) -> float:
        base = left + (n_nh * cell_w + gutter if smoking else 0.0)
        return base + nh_idx * cell_w

    def cell_y(age_idx: int, sbp_idx: int) -> float:
        # oldest age band on top, highest SBP row on top within a band
        band = n_age - 1 - age_idx
        row = n_sbp - 1 - sbp_idx
        return top + (band * n_sbp + row) * cell_h

    lines = _svg_open(size, f"SCORE2 graphical score chart ({sex.value}, {region.value} risk region)")
    lines.append(
        f'<text x="{_n(size / 2)}" y="20" text-anchor="middle" font-size="13" '
        f'font-weight="bold">10-year CVD risk (%), {escape(sex.value)}, '
        f"{escape(region.value.replace('_', ' '))} risk region</text>"
    )
    for smoking, label in ((False, "Non-smoking"), (True, "Smoking")):
        x0 = cell_x(smoking, 0)
        lines.append(
            f'<text x="{_n(x0 + n_nh * cell_w / 2)}" y="40" text-anchor="middle" '
            f'font-size="11">{label}</text>'
        )

    lines.append('<g id="cells" font-size="9">')
    for smoking in (False, True):
        smoke_tag = "sm" if smoking else "ns"
        for a in range(n_age):
            for s in range(n_sbp):
                for n in range(n_nh):
                    age_mid = bin_midpoint(spec.age_edges, a)
                    sbp_mid = bin_midpoint(spec.sbp_edges, s)
                    nh_mid = bin_midpoint(spec.nonhdl_edges, n)
                    cell = gsc_cell_patient(sex, smoking, age_mid, sbp_mid, nh_mid)
                    risk = evaluate_score2(cell, bundle, region)
                    cls = risk_color(risk, age_mid, thresholds)
                    x, y = cell_x(smoking, n), cell_y(a, s)
                    lines.append(
                        f'<rect id="cell-{smoke_tag}-{a}-{s}-{n}" x="{_n(x)}" y="{_n(y)}" '
                        f'width="{_n(cell_w)}" height="{_n(cell_h)}" fill="{_FILL[cls]}" '
                        f'stroke="#ffffff" stroke-width="0.5"/>'
                    )
                    lines.append(
                        f'<text x="{_n(x + cell_w / 2)}" y="{_n(y + cell_h / 2 + 3)}" '
                        f'text-anchor="middle" fill="#ffffff">{percent_integer(risk)}</text>'
                    )
    lines.append("</g>")

    lines.append('<g id="axis-labels" font-size="9" fill="#1c1f22">')
    for a in range(n_age):
        y_band = cell_y(a, n_sbp - 1)  # top row of the band
        lines.append(
            f'<text x="{_n(left + n_nh * cell_w + gutter / 2)}" '
            f'y="{_n(y_band + n_sbp * cell_h / 2 + 3)}" text-anchor="middle">'
            f"{spec.age_edges[a]:.0f}-{spec.age_edges[a + 1]:.0f}</text>"
        )
    for s in range(n_sbp):
        for a in range(n_age):
            y = cell_y(a, s)
            lines.append(
                f'<text x="{_n(left - 6)}" y="{_n(y + cell_h / 2 + 3)}" text-anchor="end">'
                f"{spec.sbp_edges[s]:.0f}</text>"
            )
    for smoking in (False, True):
        for n in range(n_nh):
            x = cell_x(smoking, n)
            lines.append(
                f'<text x="{_n(x + cell_w / 2)}" y="{_n(size - bottom + 14)}" '
                f'text-anchor="middle">{bin_midpoint(spec.nonhdl_edges, n):.1f}</text>'
            )
    lines.append(
        f'<text x="{_n(size / 2)}" y="{_n(size - bottom + 30)}" text-anchor="middle" '
        'font-size="10">non-HDL cholesterol (mmol/L), columns; '
        "systolic blood pressure (mmHg), rows; age bands centre</text>"
    )
    lines.append("</g>")

    lines.append("</svg>")
    return "\n".join(lines) + "\n"
