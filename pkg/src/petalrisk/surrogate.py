"""Interpretable linear surrogates of the SCORE2 model.

A surrogate is a no-intercept linear form over four min-max normalized
factors (age, systolic blood pressure, smoking, non-HDL cholesterol). Each
coefficient reads directly as the risk-fraction increase when its factor
moves from the best to the worst value of its clinical range. This module
also emulates the classic graphical-score-chart surrogate (risk at bin
midpoints) and generates guideline-based what-if treatment scenarios.
"""

from __future__ import annotations

import io
import os
import sys
from dataclasses import dataclass, replace
from enum import Enum
from importlib import resources
from typing import IO, Mapping, Sequence, Union

import numpy as np

from .score2 import (
    CANONICAL_HDL,
    FACTOR_RANGES,
    CoefficientFileError,
    FactorRange,
    PatientRecord,
    RiskRegion,
    Score2CoefficientBundle,
    Sex,
    evaluate_score2,
    non_hdl,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

#: Factor order used everywhere a surrogate is treated as a vector.
FACTOR_ORDER = ("age", "sbp", "smoking", "nonhdl")

FACTOR_LABELS = {
    "age": "Age",
    "sbp": "Systolic blood pressure",
    "smoking": "Smoking",
    "nonhdl": "Non-HDL cholesterol",
}

FACTOR_UNITS = {"age": "years", "sbp": "mmHg", "smoking": "", "nonhdl": "mmol/L"}


@dataclass(frozen=True)
class NormalizedFactors:
    age: float
    sbp: float
    smoking: float
    nonhdl: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.age, self.sbp, self.smoking, self.nonhdl)

    def __post_init__(self):
        for name, value in zip(FACTOR_ORDER, self.as_tuple()):
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"normalized {name}={value:g} outside [0, 1]")
        if self.smoking not in (0.0, 1.0):
            raise ValueError(f"normalized smoking must be 0 or 1, got {self.smoking:g}")


@dataclass(frozen=True)
class SurrogateModel:
    sex: Sex
    alphas: tuple[float, float, float, float]  # FACTOR_ORDER
    provenance: str  # fitted | quantized | transcribed

    def __post_init__(self):
        if len(self.alphas) != 4:
            raise ValueError("surrogate needs exactly four coefficients")
        if self.provenance not in ("fitted", "quantized", "transcribed"):
            raise ValueError(f"unknown surrogate provenance {self.provenance!r}")

    @property
    def has_negative_alphas(self) -> bool:
        return any(a < 0 for a in self.alphas)


def normalize(
    patient: PatientRecord, ranges: Mapping[str, FactorRange] = FACTOR_RANGES
) -> NormalizedFactors:
    """Min-max normalize a validated patient: z = (x - min) / (max - min)."""
    def scale(field: str, value: float) -> float:
        rng = ranges[field]
        return (value - rng.min) / rng.span

    return NormalizedFactors(
        age=scale("age", patient.age),
        sbp=scale("sbp", patient.sbp),
        smoking=1.0 if patient.smoking else 0.0,
        nonhdl=scale("non_hdl", non_hdl(patient.total_chol, patient.hdl_chol)),
    )


def denormalize(
    z: NormalizedFactors, ranges: Mapping[str, FactorRange] = FACTOR_RANGES
) -> dict[str, float]:
    """Invert :func:`normalize`; smoking maps back to its 0/1 flag value."""
    def unscale(field: str, value: float) -> float:
        rng = ranges[field]
        return rng.min + value * rng.span

    return {
        "age": unscale("age", z.age),
        "sbp": unscale("sbp", z.sbp),
        "smoking": z.smoking,
        "nonhdl": unscale("non_hdl", z.nonhdl),
    }


def denormalize_factor(
    factor_id: str, level: float, ranges: Mapping[str, FactorRange] = FACTOR_RANGES
) -> float:
    """Raw value of one factor at a normalized level (grid labeling)."""
    if factor_id == "smoking":
        return level
    rng = ranges["non_hdl" if factor_id == "nonhdl" else factor_id]
    return rng.min + level * rng.span


# ---------------------------------------------------------------------------
# Fitting and evaluation
# ---------------------------------------------------------------------------

def fit_no_intercept(
    design: Union[Sequence[NormalizedFactors], np.ndarray],
    targets: Sequence[float],
    sex: Sex,
    provenance: str = "fitted",
) -> SurrogateModel:
    """Least-squares fit of the no-intercept linear surrogate.

    Solves the normal equations (Z'Z) a = Z'y with a direct deterministic
    solver; the design must have at least four rows and full column rank.
    """
    if len(design) and isinstance(design[0], NormalizedFactors):
        z = np.array([row.as_tuple() for row in design], dtype=float)
    else:
        z = np.asarray(design, dtype=float)
    y = np.asarray(targets, dtype=float)
    if z.ndim != 2 or z.shape[1] != 4:
        raise ValueError(f"design must be n x 4, got shape {z.shape}")
    if z.shape[0] < 4:
        raise ValueError(f"need at least 4 rows to fit, got {z.shape[0]}")
    if y.shape != (z.shape[0],):
        raise ValueError("targets length must match design rows")
    if np.linalg.matrix_rank(z) < 4:
        raise ValueError("design matrix is rank deficient")
    gram = z.T @ z
    alphas = np.linalg.solve(gram, z.T @ y)
    return SurrogateModel(sex=sex, alphas=tuple(float(a) for a in alphas), provenance=provenance)


def quantized_surrogate(model: SurrogateModel, total_lobes: int) -> SurrogateModel:
    """Coefficients as actually encoded by a flower with ``total_lobes`` lobes.

    Each coefficient becomes its integer-lobe share of the coefficient sum,
    so the returned model is exactly what the chart's petal angles express.
    """
    from .geometry import hamilton_apportion, quantized_coefficients

    if model.has_negative_alphas:
        bad = [f for f, a in zip(FACTOR_ORDER, model.alphas) if a < 0]
        raise ValueError(
            f"cannot quantize a surrogate with negative coefficients ({', '.join(bad)}); "
            "petal angles require non-negative weights"
        )
    allocation = hamilton_apportion(model.alphas, total_lobes)
    return SurrogateModel(
        sex=model.sex,
        alphas=quantized_coefficients(model.alphas, allocation),
        provenance="quantized",
    )


def contributions(model: SurrogateModel, z: NormalizedFactors) -> tuple[float, float, float, float]:
    """Per-factor risk contributions alpha_i * z_i (they sum to the prediction)."""
    return tuple(a * v for a, v in zip(model.alphas, z.as_tuple()))


def predict(model: SurrogateModel, z: NormalizedFactors) -> float:
    """Surrogate risk fraction: the dot product alpha . z."""
    return sum(contributions(model, z))


# ---------------------------------------------------------------------------
# Graphical score chart emulation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GscSpec:
    """Bin edges of the graphical score chart; bins tile the factor ranges."""
    age_edges: tuple[float, ...]
    sbp_edges: tuple[float, ...]
    nonhdl_edges: tuple[float, ...]

    def __post_init__(self):
        for name, edges, rng, width in (
            ("age", self.age_edges, FACTOR_RANGES["age"], 5.0),
            ("sbp", self.sbp_edges, FACTOR_RANGES["sbp"], 20.0),
            ("nonhdl", self.nonhdl_edges, FACTOR_RANGES["non_hdl"], 1.0),
        ):
            if edges[0] != rng.min or edges[-1] != rng.max:
                raise ValueError(f"{name} bins must tile [{rng.min:g}, {rng.max:g}]")
            steps = [b - a for a, b in zip(edges, edges[1:])]
            if any(abs(s - width) > 1e-9 for s in steps):
                raise ValueError(f"{name} bins must be {width:g} wide")


def default_gsc_spec() -> GscSpec:
    return GscSpec(
        age_edges=(45.0, 50.0, 55.0, 60.0, 65.0, 70.0),
        sbp_edges=(100.0, 120.0, 140.0, 160.0, 180.0),
        nonhdl_edges=(3.0, 4.0, 5.0, 6.0, 7.0),
    )


def bin_index(edges: Sequence[float], value: float) -> int:
    """Right-open bins over the edge list; the last bin includes its upper edge."""
    if not edges[0] <= value <= edges[-1]:
        raise OutOfTilingError(value, edges)
    for i in range(len(edges) - 2):
        if value < edges[i + 1]:
            return i
    return len(edges) - 2


class OutOfTilingError(ValueError):
    def __init__(self, value: float, edges: Sequence[float]):
        super().__init__(f"value {value:g} outside bin tiling [{edges[0]:g}, {edges[-1]:g}]")


def bin_midpoint(edges: Sequence[float], index: int) -> float:
    return (edges[index] + edges[index + 1]) / 2.0


def gsc_cell_patient(
    sex: Sex, smoking: bool, age_mid: float, sbp_mid: float, nonhdl_mid: float
) -> PatientRecord:
    """Representative patient at a chart cell's midpoints.

    Non-HDL is split into (total, HDL) with the canonical HDL value so the
    cell risk does not depend on how an individual's cholesterol divides.
    """
    return PatientRecord(
        age=age_mid,
        sex=sex,
        smoking=smoking,
        sbp=sbp_mid,
        total_chol=nonhdl_mid + CANONICAL_HDL,
        hdl_chol=CANONICAL_HDL,
    )


def gsc_surrogate(
    patient: PatientRecord,
    bundle: Score2CoefficientBundle,
    region: RiskRegion,
    spec: GscSpec | None = None,
) -> float:
    """Score-chart surrogate: SCORE2 risk at the patient's cell midpoints."""
    spec = spec or default_gsc_spec()
    age_mid = bin_midpoint(spec.age_edges, bin_index(spec.age_edges, patient.age))
    sbp_mid = bin_midpoint(spec.sbp_edges, bin_index(spec.sbp_edges, patient.sbp))
    nonhdl_mid = bin_midpoint(
        spec.nonhdl_edges, bin_index(spec.nonhdl_edges, patient.non_hdl)
    )
    cell = gsc_cell_patient(patient.sex, patient.smoking, age_mid, sbp_mid, nonhdl_mid)
    return evaluate_score2(cell, bundle, region)


# ---------------------------------------------------------------------------
# What-if treatment-goal scenarios
# ---------------------------------------------------------------------------

class ScenarioKind(str, Enum):
    SBP_TO_130 = "sbp_to_130"
    SBP_TO_110 = "sbp_to_110"
    STOP_SMOKING = "stop_smoking"
    NONHDL_TO_3_4 = "nonhdl_to_3_4"


_SCENARIO_TEXT = {
    ScenarioKind.SBP_TO_130: "Lower systolic blood pressure to 130 mmHg",
    ScenarioKind.SBP_TO_110: "Lower systolic blood pressure to 110 mmHg",
    ScenarioKind.STOP_SMOKING: "Stop smoking",
    ScenarioKind.NONHDL_TO_3_4: "Reduce non-HDL cholesterol to 3.4 mmol/L",
}


@dataclass(frozen=True)
class WhatIfScenario:
    kind: ScenarioKind
    description: str
    modified_patient: PatientRecord


def _scenario_applies(kind: ScenarioKind, patient: PatientRecord) -> bool:
    if kind is ScenarioKind.SBP_TO_130:
        return patient.sbp >= 140.0
    if kind is ScenarioKind.SBP_TO_110:
        return 120.0 <= patient.sbp < 140.0
    if kind is ScenarioKind.STOP_SMOKING:
        return patient.smoking
    return patient.non_hdl > 4.0


def applicable_scenarios(patient: PatientRecord) -> list[WhatIfScenario]:
    """Treatment-goal scenarios that apply to a patient, in guideline order.

    Blood pressure first (130 mmHg target when SBP >= 140, else 110 mmHg
    when 120 <= SBP < 140), then smoking cessation, then the non-HDL target
    of 3.4 mmol/L when currently above 4. Each scenario changes exactly one
    input; the non-HDL goal moves total cholesterol and keeps HDL.
    """
    scenarios: list[WhatIfScenario] = []

    if _scenario_applies(ScenarioKind.SBP_TO_130, patient):
        kind = ScenarioKind.SBP_TO_130
        scenarios.append(
            WhatIfScenario(kind, _SCENARIO_TEXT[kind], replace(patient, sbp=130.0))
        )
    elif _scenario_applies(ScenarioKind.SBP_TO_110, patient):
        kind = ScenarioKind.SBP_TO_110
        scenarios.append(
            WhatIfScenario(kind, _SCENARIO_TEXT[kind], replace(patient, sbp=110.0))
        )

    if _scenario_applies(ScenarioKind.STOP_SMOKING, patient):
        kind = ScenarioKind.STOP_SMOKING
        scenarios.append(
            WhatIfScenario(kind, _SCENARIO_TEXT[kind], replace(patient, smoking=False))
        )

    if _scenario_applies(ScenarioKind.NONHDL_TO_3_4, patient):
        kind = ScenarioKind.NONHDL_TO_3_4
        scenarios.append(
            WhatIfScenario(
                kind,
                _SCENARIO_TEXT[kind],
                replace(patient, total_chol=patient.hdl_chol + 3.4),
            )
        )
    return scenarios


@dataclass(frozen=True)
class RiskChange:
    before: float
    after: float

    @property
    def delta(self) -> float:
        return self.before - self.after


def risk_reduction(
    patient: PatientRecord,
    scenario: WhatIfScenario,
    model: Union[SurrogateModel, Score2CoefficientBundle],
    region: RiskRegion = RiskRegion.MODERATE,
    ranges: Mapping[str, FactorRange] = FACTOR_RANGES,
) -> RiskChange:
    """Risk before/after a scenario through a surrogate or the SCORE2 bundle."""
    if not _scenario_applies(scenario.kind, patient):
        raise ValueError(f"scenario {scenario.kind.value} does not apply to this patient")
    if isinstance(model, SurrogateModel):
        before = predict(model, normalize(patient, ranges))
        after = predict(model, normalize(scenario.modified_patient, ranges))
    else:
        before = evaluate_score2(patient, model, region)
        after = evaluate_score2(scenario.modified_patient, model, region)
    return RiskChange(before=before, after=after)


# ---------------------------------------------------------------------------
# Model file round-trip (same key-value format as coefficient bundles)
# ---------------------------------------------------------------------------

def load_surrogate_models(source: Union[str, os.PathLike, IO[bytes]]) -> dict[Sex, SurrogateModel]:
    """Load per-sex surrogate models from a ``[surrogate.<sex>]`` config file."""
    try:
        if isinstance(source, (str, os.PathLike)):
            with open(source, "rb") as fh:
                raw = tomllib.load(fh)
        else:
            data = source.read()
            if isinstance(data, str):
                data = data.encode("utf-8")
            raw = tomllib.load(io.BytesIO(data))
    except tomllib.TOMLDecodeError as exc:
        raise CoefficientFileError(f"cannot parse surrogate file: {exc}") from exc

    provenance = raw.get("provenance")
    if not isinstance(provenance, str) or not provenance.strip():
        raise CoefficientFileError("surrogate file must carry a provenance string")
    block = raw.get("surrogate")
    if not isinstance(block, dict) or not block:
        raise CoefficientFileError("surrogate file must define [surrogate.<sex>] sections")

    models: dict[Sex, SurrogateModel] = {}
    for sex in Sex:
        section = block.get(sex.value)
        if section is None:
            continue
        try:
            models[sex] = SurrogateModel(
                sex=sex,
                alphas=tuple(float(section[f"alpha_{f}"]) for f in FACTOR_ORDER),
                provenance=str(section.get("provenance", "transcribed")),
            )
        except KeyError as exc:
            raise CoefficientFileError(
                f"[surrogate.{sex.value}] missing coefficient {exc}"
            ) from None
    if not models:
        raise CoefficientFileError("surrogate file defines no models")
    return models


def dump_surrogate_models(models: Mapping[Sex, SurrogateModel], provenance: str) -> str:
    """Serialize models to the documented key-value config format."""
    lines = [f'provenance = "{provenance}"', ""]
    for sex in Sex:
        if sex not in models:
            continue
        model = models[sex]
        lines.append(f"[surrogate.{sex.value}]")
        lines.append(f'provenance = "{model.provenance}"')
        for factor, alpha in zip(FACTOR_ORDER, model.alphas):
            lines.append(f"alpha_{factor} = {alpha!r}")
        lines.append("")
    return "\n".join(lines)


def default_surrogate_path() -> str:
    return str(resources.files("petalrisk.data") / "surrogate_models.toml")


def load_default_surrogates() -> dict[Sex, SurrogateModel]:
    return load_surrogate_models(default_surrogate_path())
