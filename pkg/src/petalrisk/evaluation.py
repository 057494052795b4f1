"""Cohort handling and surrogate fidelity evaluation.

Ingests patient cohorts from CSV with the standard exclusion cascade
(prior CVD/diabetes, missing values, out-of-range values), generates
seeded synthetic cohorts as a stand-in for restricted clinical datasets,
and computes the fidelity metric battery (Spearman correlation, squared
Pearson R2, RMSE, MAE) comparing surrogate predictions against SCORE2.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from typing import IO, Mapping, Sequence, Union

import numpy as np

from .score2 import (
    FACTOR_RANGES,
    FactorRange,
    PatientRecord,
    RiskRegion,
    Score2CoefficientBundle,
    Sex,
    evaluate_score2,
    percent_integer,
    validate_patient,
)
from .surrogate import (
    GscSpec,
    SurrogateModel,
    default_gsc_spec,
    gsc_surrogate,
    normalize,
    predict,
)


class CohortError(ValueError):
    """Raised for malformed cohort files (bad header, unknown columns)."""


@dataclass(frozen=True)
class CohortRow:
    patient: PatientRecord
    prior_cvd: bool
    diabetes: bool
    source_id: str


@dataclass
class ExclusionReport:
    prior_cvd_or_diabetes: int = 0
    missing_value: int = 0
    out_of_range: int = 0
    included: int = 0

    @property
    def total(self) -> int:
        return self.prior_cvd_or_diabetes + self.missing_value + self.out_of_range + self.included

    def format_text(self) -> str:
        return "\n".join(
            [
                f"total rows:            {self.total}",
                f"excluded (CVD/diab.):  {self.prior_cvd_or_diabetes}",
                f"excluded (missing):    {self.missing_value}",
                f"excluded (range):      {self.out_of_range}",
                f"included:              {self.included}",
            ]
        )


CSV_COLUMNS = (
    "id",
    "sex",
    "age",
    "smoking",
    "sbp",
    "total_chol",
    "hdl_chol",
    "prior_cvd",
    "diabetes",
)

_TRUE = {"1", "true", "yes", "y"}
_FALSE = {"0", "false", "no", "n"}


def _parse_sex(text: str) -> Sex | None:
    t = text.strip().lower()
    if t in ("male", "m", "1"):
        return Sex.MALE
    if t in ("female", "f", "2"):
        return Sex.FEMALE
    return None


def _parse_bool(text: str) -> bool | None:
    t = text.strip().lower()
    if t in _TRUE:
        return True
    if t in _FALSE:
        return False
    return None


def _parse_float(text: str) -> float | None:
    try:
        value = float(text)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def ingest_csv(
    source: Union[str, os.PathLike, IO[str]],
    ranges: Mapping[str, FactorRange] = FACTOR_RANGES,
) -> tuple[list[CohortRow], ExclusionReport]:
    """Read a cohort CSV and apply the exclusion cascade.

    Filters run in order per row: prior CVD or diabetes first, then any
    missing/unparseable value, then out-of-range values; each excluded row
    counts under exactly one reason. The header must match the documented
    schema exactly (any column order, no extras).
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", newline="") as fh:
            text = fh.read()
    else:
        text = source.read()

    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise CohortError("cohort file is empty")
    header = [h.strip() for h in reader.fieldnames]
    unknown = set(header) - set(CSV_COLUMNS)
    missing_cols = set(CSV_COLUMNS) - set(header)
    if unknown:
        raise CohortError(f"unknown columns: {sorted(unknown)}")
    if missing_cols:
        raise CohortError(f"missing columns: {sorted(missing_cols)}")

    rows: list[CohortRow] = []
    report = ExclusionReport()
    for line_no, record in enumerate(reader, start=2):
        if None in record.values() or None in record:
            raise CohortError(f"row {line_no}: wrong number of fields")
        values = {k.strip(): (v or "").strip() for k, v in record.items()}

        prior_cvd = _parse_bool(values["prior_cvd"])
        diabetes = _parse_bool(values["diabetes"])
        if prior_cvd or diabetes:
            report.prior_cvd_or_diabetes += 1
            continue

        sex = _parse_sex(values["sex"])
        smoking = _parse_bool(values["smoking"])
        age = _parse_float(values["age"])
        sbp = _parse_float(values["sbp"])
        total_chol = _parse_float(values["total_chol"])
        hdl_chol = _parse_float(values["hdl_chol"])
        fields = (sex, smoking, age, sbp, total_chol, hdl_chol, prior_cvd, diabetes)
        if any(v is None for v in fields):
            report.missing_value += 1
            continue

        patient = PatientRecord(
            age=age, sex=sex, smoking=smoking, sbp=sbp, total_chol=total_chol, hdl_chol=hdl_chol
        )
        try:
            validate_patient(patient, ranges)
        except ValueError:
            report.out_of_range += 1
            continue

        report.included += 1
        rows.append(
            CohortRow(
                patient=patient,
                prior_cvd=bool(prior_cvd),
                diabetes=bool(diabetes),
                source_id=values["id"],
            )
        )
    return rows, report


def write_cohort_csv(rows: Sequence[CohortRow]) -> str:
    """Render cohort rows back to the documented CSV schema."""
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        p = row.patient
        writer.writerow(
            [
                row.source_id,
                p.sex.value,
                f"{p.age:.1f}",
                int(p.smoking),
                f"{p.sbp:.1f}",
                f"{p.total_chol:.2f}",
                f"{p.hdl_chol:.2f}",
                int(row.prior_cvd),
                int(row.diabetes),
            ]
        )
    return out.getvalue()


# ---------------------------------------------------------------------------
# Synthetic cohorts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FactorDistribution:
    mean: float
    sd: float


def _default_distributions() -> Mapping[str, FactorDistribution]:
    # truncated normals centred mid-range; the non-HDL spread is wide enough
    # that the tiny female lipid effect fits with a non-negative coefficient
    return {
        "age": FactorDistribution(mean=57.5, sd=7.0),
        "sbp": FactorDistribution(mean=140.0, sd=18.0),
        "non_hdl": FactorDistribution(mean=5.0, sd=1.8),
        "hdl_chol": FactorDistribution(mean=1.5, sd=0.35),
    }


@dataclass(frozen=True)
class SyntheticCohortConfig:
    size_per_sex: int = 1000
    seed: int = 7
    smoking_prevalence: float = 0.3
    distributions: Mapping[str, FactorDistribution] = field(default_factory=_default_distributions)

    def __post_init__(self):
        if self.size_per_sex <= 0:
            raise ValueError("size_per_sex must be positive")
        if not 0.0 <= self.smoking_prevalence <= 1.0:
            raise ValueError("smoking prevalence must lie in [0, 1]")
        for key in ("age", "sbp", "non_hdl", "hdl_chol"):
            dist = self.distributions.get(key)
            if dist is None:
                raise ValueError(f"missing distribution for {key}")
            rng = FACTOR_RANGES[key]
            if not rng.min <= dist.mean <= rng.max:
                raise ValueError(f"{key} mean {dist.mean:g} outside factor range")
            if dist.sd <= 0:
                raise ValueError(f"{key} sd must be positive")


def _truncated_normal(rng: np.random.Generator, dist: FactorDistribution, bounds: FactorRange) -> float:
    for _ in range(1000):
        value = rng.normal(dist.mean, dist.sd)
        if bounds.contains(value):
            return float(value)
    raise ValueError(f"distribution for {bounds.factor_id} rarely hits its range")


def generate_synthetic(config: SyntheticCohortConfig | None = None) -> list[CohortRow]:
    """Seed-deterministic synthetic cohort, every row within the factor ranges."""
    config = config or SyntheticCohortConfig()
    rng = np.random.default_rng(config.seed)
    rows: list[CohortRow] = []
    total_rng = FACTOR_RANGES["total_chol"]
    for sex in (Sex.MALE, Sex.FEMALE):
        tag = "m" if sex is Sex.MALE else "f"
        for i in range(config.size_per_sex):
            age = _truncated_normal(rng, config.distributions["age"], FACTOR_RANGES["age"])
            sbp = _truncated_normal(rng, config.distributions["sbp"], FACTOR_RANGES["sbp"])
            while True:
                nonhdl = _truncated_normal(
                    rng, config.distributions["non_hdl"], FACTOR_RANGES["non_hdl"]
                )
                hdl = _truncated_normal(
                    rng, config.distributions["hdl_chol"], FACTOR_RANGES["hdl_chol"]
                )
                if total_rng.contains(nonhdl + hdl):
                    break
            smoking = bool(rng.random() < config.smoking_prevalence)
            rows.append(
                CohortRow(
                    patient=PatientRecord(
                        age=age,
                        sex=sex,
                        smoking=smoking,
                        sbp=sbp,
                        total_chol=nonhdl + hdl,
                        hdl_chol=hdl,
                    ),
                    prior_cvd=False,
                    diabetes=False,
                    source_id=f"syn-{tag}-{i:04d}",
                )
            )
    return rows


# ---------------------------------------------------------------------------
# Fidelity metrics
# ---------------------------------------------------------------------------

def _average_ranks(values: np.ndarray) -> np.ndarray:
    """Ranks starting at 1; tied values share the mean of their rank block."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=float)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    dx = x - x.mean()
    dy = y - y.mean()
    denom = math.sqrt(float(dx @ dx) * float(dy @ dy))
    if denom == 0.0:
        raise ValueError("correlation undefined for a constant vector")
    return float(dx @ dy) / denom


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman rank correlation with average ranks for ties."""
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if xa.shape != ya.shape or xa.ndim != 1:
        raise ValueError("inputs must be equal-length vectors")
    if len(xa) < 2:
        raise ValueError("need at least two observations")
    return _pearson(_average_ranks(xa), _average_ranks(ya))


@dataclass(frozen=True)
class FidelityMetrics:
    spearman: float
    r2: float
    rmse: float
    mae: float


def fidelity_metrics(predictions: Sequence[float], references: Sequence[float]) -> FidelityMetrics:
    """Metric battery on risk fractions; R2 is the squared Pearson correlation."""
    pred = np.asarray(predictions, dtype=float)
    ref = np.asarray(references, dtype=float)
    if pred.shape != ref.shape or pred.ndim != 1 or len(pred) == 0:
        raise ValueError("predictions and references must be equal-length vectors")
    err = pred - ref
    return FidelityMetrics(
        spearman=spearman(pred, ref),
        r2=_pearson(pred, ref) ** 2,
        rmse=float(np.sqrt(np.mean(err**2))),
        mae=float(np.mean(np.abs(err))),
    )


@dataclass(frozen=True)
class FidelityRow:
    sex: Sex
    kind: str
    metrics: FidelityMetrics


@dataclass(frozen=True)
class FidelityReport:
    rows: tuple[FidelityRow, ...]

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out)
        writer.writerow(["sex", "surrogate", "spearman", "r2", "rmse", "mae"])
        for row in self.rows:
            m = row.metrics
            writer.writerow(
                [row.sex.value, row.kind]
                + [f"{v:.6f}" for v in (m.spearman, m.r2, m.rmse, m.mae)]
            )
        return out.getvalue()

    def format_table(self) -> str:
        lines = []
        for sex in (Sex.MALE, Sex.FEMALE):
            block = [r for r in self.rows if r.sex is sex]
            if not block:
                continue
            lines.append(f"{sex.value.capitalize()} surrogate fidelity vs SCORE2")
            lines.append(f"{'surrogate':<22}{'Sp.Corr':>9}{'R2':>9}{'RMSE':>9}{'MAE':>9}")
            for row in block:
                m = row.metrics
                lines.append(
                    f"{row.kind:<22}{m.spearman:>9.3f}{m.r2:>9.3f}{m.rmse:>9.3f}{m.mae:>9.3f}"
                )
            lines.append("")
        return "\n".join(lines)


#: Report row order mirrors the published comparison: score chart first,
#: then the fitted linear surrogate, then its lobe-quantized counterpart.
_KIND_ORDER = ("gsc", "gsc_rounded", "linear", "quantized")


def compare_surrogates(
    cohort: Sequence[CohortRow],
    bundle: Score2CoefficientBundle,
    region: RiskRegion,
    models: Mapping[str, object],
) -> FidelityReport:
    """Fidelity of each surrogate against SCORE2, stratified by sex.

    ``models`` maps kind -> model: ``"linear"`` and ``"quantized"`` take a
    per-sex mapping of :class:`SurrogateModel`; ``"gsc"`` takes a
    :class:`GscSpec` (or None for the default) and reports both unrounded
    and cell-rounded variants, since charts print integer percents.
    """
    rows: list[FidelityRow] = []
    for sex in (Sex.MALE, Sex.FEMALE):
        patients = [row.patient for row in cohort if row.patient.sex is sex]
        if not patients:
            raise ValueError(f"cohort has no rows for sex {sex.value}")
        reference = [evaluate_score2(p, bundle, region) for p in patients]
        for kind in _KIND_ORDER:
            if kind in ("gsc", "gsc_rounded"):
                if "gsc" not in models:
                    continue
                spec: GscSpec = models["gsc"] or default_gsc_spec()
                cells = [gsc_surrogate(p, bundle, region, spec) for p in patients]
                if kind == "gsc_rounded":
                    preds = [percent_integer(c) / 100.0 for c in cells]
                else:
                    preds = cells
            else:
                if kind not in models:
                    continue
                model: SurrogateModel = models[kind][sex]
                preds = [predict(model, normalize(p)) for p in patients]
            rows.append(FidelityRow(sex=sex, kind=kind, metrics=fidelity_metrics(preds, reference)))
    return FidelityReport(rows=tuple(rows))
