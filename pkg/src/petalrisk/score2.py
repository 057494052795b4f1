"""SCORE2 10-year cardiovascular risk evaluation.

Implements the published SCORE2 risk equation

    risk = 1 - exp(-exp(s1 + s2 * ln(-ln(lambda ^ exp(LP)))))

where LP = sum(beta * (x - x_cen)) over transformed risk-factor terms,
lambda is the sex-specific baseline survival and s1/s2 are region- and
sex-specific recalibration scales. Coefficient values are never hardcoded
here; they ship in a versioned config file (see ``data/``) and are loaded
through :func:`load_coefficient_bundle`.

Valid input ranges follow the clinical score-chart envelope: age 45-70,
SBP 100-180 mmHg, total cholesterol 3-9, HDL 0.7-2.5, non-HDL 3-7 mmol/L.
Out-of-range inputs are rejected unless clamping is requested explicitly.
"""

from __future__ import annotations

import io
import math
import os
import sys
from dataclasses import dataclass, replace
from enum import Enum
from importlib import resources
from typing import IO, Callable, Mapping, Union

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class Sex(str, Enum):
    MALE = "male"
    FEMALE = "female"


class RiskRegion(str, Enum):
    LOW = "low"
    MODERATE = "moderate"
    HIGH = "high"
    VERY_HIGH = "very_high"


class CoefficientFileError(ValueError):
    """Raised when a coefficient file cannot be parsed or violates invariants."""


class OutOfRangeError(ValueError):
    """Raised when a patient value falls outside its validated clinical range."""

    def __init__(self, field: str, message: str):
        super().__init__(message)
        self.field = field


@dataclass(frozen=True)
class FactorRange:
    factor_id: str
    min: float
    max: float

    def __post_init__(self):
        if not self.min < self.max:
            raise ValueError(f"degenerate range for {self.factor_id}: [{self.min}, {self.max}]")

    def contains(self, value: float) -> bool:
        return self.min <= value <= self.max

    def clamp(self, value: float) -> float:
        return min(max(value, self.min), self.max)

    @property
    def span(self) -> float:
        return self.max - self.min


#: Clinical validity envelope of the score-chart factors.
FACTOR_RANGES: Mapping[str, FactorRange] = {
    "age": FactorRange("age", 45.0, 70.0),
    "sbp": FactorRange("sbp", 100.0, 180.0),
    "non_hdl": FactorRange("non_hdl", 3.0, 7.0),
    "total_chol": FactorRange("total_chol", 3.0, 9.0),
    "hdl_chol": FactorRange("hdl_chol", 0.7, 2.5),
}

#: Canonical split of a non-HDL target into (total, HDL) cholesterol when
#: only non-HDL is known: HDL fixed at a typical healthy 1.5 mmol/L. Used
#: for score-chart cell midpoints and range-anchor checks.
CANONICAL_HDL = 1.5


@dataclass(frozen=True)
class PatientRecord:
    age: float
    sex: Sex
    smoking: bool
    sbp: float
    total_chol: float
    hdl_chol: float

    @property
    def non_hdl(self) -> float:
        return non_hdl(self.total_chol, self.hdl_chol)


def non_hdl(total_chol: float, hdl_chol: float) -> float:
    """Non-HDL cholesterol: total minus HDL. Must be strictly positive."""
    result = total_chol - hdl_chol
    if result <= 0:
        raise OutOfRangeError(
            "hdl_chol",
            f"HDL cholesterol ({hdl_chol}) must be below total cholesterol ({total_chol})",
        )
    return result


def validate_patient(
    patient: PatientRecord,
    ranges: Mapping[str, FactorRange] = FACTOR_RANGES,
    clamp: bool = False,
) -> tuple[PatientRecord, list[str]]:
    """Check a patient against the clinical ranges.

    Returns ``(patient, [])`` when valid. With ``clamp=True`` out-of-range
    values are pulled to their nearest bound and the list names every
    adjusted field; otherwise the first violation raises
    :class:`OutOfRangeError`. The derived non-HDL value must also sit inside
    its range so downstream normalization stays in [0, 1].
    """
    clamped: list[str] = []

    def check(field: str, value: float) -> float:
        rng = ranges[field]
        if rng.contains(value):
            return value
        if not clamp:
            raise OutOfRangeError(
                field, f"{field}={value:g} outside valid range [{rng.min:g}, {rng.max:g}]"
            )
        clamped.append(field)
        return rng.clamp(value)

    age = check("age", patient.age)
    sbp = check("sbp", patient.sbp)
    hdl = check("hdl_chol", patient.hdl_chol)
    total = check("total_chol", patient.total_chol)

    nh_rng = ranges["non_hdl"]
    nh = total - hdl
    if not nh_rng.contains(nh):
        if not clamp:
            raise OutOfRangeError(
                "total_chol",
                f"non-HDL cholesterol {nh:g} outside valid range "
                f"[{nh_rng.min:g}, {nh_rng.max:g}]",
            )
        # keep HDL, move total so that non-HDL lands in range and total stays valid
        total = min(max(total, hdl + nh_rng.min), min(ranges["total_chol"].max, hdl + nh_rng.max))
        clamped.append("total_chol")

    fixed = replace(patient, age=age, sbp=sbp, total_chol=total, hdl_chol=hdl)
    return fixed, clamped


# ---------------------------------------------------------------------------
# Coefficient bundle
# ---------------------------------------------------------------------------

#: Transformed-scale value of each base model term, keyed by the term names
#: used in coefficient files. Divisors match the published variable scalings.
_BASE_TERMS: Mapping[str, Callable[[PatientRecord], float]] = {
    "cage": lambda p: p.age / 5.0,
    "smoking": lambda p: 1.0 if p.smoking else 0.0,
    "csbp": lambda p: p.sbp / 20.0,
    "ctchol": lambda p: p.total_chol,
    "chdl": lambda p: p.hdl_chol / 0.5,
}

_INTERACTION_SUFFIX = "_x_age"


@dataclass(frozen=True)
class SexRegionCoefficients:
    s1: float
    s2: float
    baseline_survival: float
    betas: Mapping[str, float]
    centers: Mapping[str, float]


@dataclass(frozen=True)
class Score2CoefficientBundle:
    provenance: str
    tables: Mapping[tuple[Sex, RiskRegion], SexRegionCoefficients]

    def covers(self, sex: Sex, region: RiskRegion) -> bool:
        return (sex, region) in self.tables

    def coefficients(self, sex: Sex, region: RiskRegion) -> SexRegionCoefficients:
        try:
            return self.tables[(sex, region)]
        except KeyError:
            raise CoefficientFileError(
                f"bundle has no coefficients for ({sex.value}, {region.value})"
            ) from None

    @property
    def regions(self) -> list[RiskRegion]:
        return sorted({region for _, region in self.tables}, key=lambda r: r.value)


def _validate_section(name: str, section: SexRegionCoefficients) -> None:
    if not 0.0 < section.baseline_survival < 1.0:
        raise CoefficientFileError(
            f"[{name}] lambda={section.baseline_survival} outside (0, 1)"
        )
    for term in section.betas:
        if term not in section.centers:
            raise CoefficientFileError(f"[{name}] term {term!r} has a beta but no center")
        base = term[: -len(_INTERACTION_SUFFIX)] if term.endswith(_INTERACTION_SUFFIX) else term
        if base not in _BASE_TERMS:
            raise CoefficientFileError(f"[{name}] unknown model term {term!r}")
        if term.endswith(_INTERACTION_SUFFIX) and base not in section.betas:
            raise CoefficientFileError(
                f"[{name}] interaction {term!r} requires base term {base!r}"
            )


def load_coefficient_bundle(source: Union[str, os.PathLike, IO[bytes]]) -> Score2CoefficientBundle:
    """Parse and validate a coefficient file (documented key-value format).

    ``source`` may be a filesystem path or a binary file object. Sections are
    named ``[<sex>.<region>]`` and carry ``s1``, ``s2``, ``lambda`` plus
    ``betas`` and ``centers`` tables keyed by term name. A top-level
    ``provenance`` string is mandatory.
    """
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
        raise CoefficientFileError(f"cannot parse coefficient file: {exc}") from exc

    provenance = raw.get("provenance")
    if not isinstance(provenance, str) or not provenance.strip():
        raise CoefficientFileError("coefficient file must carry a provenance string")

    tables: dict[tuple[Sex, RiskRegion], SexRegionCoefficients] = {}
    for sex in Sex:
        sex_block = raw.get(sex.value)
        if sex_block is None:
            continue
        if not isinstance(sex_block, dict):
            raise CoefficientFileError(f"section [{sex.value}] must be a table")
        for region in RiskRegion:
            block = sex_block.get(region.value)
            if block is None:
                continue
            name = f"{sex.value}.{region.value}"
            try:
                section = SexRegionCoefficients(
                    s1=float(block["s1"]),
                    s2=float(block["s2"]),
                    baseline_survival=float(block["lambda"]),
                    betas={k: float(v) for k, v in block["betas"].items()},
                    centers={k: float(v) for k, v in block["centers"].items()},
                )
            except KeyError as exc:
                raise CoefficientFileError(f"[{name}] missing required key {exc}") from None
            _validate_section(name, section)
            tables[(sex, region)] = section

    for sex in Sex:
        if (sex, RiskRegion.MODERATE) not in tables:
            raise CoefficientFileError(
                f"bundle must cover the moderate region for {sex.value}"
            )
    return Score2CoefficientBundle(provenance=provenance, tables=tables)


def default_coefficient_path() -> str:
    return str(resources.files("petalrisk.data") / "score2_coefficients.toml")


def load_default_bundle() -> Score2CoefficientBundle:
    return load_coefficient_bundle(default_coefficient_path())


# ---------------------------------------------------------------------------
# Model evaluation
# ---------------------------------------------------------------------------

def _term_value(term: str, patient: PatientRecord, centers: Mapping[str, float]) -> float:
    """Transformed (uncentered) value of a model term for one patient."""
    if term.endswith(_INTERACTION_SUFFIX):
        base = term[: -len(_INTERACTION_SUFFIX)]
        base_fn = _BASE_TERMS.get(base)
        if base_fn is None or base not in centers or "cage" not in centers:
            raise CoefficientFileError(f"cannot evaluate interaction term {term!r}")
        return (base_fn(patient) - centers[base]) * (
            _BASE_TERMS["cage"](patient) - centers["cage"]
        )
    base_fn = _BASE_TERMS.get(term)
    if base_fn is None:
        raise CoefficientFileError(f"unknown model term {term!r}")
    return base_fn(patient)


def linear_predictor(
    patient: PatientRecord, bundle: Score2CoefficientBundle, region: RiskRegion
) -> float:
    """Centered linear predictor sum(beta * (x - x_cen)) for one patient."""
    coefs = bundle.coefficients(patient.sex, region)
    lp = 0.0
    for term, beta in coefs.betas.items():
        lp += beta * (_term_value(term, patient, coefs.centers) - coefs.centers[term])
    return lp


def evaluate_score2(
    patient: PatientRecord, bundle: Score2CoefficientBundle, region: RiskRegion
) -> float:
    """10-year CVD risk as a fraction in (0, 1)."""
    coefs = bundle.coefficients(patient.sex, region)
    lp = linear_predictor(patient, bundle, region)
    survival = coefs.baseline_survival ** math.exp(lp)
    return 1.0 - math.exp(-math.exp(coefs.s1 + coefs.s2 * math.log(-math.log(survival))))


#: CVD mortality (deaths per 100 000) cut points between risk regions.
#: Bands are right-open: [0, 100) low, [100, 150) moderate, [150, 300) high,
#: [300, inf) very high. The 100/150 cuts bound the moderate band used for
#: US-style cohorts; 300 separates high from very high per the published
#: region definitions.
_REGION_CUTS = ((100.0, RiskRegion.LOW), (150.0, RiskRegion.MODERATE), (300.0, RiskRegion.HIGH))


def region_from_mortality(rate: float) -> RiskRegion:
    """Map an age-standardized CVD mortality rate to its risk region."""
    if rate < 0:
        raise ValueError(f"mortality rate must be non-negative, got {rate}")
    for cut, region in _REGION_CUTS:
        if rate < cut:
            return region
    return RiskRegion.VERY_HIGH


def format_percent(risk: float, decimals: int = 1) -> str:
    """Presentation-layer percent string, e.g. 0.0132 -> '1.3%'."""
    return f"{100.0 * risk:.{decimals}f}%"


def percent_integer(risk: float) -> int:
    """Nearest integer percent, half away from zero (score-chart cells)."""
    return int(math.floor(100.0 * risk + 0.5))
