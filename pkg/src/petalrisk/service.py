"""Stateless HTTP+JSON API for risk scoring, explanation geometry and what-if.

Endpoints: ``GET /health``, ``GET /models``, ``POST /risk``,
``POST /explain``, ``POST /whatif``. Patient payload fields mirror the
cohort CSV schema minus the exclusion flags; optional fields select the
risk region, clamping, and rendering extras. Responses carry risk values
as exact fractions plus display-rounded percent strings (clients must not
re-round). Errors use ``{"error": {"code", "field?", "message"}}`` with
400 for malformed payloads and 422 for out-of-range values.

All model state is loaded once at startup and never mutated, so request
handling is safe under unrestricted concurrency.
"""

from __future__ import annotations

from typing import Literal, Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .geometry import build_flower
from .render import ColorThresholds, RenderOptions, load_color_thresholds, render_flower_svg, risk_color
from .score2 import (
    OutOfRangeError,
    PatientRecord,
    RiskRegion,
    Score2CoefficientBundle,
    Sex,
    evaluate_score2,
    format_percent,
    load_default_bundle,
    validate_patient,
)
from .surrogate import (
    FACTOR_ORDER,
    NormalizedFactors,
    SurrogateModel,
    applicable_scenarios,
    contributions,
    load_default_surrogates,
    normalize,
    predict,
    quantized_surrogate,
)

#: Lobe counts per sex; the female total is raised by one so the smallest
#: coefficient keeps a visible lobe instead of apportioning to zero.
DEFAULT_LOBES = {Sex.MALE: 10, Sex.FEMALE: 11}
DEFAULT_KAPPA = 0.5


class PatientPayload(BaseModel):
    id: Optional[str] = None
    sex: Literal["male", "female"]
    age: float
    smoking: bool
    sbp: float
    total_chol: float
    hdl_chol: float
    region: Literal["low", "moderate", "high", "very_high"] = "moderate"
    clamp: bool = False
    include_svg: bool = False
    include_outline: bool = False
    numeric_overlay: bool = False

    def record(self) -> PatientRecord:
        return PatientRecord(
            age=self.age,
            sex=Sex(self.sex),
            smoking=self.smoking,
            sbp=self.sbp,
            total_chol=self.total_chol,
            hdl_chol=self.hdl_chol,
        )


def _error_body(code: str, message: str, field: str | None = None) -> dict:
    error: dict = {"code": code, "message": message}
    if field is not None:
        error["field"] = field
    return {"error": error}


def create_app(
    bundle: Score2CoefficientBundle | None = None,
    surrogates: dict[Sex, SurrogateModel] | None = None,
    thresholds: ColorThresholds | None = None,
) -> FastAPI:
    bundle = bundle or load_default_bundle()
    surrogates = surrogates or load_default_surrogates()
    thresholds = thresholds or load_color_thresholds()
    quantized = {
        sex: quantized_surrogate(model, DEFAULT_LOBES[sex]) for sex, model in surrogates.items()
    }

    app = FastAPI(title="petalrisk", version="0.1.0", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        first = exc.errors()[0] if exc.errors() else {}
        loc = [str(part) for part in first.get("loc", []) if part != "body"]
        return JSONResponse(
            status_code=400,
            content=_error_body(
                "malformed_payload", str(first.get("msg", "invalid payload")), ".".join(loc) or None
            ),
        )

    @app.exception_handler(OutOfRangeError)
    async def range_handler(request: Request, exc: OutOfRangeError):
        return JSONResponse(status_code=422, content=_error_body("out_of_range", str(exc), exc.field))

    def evaluate(payload: PatientPayload) -> dict:
        """Shared pipeline: validate/clamp, risks, color, normalized factors."""
        patient, clamped = validate_patient(payload.record(), clamp=payload.clamp)
        region = RiskRegion(payload.region)
        model = quantized[patient.sex]
        z = normalize(patient)
        risk2 = evaluate_score2(patient, bundle, region)
        risk_s = predict(model, z)
        return {
            "patient": patient,
            "region": region,
            "model": model,
            "z": z,
            "risk_score2": risk2,
            "risk_surrogate": risk_s,
            "color_class": risk_color(risk_s, patient.age, thresholds).value,
            "clamped_fields": clamped,
        }

    def flower_for(patient: PatientRecord, z: NormalizedFactors, include_outline: bool) -> dict:
        base = surrogates[patient.sex]
        layout = build_flower(
            b=base.alphas,
            z=z.as_tuple(),
            total=DEFAULT_LOBES[patient.sex],
            kappa=DEFAULT_KAPPA,
            ordering=FACTOR_ORDER,
        )
        return layout.to_dict(samples_per_lobe=64 if include_outline else None)

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.get("/models")
    def models():
        return {
            "bundle": {
                "provenance": bundle.provenance,
                "regions": [r.value for r in bundle.regions],
            },
            "surrogates": {
                sex.value: {
                    "provenance": model.provenance,
                    "alphas": dict(zip(FACTOR_ORDER, model.alphas)),
                }
                for sex, model in surrogates.items()
            },
            "quantized": {
                sex.value: {
                    "provenance": model.provenance,
                    "total_lobes": DEFAULT_LOBES[sex],
                    "alphas": dict(zip(FACTOR_ORDER, model.alphas)),
                }
                for sex, model in quantized.items()
            },
            "defaults": {"region": "moderate", "kappa": DEFAULT_KAPPA},
        }

    @app.post("/risk")
    def risk(payload: PatientPayload):
        state = evaluate(payload)
        return {
            "risk_score2": state["risk_score2"],
            "risk_surrogate": state["risk_surrogate"],
            "color_class": state["color_class"],
            "display": {
                "risk_score2": format_percent(state["risk_score2"]),
                "risk_surrogate": format_percent(state["risk_surrogate"]),
            },
            "clamped_fields": state["clamped_fields"],
        }

    @app.post("/explain")
    def explain(payload: PatientPayload):
        state = evaluate(payload)
        patient: PatientRecord = state["patient"]
        model: SurrogateModel = state["model"]
        contrib = contributions(model, state["z"])
        body = {
            "risk_score2": state["risk_score2"],
            "risk_surrogate": state["risk_surrogate"],
            "contributions": dict(zip(FACTOR_ORDER, contrib)),
            "flower": flower_for(patient, state["z"], payload.include_outline),
            "svg": None,
            "color_class": state["color_class"],
            "display": {
                "risk_score2": format_percent(state["risk_score2"]),
                "risk_surrogate": format_percent(state["risk_surrogate"]),
            },
            "clamped_fields": state["clamped_fields"],
        }
        if payload.include_svg:
            layout = build_flower(
                b=surrogates[patient.sex].alphas,
                z=state["z"].as_tuple(),
                total=DEFAULT_LOBES[patient.sex],
                kappa=DEFAULT_KAPPA,
                ordering=FACTOR_ORDER,
            )
            body["svg"] = render_flower_svg(
                layout,
                patient,
                model,
                RenderOptions(
                    color_thresholds=thresholds, show_numeric_overlay=payload.numeric_overlay
                ),
            )
        return body

    @app.post("/whatif")
    def whatif(payload: PatientPayload):
        state = evaluate(payload)
        patient: PatientRecord = state["patient"]
        region: RiskRegion = state["region"]
        model: SurrogateModel = state["model"]
        entries = []
        for scenario in applicable_scenarios(patient):
            z_after = normalize(scenario.modified_patient)
            risk2_after = evaluate_score2(scenario.modified_patient, bundle, region)
            risk_s_after = predict(model, z_after)
            entries.append(
                {
                    "kind": scenario.kind.value,
                    "description": scenario.description,
                    "before": {
                        "score2": state["risk_score2"],
                        "surrogate": state["risk_surrogate"],
                    },
                    "after": {"score2": risk2_after, "surrogate": risk_s_after},
                    "delta": {
                        "score2": state["risk_score2"] - risk2_after,
                        "surrogate": state["risk_surrogate"] - risk_s_after,
                    },
                    "display": {
                        "before": format_percent(state["risk_surrogate"]),
                        "after": format_percent(risk_s_after),
                    },
                    "flower_after": flower_for(
                        scenario.modified_patient, z_after, payload.include_outline
                    ),
                }
            )
        return {"scenarios": entries}

    return app


def default_app() -> FastAPI:
    """App over the bundled coefficient and surrogate transcriptions."""
    return create_app()
