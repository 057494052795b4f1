"""Command-line interface.

Commands: ``score`` (risks for one patient), ``fit`` (fit surrogates on a
cohort and write a model file), ``validate`` (fidelity report), ``render``
(flower SVG), ``gsc`` (score-chart SVG), ``cohort`` (generate or filter
cohorts), ``serve`` (HTTP API). Exit codes: 0 success, 1 usage error,
2 data or validation error. File outputs are written atomically.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from typing import Sequence

from . import evaluation, geometry, render, score2, surrogate

USAGE_ERROR = 1
DATA_ERROR = 2

DEFAULT_LOBES = {score2.Sex.MALE: 10, score2.Sex.FEMALE: 11}
DEFAULT_KAPPA = 0.5


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage problems with exit code 1."""

    def error(self, message):
        raise _UsageError(message)


def write_atomic(path: str, text: str) -> None:
    """Write via a temp file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".petalrisk-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, out: str | None) -> None:
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


def _add_patient_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--sex", required=True, choices=["male", "female"])
    parser.add_argument("--age", required=True, type=float)
    smoking = parser.add_mutually_exclusive_group(required=True)
    smoking.add_argument("--smoking", dest="smoking", action="store_true")
    smoking.add_argument("--no-smoking", dest="smoking", action="store_false")
    parser.add_argument("--sbp", required=True, type=float, help="systolic blood pressure, mmHg")
    parser.add_argument("--total-chol", required=True, type=float, help="total cholesterol, mmol/L")
    parser.add_argument("--hdl-chol", required=True, type=float, help="HDL cholesterol, mmol/L")
    parser.add_argument("--clamp", action="store_true", help="clamp out-of-range values to bounds")


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--coefficients",
        default=None,
        help="coefficient bundle file (default: bundled transcription)",
    )
    parser.add_argument(
        "--surrogates",
        default=None,
        help="surrogate model file (default: bundled reference models)",
    )
    parser.add_argument(
        "--region",
        default="moderate",
        choices=[r.value for r in score2.RiskRegion],
    )


def _patient_from_args(args) -> tuple[score2.PatientRecord, list[str]]:
    patient = score2.PatientRecord(
        age=args.age,
        sex=score2.Sex(args.sex),
        smoking=args.smoking,
        sbp=args.sbp,
        total_chol=args.total_chol,
        hdl_chol=args.hdl_chol,
    )
    return score2.validate_patient(patient, clamp=args.clamp)


def _load_bundle(args) -> score2.Score2CoefficientBundle:
    if args.coefficients:
        return score2.load_coefficient_bundle(args.coefficients)
    return score2.load_default_bundle()


def _load_surrogates(args) -> dict[score2.Sex, surrogate.SurrogateModel]:
    if getattr(args, "surrogates", None):
        return surrogate.load_surrogate_models(args.surrogates)
    return surrogate.load_default_surrogates()


def _cohort_from_args(args) -> list[evaluation.CohortRow]:
    if args.cohort == "synthetic":
        config = evaluation.SyntheticCohortConfig(size_per_sex=args.size, seed=args.seed)
        return evaluation.generate_synthetic(config)
    rows, _ = evaluation.ingest_csv(args.cohort)
    return rows


def build_parser() -> _Parser:
    parser = _Parser(prog="petalrisk", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command")

    p_score = sub.add_parser("score", help="compute risks for one patient")
    _add_patient_flags(p_score)
    _add_config_flags(p_score)
    p_score.add_argument("--json", action="store_true", help="emit JSON instead of text")

    p_fit = sub.add_parser("fit", help="fit surrogates on a cohort, write a model file")
    p_fit.add_argument("--cohort", default="synthetic", help="'synthetic' or a cohort CSV path")
    p_fit.add_argument("--seed", type=int, default=7)
    p_fit.add_argument("--size", type=int, default=1000, help="synthetic rows per sex")
    p_fit.add_argument("--quantized", action="store_true", help="write lobe-quantized coefficients")
    p_fit.add_argument("--out", default=None, help="output path (default: stdout)")
    _add_config_flags(p_fit)

    p_val = sub.add_parser("validate", help="fidelity report of surrogates vs SCORE2")
    p_val.add_argument("--cohort", default="synthetic", help="'synthetic' or a cohort CSV path")
    p_val.add_argument("--seed", type=int, default=7)
    p_val.add_argument("--size", type=int, default=1000, help="synthetic rows per sex")
    p_val.add_argument("--format", default="table", choices=["table", "csv"])
    p_val.add_argument("--out", default=None)
    _add_config_flags(p_val)

    p_render = sub.add_parser("render", help="write a flower-chart SVG for one patient")
    _add_patient_flags(p_render)
    _add_config_flags(p_render)
    p_render.add_argument("--lobes", type=int, default=None, help="total lobes (default 10 male / 11 female)")
    p_render.add_argument("--kappa", type=float, default=DEFAULT_KAPPA)
    p_render.add_argument("--overlay", action="store_true", help="numeric risk overlay")
    p_render.add_argument("--size", type=int, default=600)
    p_render.add_argument("--out", default=None)

    p_gsc = sub.add_parser("gsc", help="write a graphical-score-chart SVG")
    p_gsc.add_argument("--sex", required=True, choices=["male", "female"])
    p_gsc.add_argument("--size", type=int, default=600)
    p_gsc.add_argument("--out", default=None)
    _add_config_flags(p_gsc)

    p_cohort = sub.add_parser("cohort", help="generate or filter cohorts")
    mode = p_cohort.add_mutually_exclusive_group(required=True)
    mode.add_argument("--generate", action="store_true", help="generate a synthetic cohort")
    mode.add_argument("--filter", dest="filter_path", default=None, help="filter an existing CSV")
    p_cohort.add_argument("--seed", type=int, default=7)
    p_cohort.add_argument("--size", type=int, default=1000, help="synthetic rows per sex")
    p_cohort.add_argument("--out", default=None, help="output CSV path (default: stdout)")

    p_serve = sub.add_parser("serve", help="run the HTTP API")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    _add_config_flags(p_serve)

    return parser


def _cmd_score(args) -> int:
    bundle = _load_bundle(args)
    models = _load_surrogates(args)
    patient, clamped = _patient_from_args(args)
    region = score2.RiskRegion(args.region)
    sex = patient.sex
    quantized = surrogate.quantized_surrogate(models[sex], DEFAULT_LOBES[sex])
    z = surrogate.normalize(patient)
    risk2 = score2.evaluate_score2(patient, bundle, region)
    risk_s = surrogate.predict(quantized, z)
    thresholds = render.load_color_thresholds()
    color = render.risk_color(risk_s, patient.age, thresholds)
    if args.json:
        _emit(
            json.dumps(
                {
                    "risk_score2": risk2,
                    "risk_surrogate": risk_s,
                    "color_class": color.value,
                    "display": {
                        "risk_score2": score2.format_percent(risk2),
                        "risk_surrogate": score2.format_percent(risk_s),
                    },
                    "clamped_fields": clamped,
                },
                indent=2,
            )
            + "\n",
            None,
        )
    else:
        lines = [
            f"SCORE2 10-year risk:    {score2.format_percent(risk2)}",
            f"surrogate risk:         {score2.format_percent(risk_s)}",
            f"treatment color:        {color.value}",
        ]
        if clamped:
            lines.append(f"clamped fields:         {', '.join(clamped)}")
        _emit("\n".join(lines) + "\n", None)
    return 0


def _fit_models(args, bundle, region) -> dict[score2.Sex, surrogate.SurrogateModel]:
    rows = _cohort_from_args(args)
    models = {}
    for sex in score2.Sex:
        patients = [r.patient for r in rows if r.patient.sex is sex]
        if len(patients) < 4:
            raise ValueError(f"cohort has too few rows for sex {sex.value}")
        design = [surrogate.normalize(p) for p in patients]
        targets = [score2.evaluate_score2(p, bundle, region) for p in patients]
        models[sex] = surrogate.fit_no_intercept(design, targets, sex)
    return models


def _cmd_fit(args) -> int:
    bundle = _load_bundle(args)
    region = score2.RiskRegion(args.region)
    models = _fit_models(args, bundle, region)
    provenance = f"fitted on cohort={args.cohort} seed={args.seed} size={args.size} region={args.region}"
    if args.quantized:
        models = {
            sex: surrogate.quantized_surrogate(model, DEFAULT_LOBES[sex])
            for sex, model in models.items()
        }
        provenance += f" quantized lobes={DEFAULT_LOBES[score2.Sex.MALE]}/{DEFAULT_LOBES[score2.Sex.FEMALE]}"
    _emit(surrogate.dump_surrogate_models(models, provenance), args.out)
    return 0


def _cmd_validate(args) -> int:
    bundle = _load_bundle(args)
    region = score2.RiskRegion(args.region)
    rows = _cohort_from_args(args)
    fitted = _fit_models(args, bundle, region)
    quantized = {
        sex: surrogate.quantized_surrogate(model, DEFAULT_LOBES[sex])
        for sex, model in fitted.items()
    }
    report = evaluation.compare_surrogates(
        rows, bundle, region, {"linear": fitted, "quantized": quantized, "gsc": None}
    )
    _emit(report.to_csv() if args.format == "csv" else report.format_table(), args.out)
    return 0


def _cmd_render(args) -> int:
    bundle = _load_bundle(args)
    models = _load_surrogates(args)
    patient, _ = _patient_from_args(args)
    sex = patient.sex
    total = args.lobes or DEFAULT_LOBES[sex]
    base = models[sex]
    layout = geometry.build_flower(
        b=base.alphas,
        z=surrogate.normalize(patient).as_tuple(),
        total=total,
        kappa=args.kappa,
        ordering=surrogate.FACTOR_ORDER,
    )
    quantized = surrogate.quantized_surrogate(base, total)
    options = render.RenderOptions(size=args.size, show_numeric_overlay=args.overlay)
    _emit(render.render_flower_svg(layout, patient, quantized, options), args.out)
    return 0


def _cmd_gsc(args) -> int:
    bundle = _load_bundle(args)
    svg = render.render_gsc_svg(
        bundle,
        score2.RiskRegion(args.region),
        score2.Sex(args.sex),
        options=render.RenderOptions(size=args.size),
    )
    _emit(svg, args.out)
    return 0


def _cmd_cohort(args) -> int:
    if args.generate:
        rows = evaluation.generate_synthetic(
            evaluation.SyntheticCohortConfig(size_per_sex=args.size, seed=args.seed)
        )
        report = evaluation.ExclusionReport(included=len(rows))
    else:
        rows, report = evaluation.ingest_csv(args.filter_path)
    _emit(evaluation.write_cohort_csv(rows), args.out)
    sys.stderr.write(report.format_text() + "\n")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    bundle = _load_bundle(args)
    models = _load_surrogates(args)
    uvicorn.run(create_app(bundle=bundle, surrogates=models), host=args.host, port=args.port)
    return 0


_COMMANDS = {
    "score": _cmd_score,
    "fit": _cmd_fit,
    "validate": _cmd_validate,
    "render": _cmd_render,
    "gsc": _cmd_gsc,
    "cohort": _cmd_cohort,
    "serve": _cmd_serve,
}


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        parser.print_usage(sys.stderr)
        return USAGE_ERROR
    if args.command is None:
        parser.print_usage(sys.stderr)
        return USAGE_ERROR
    try:
        return _COMMANDS[args.command](args)
    except (
        score2.OutOfRangeError,
        score2.CoefficientFileError,
        evaluation.CohortError,
        ValueError,
        OSError,
    ) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return DATA_ERROR


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
