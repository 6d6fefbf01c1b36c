"""Command-line entry point: validate, fit, simulate, impact.

Exit codes: 0 success, 2 validation failure, 3 estimation failure,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis
from .dataset import (
    PanelValidationError,
    derive_panel,
    read_panel,
    reference_envelope_violations,
    summary_stats,
)
from .models import baseline_fits
from .simulate import SimulationConfig, write_simulation
from .threshold import RegimeError, ThresholdSpec, threshold_fit

EXIT_OK, EXIT_VALIDATION, EXIT_ESTIMATION, EXIT_IO = 0, 2, 3, 4
OUTPUT_DIR_ENV = "STABLECOIN_TBILLS_OUTPUT_DIR"

FIT_DEFAULTS = {
    "response": "both",
    "model": "both",
    "trim_fraction": 0.15,
    "refined_grid": True,
    "intercept_shift": True,
    "replications": 500,
    "seed": 0,
    "jobs": 1,
    "formats": "text,json,svg,csv",
    "drop_first": False,
}
_BOOL_KEYS = {"refined_grid", "intercept_shift", "drop_first"}
_INT_KEYS = {"replications", "seed", "jobs"}
_FLOAT_KEYS = {"trim_fraction"}
FORMATS = {"text", "json", "svg", "csv"}


class CLIError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _read_config(path: str) -> dict:
    """``key = value`` lines; '#' comments; keys as in FIT_DEFAULTS plus output_dir."""
    parser = configparser.ConfigParser()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CLIError(f"cannot read config {path}: {exc}", EXIT_IO) from None
    try:
        parser.read_string("[fit]\n" + text)
    except configparser.Error as exc:
        raise CLIError(f"malformed config {path}: {exc}", EXIT_VALIDATION) from None
    section = parser["fit"]
    out = {}
    for key in section:
        try:
            if key in _BOOL_KEYS:
                out[key] = section.getboolean(key)
            elif key in _INT_KEYS:
                out[key] = section.getint(key)
            elif key in _FLOAT_KEYS:
                out[key] = section.getfloat(key)
            elif key in FIT_DEFAULTS or key == "output_dir":
                out[key] = section[key]
            else:
                raise CLIError(f"unknown config key {key!r} in {path}", EXIT_VALIDATION)
        except ValueError as exc:
            raise CLIError(f"bad value for {key!r} in {path}: {exc}", EXIT_VALIDATION) from None
    return out


def _load(path: str, drop_first: bool = False):
    try:
        observations = read_panel(path)
    except OSError as exc:
        raise CLIError(f"cannot read {path}: {exc}", EXIT_IO) from None
    return observations, derive_panel(observations, drop_first=drop_first)


# --------------------------------------------------------------------------

def cmd_validate(args) -> int:
    try:
        observations = read_panel(args.input)
    except OSError as exc:
        raise CLIError(f"cannot read {args.input}: {exc}", EXIT_IO) from None
    except PanelValidationError as exc:
        print(f"INVALID {args.input}: {exc}")
        return EXIT_VALIDATION
    try:
        panel = derive_panel(observations, drop_first=args.drop_first)
    except (PanelValidationError, np.linalg.LinAlgError) as exc:
        print(f"INVALID {args.input}: {exc}")
        return EXIT_VALIDATION
    print(f"OK {args.input}: {len(observations)} periods "
          f"({observations[0].date_label} .. {observations[-1].date_label})")
    table = summary_stats(panel)
    print(table.format())
    outside = reference_envelope_violations(table)
    if outside:
        print("note: outside the reference min/max envelopes: " + ", ".join(outside))
    else:
        print("note: reference-consistent (every variable within the reference min/max envelopes)")
    return EXIT_OK


def _fit_settings(args) -> dict:
    settings = dict(FIT_DEFAULTS)
    settings["output_dir"] = os.environ.get(OUTPUT_DIR_ENV, "stablecoin_tbills_out")
    if args.config:
        settings.update(_read_config(args.config))
    for key in (*FIT_DEFAULTS, "output_dir"):
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    formats = {f.strip() for f in str(settings["formats"]).split(",") if f.strip()}
    if not formats <= FORMATS:
        raise CLIError(f"unknown format(s): {', '.join(sorted(formats - FORMATS))}", EXIT_VALIDATION)
    settings["formats"] = formats
    if settings["response"] not in ("1m", "3m", "both"):
        raise CLIError("response must be 1m, 3m or both", EXIT_VALIDATION)
    if settings["model"] not in ("baseline", "threshold", "both"):
        raise CLIError("model must be baseline, threshold or both", EXIT_VALIDATION)
    if settings["model"] != "baseline" and settings["replications"] < 1:
        raise CLIError("replications must be >= 1", EXIT_VALIDATION)
    return settings


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise CLIError(f"cannot write {path}: {exc}", EXIT_IO) from None


def cmd_fit(args) -> int:
    settings = _fit_settings(args)
    out_dir = Path(settings["output_dir"])
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CLIError(f"cannot create output directory {out_dir}: {exc}", EXIT_IO) from None
    formats = settings["formats"]
    maturities = ["1m", "3m"] if settings["response"] == "both" else [settings["response"]]
    models = ["baseline", "threshold"] if settings["model"] == "both" else [settings["model"]]

    try:
        _, panel = _load(args.input, settings["drop_first"])
    except (PanelValidationError, np.linalg.LinAlgError) as exc:
        _fail(out_dir, exc, EXIT_VALIDATION)
        return EXIT_VALIDATION

    try:
        if "baseline" in models:
            texts, payload = [], {"layout": "table-2", "models": []}
            for i, m in enumerate(maturities):
                text, js = analysis.render_table(baseline_fits(panel, m), "table-2", start=1 + 3 * i)
                texts.append(text)
                payload["models"].extend(js["models"])
            _emit(out_dir, "baseline", "\n".join(texts), payload, formats)

        if "threshold" in models:
            spec = ThresholdSpec(
                trim_fraction=settings["trim_fraction"],
                include_intercept_shift=settings["intercept_shift"],
                refined_grid=settings["refined_grid"],
            )
            fits = [threshold_fit(panel, m, spec, settings["replications"], settings["seed"],
                                  n_jobs=settings["jobs"]) for m in maturities]
            text, payload = analysis.render_table(fits, "table-3")
            _emit(out_dir, "threshold", text, payload, formats)
            for m, f in zip(maturities, fits):
                if "csv" in formats:
                    _write(out_dir / f"ssr_profile_{m}.csv", f.grid.to_csv())
                if "svg" in formats:
                    _write(out_dir / f"regime_figure_{m}.svg", analysis.render_regime_figure(f, panel))
    except (RegimeError, np.linalg.LinAlgError, ValueError) as exc:
        _fail(out_dir, exc, EXIT_ESTIMATION)
        return EXIT_ESTIMATION
    return EXIT_OK


def _emit(out_dir: Path, stem: str, text: str, payload: dict, formats: set) -> None:
    print(text)
    if "text" in formats:
        _write(out_dir / f"{stem}.txt", text)
    if "json" in formats:
        _write(out_dir / f"{stem}.json", analysis.dump_json(payload))


def _fail(out_dir: Path, exc: Exception, code: int) -> None:
    message = str(exc)
    print(f"error: {message}", file=sys.stderr)
    payload = {"error": message, "type": type(exc).__name__, "exit_code": code}
    try:
        (out_dir / "error.json").write_text(analysis.dump_json(payload), encoding="utf-8")
    except OSError:
        pass


def cmd_simulate(args) -> int:
    try:
        config = SimulationConfig(
            seed=args.seed, n=args.n, planted_tau=args.planted_tau,
            slopes=tuple(args.slopes), noise_sd=args.noise_sd,
            intercept_shift=args.intercept_shift,
        )
    except ValueError as exc:
        raise CLIError(str(exc), EXIT_VALIDATION) from None
    try:
        side = write_simulation(config, args.output)
    except OSError as exc:
        raise CLIError(f"cannot write {args.output}: {exc}", EXIT_IO) from None
    print(f"wrote {args.output} ({config.n} periods) and {side}")
    return EXIT_OK


def _pick_model(payload: dict, label: str | None) -> dict:
    models = payload.get("models") if isinstance(payload, dict) else None
    if not models:
        raise CLIError("fit JSON has no 'models' list", EXIT_VALIDATION)
    if label is None:
        return models[-1]
    for m in models:
        if m.get("model") == label:
            return m
    raise CLIError(f"model {label!r} not found; have {[m.get('model') for m in models]}", EXIT_VALIDATION)


def cmd_impact(args) -> int:
    if args.semi_elasticity is not None:
        profile = analysis.SlopeProfile(args.semi_elasticity, args.semi_elasticity)
    else:
        if args.fit_json is None:
            raise CLIError("give a fit JSON path or --semi-elasticity", EXIT_VALIDATION)
        try:
            payload = json.loads(Path(args.fit_json).read_text(encoding="utf-8"))
        except OSError as exc:
            raise CLIError(f"cannot read {args.fit_json}: {exc}", EXIT_IO) from None
        except json.JSONDecodeError as exc:
            raise CLIError(f"malformed fit JSON {args.fit_json}: {exc}", EXIT_VALIDATION) from None
        try:
            profile = analysis.SlopeProfile.from_json(_pick_model(payload, args.model))
        except (KeyError, TypeError) as exc:
            raise CLIError(f"malformed fit JSON {args.fit_json}: missing {exc}", EXIT_VALIDATION) from None
    try:
        report = analysis.impact_report(profile, args.delta_share, args.baseline_yield,
                                        args.outstanding, args.reference_share)
    except ValueError as exc:
        raise CLIError(str(exc), EXIT_VALIDATION) from None
    if args.json:
        print(analysis.dump_json(report.to_dict()), end="")
    else:
        print(report.format())
    if args.output:
        _write(Path(args.output), analysis.dump_json(report.to_dict()))
    return EXIT_OK


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stablecoin-tbills",
        description="T-bill yield regressions on stablecoin market share.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a panel CSV and print summary statistics")
    p.add_argument("input")
    p.add_argument("--drop-first", action="store_true",
                   help="drop the first period instead of backfilling its T-bill change with 0")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("fit", help="estimate baseline and/or threshold models")
    p.add_argument("input")
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--response", choices=["1m", "3m", "both"])
    p.add_argument("--model", choices=["baseline", "threshold", "both"])
    p.add_argument("--trim-fraction", dest="trim_fraction", type=float)
    p.add_argument("--refined-grid", dest="refined_grid", action=argparse.BooleanOptionalAction,
                   default=None)
    p.add_argument("--intercept-shift", dest="intercept_shift",
                   action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--replications", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, help="worker threads for the bootstrap")
    p.add_argument("--output-dir", dest="output_dir",
                   help=f"defaults to ${OUTPUT_DIR_ENV} or ./stablecoin_tbills_out")
    p.add_argument("--formats", help="comma-separated subset of text,json,svg,csv")
    p.add_argument("--drop-first", dest="drop_first", action="store_const", const=True, default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", help="write a synthetic panel with a planted threshold")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=40)
    p.add_argument("--planted-tau", dest="planted_tau", type=float, default=0.010)
    p.add_argument("--slopes", type=float, nargs=2, default=[-1.7, -6.3], metavar=("LOW", "HIGH"))
    p.add_argument("--noise-sd", dest="noise_sd", type=float, default=0.01)
    p.add_argument("--intercept-shift", dest="intercept_shift", type=float, default=0.0)
    p.add_argument("--output", "-o", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("impact", help="basis-point impact, counterfactual yield, interest savings")
    p.add_argument("fit_json", nargs="?")
    p.add_argument("--model", help="model label in the fit JSON, e.g. '(3)'; default: last")
    p.add_argument("--semi-elasticity", dest="semi_elasticity", type=float,
                   help="use this slope instead of a fit JSON")
    p.add_argument("--delta-share", dest="delta_share", type=float, required=True)
    p.add_argument("--baseline-yield", dest="baseline_yield", type=float, required=True)
    p.add_argument("--outstanding", type=float, default=6.2e12)
    p.add_argument("--reference-share", dest="reference_share", type=float)
    p.add_argument("--json", action="store_true", help="print the report as JSON")
    p.add_argument("--output", help="also write the JSON report here")
    p.set_defaults(func=cmd_impact)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
