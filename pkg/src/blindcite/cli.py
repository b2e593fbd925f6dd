"""Command-line orchestration.

Subcommands: ``simulate``, ``fit-lm``, ``fit-nb``, ``boost``, ``cv`` and
``predict``. Every run resolves its configuration, echoes it to
``manifest.txt`` in the output directory and writes its artifacts
atomically (temp file plus rename), so reruns with the same manifest
reproduce the same bytes. Exit codes: 0 success, 2 validation or
configuration error, 1 numerical failure or non-converged fit.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import boosting, metrics, reports, simulate
from .data import read_records, write_records
from .errors import ConfigError, NumericalError, ShapeError, ValidationError
from .features import (
    EncodingConfig,
    EncodingSchema,
    encode_records,
    schema_from_records,
    split_train_test,
)
from .linmod import fit_ols, predict_lm
from .negbin import fit_negbin, predict_nb

_RESPONSES = {"sjr": "weighted_sjr", "citations": "citation_count"}


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_manifest(out_dir: Path, command: str, options: dict) -> None:
    lines = [f"command = {command}"]
    for key in sorted(options):
        lines.append(f"{key} = {options[key]}")
    _atomic_write(out_dir / "manifest.txt", "\n".join(lines) + "\n")


def _out_dir(args) -> Path:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _resolve_response(args, default: str) -> str:
    choice = getattr(args, "response", None) or default
    if choice != default:
        raise ConfigError(
            f"command {args.command!r} fits the {default!r} response, not {choice!r}"
        )
    return _RESPONSES[choice]


def _full(x: float) -> str:
    return f"{x:.17g}"


def _schema_payload(schema: EncodingSchema) -> dict:
    return {
        "response_kind": schema.config.response_kind,
        "tier": schema.config.tier,
        "raw_predictors": schema.config.raw_predictors,
        "years": list(schema.years),
        "pub_types": list(schema.pub_types),
    }


def _schema_from_payload(payload: dict) -> EncodingSchema:
    config = EncodingConfig(
        response_kind=payload["response_kind"],
        tier=payload["tier"],
        raw_predictors=payload["raw_predictors"],
    )
    return EncodingSchema(
        config=config,
        years=tuple(payload["years"]),
        pub_types=tuple(payload["pub_types"]),
    )


def _split_encode(args, response: str):
    records = read_records(args.input)
    train_records, test_records = split_train_test(
        records, args.split_fraction, args.seed
    )
    config = EncodingConfig(
        response_kind=response, tier=args.tier, raw_predictors=args.raw_predictors
    )
    schema = schema_from_records(train_records, config)
    train_dm = encode_records(train_records, schema)
    if response == "weighted_sjr":
        test_records = [r for r in test_records if r.sjr is not None]
    test_dm = encode_records(test_records, schema) if test_records else None
    train_pmids = [r.pmid for r in train_records if response != "weighted_sjr" or r.sjr is not None]
    return train_dm, test_dm, schema, train_pmids


def _write_fit_outputs(out, model, train_dm, test_dm, fitted, train_pmids, schema, family):
    train_rep, test_rep = metrics.evaluate(model, train_dm, test_dm)
    _atomic_write(out / "coefficients.csv", reports.coefficient_csv(model))
    _atomic_write(out / "coefficients.txt", reports.coefficient_text(model))
    _atomic_write(out / "performance.csv", reports.performance_csv(train_rep, test_rep))
    _atomic_write(out / "performance.txt", reports.performance_text(train_rep, test_rep))
    lines = ["pmid,response,fitted"]
    for pmid, y, f in zip(train_pmids, train_dm.y, fitted):
        lines.append(f"{pmid},{_full(y)},{_full(f)}")
    _atomic_write(out / "fitted_train.csv", "\n".join(lines) + "\n")
    payload = {
        "family": family,
        "column_names": list(model.column_names),
        "schema": _schema_payload(schema),
    }
    if family == "lm":
        payload["coefficients"] = [float(b) for b in model.beta]
        payload["sigma_hat"] = model.sigma_hat
        payload["sigma_mle"] = model.sigma_mle
    else:
        payload["coefficients"] = [float(a) for a in model.alpha]
        payload["psi"] = model.psi
        payload["converged"] = model.converged
    _atomic_write(out / "model.json", json.dumps(payload, indent=2) + "\n")


def _cmd_fit_lm(args) -> int:
    out = _out_dir(args)
    response = _resolve_response(args, "sjr")
    train_dm, test_dm, schema, pmids = _split_encode(args, response)
    model = fit_ols(train_dm)
    fitted = predict_lm(model, train_dm.x)
    _write_fit_outputs(out, model, train_dm, test_dm, fitted, pmids, schema, "lm")
    _write_manifest(out, "fit-lm", _manifest_options(args))
    return 0


def _cmd_fit_nb(args) -> int:
    out = _out_dir(args)
    response = _resolve_response(args, "citations")
    train_dm, test_dm, schema, pmids = _split_encode(args, response)
    model = fit_negbin(train_dm)
    fitted = predict_nb(model, train_dm.x)
    _write_fit_outputs(out, model, train_dm, test_dm, fitted, pmids, schema, "nb")
    _write_manifest(out, "fit-nb", _manifest_options(args))
    if not model.converged:
        print(
            f"fit-nb did not converge after {model.iterations} iterations "
            f"(log-likelihood {model.log_lik:.6f}); reports written anyway",
            file=sys.stderr,
        )
        return 1
    return 0


def _loss_from_args(args) -> tuple[boosting.LossSpec, str]:
    if args.family == "lm":
        return boosting.LossSpec(kind="squared_error"), "sjr"
    policy = "fixed" if args.psi_policy == "fixed" else "profile_each_iteration"
    return (
        boosting.LossSpec(kind="negbin_nll", psi_policy=policy, psi=args.psi),
        "citations",
    )


def _cmd_boost(args) -> int:
    out = _out_dir(args)
    loss, default_response = _loss_from_args(args)
    response = _resolve_response(args, default_response)
    train_dm, test_dm, schema, _ = _split_encode(args, response)
    model = boosting.boost(train_dm, loss, sl=args.sl, m_stop=args.m_stop)
    train_rep, test_rep = metrics.evaluate(model, train_dm, test_dm)
    _atomic_write(out / "path.csv", reports.path_csv(model))
    _atomic_write(out / "selection.csv", reports.selection_csv(model))
    _atomic_write(out / "performance.csv", reports.performance_csv(train_rep, test_rep))
    _atomic_write(out / "performance.txt", reports.performance_text(train_rep, test_rep))
    coef = boosting.coefficients_at(model, model.m_stop)
    payload = {
        "family": f"boost-{args.family}",
        "column_names": list(model.column_names),
        "schema": _schema_payload(schema),
        "coefficients": [float(c) for c in coef],
        "sl": model.sl,
        "m_stop": model.m_stop,
        "psi": model.psi,
    }
    _atomic_write(out / "model.json", json.dumps(payload, indent=2) + "\n")
    _write_manifest(out, "boost", _manifest_options(args))
    return 0


def _cmd_cv(args) -> int:
    out = _out_dir(args)
    loss, default_response = _loss_from_args(args)
    response = _resolve_response(args, default_response)
    train_dm, _, _, _ = _split_encode(args, response)
    result = boosting.subsample_cv(
        train_dm,
        loss,
        sl=args.sl,
        m_grid_max=args.m_max,
        folds=args.cv_folds,
        seed=args.seed,
    )
    _atomic_write(out / "cv_curves.csv", reports.cv_curves_csv(result.oob_curves))
    lines = ["key,value", f"m_opt,{result.m_opt}"]
    for f, opt in enumerate(result.fold_optima):
        lines.append(f"fold_{f}_optimum,{int(opt)}")
    _atomic_write(out / "cv_summary.csv", "\n".join(lines) + "\n")
    _write_manifest(out, "cv", _manifest_options(args))
    return 0


def _cmd_simulate(args) -> int:
    out = _out_dir(args)
    overrides = {}
    if args.n is not None:
        overrides["n"] = args.n
    if args.seed is not None:
        overrides["seed"] = args.seed
    spec = simulate.load_generator_spec(args.config, overrides)
    records, _ = simulate.generate(spec)
    tmp = out / "corpus.csv.tmp"
    write_records(tmp, records)
    os.replace(tmp, out / "corpus.csv")
    options = _manifest_options(args)
    options.update(
        {
            "resolved_n": spec.n,
            "resolved_seed": spec.seed,
            "family": spec.family,
            "tier": spec.tier,
        }
    )
    _write_manifest(out, "simulate", options)
    return 0


def _cmd_predict(args) -> int:
    out = _out_dir(args)
    with open(args.model, encoding="utf-8") as handle:
        payload = json.load(handle)
    schema = _schema_from_payload(payload["schema"])
    records = read_records(args.input)
    if schema.config.response_kind == "weighted_sjr":
        # prediction ignores the response; fill missing weights so no row drops
        records = [
            dataclasses.replace(r, sjr=0.0) if r.sjr is None else r for r in records
        ]
    dm = encode_records(records, schema)
    if list(dm.column_names) != payload["column_names"]:
        raise ValidationError("encoded columns do not match the stored model")
    coef = np.asarray(payload["coefficients"], dtype=np.float64)
    eta = dm.x @ coef
    family = payload["family"]
    raw = None
    if family in ("nb", "boost-nb"):
        prediction = np.exp(eta)
    else:
        prediction = eta
        raw = np.sinh(eta)
    header = "pmid,prediction" + (",prediction_raw" if raw is not None else "")
    lines = [header]
    for i, record in enumerate(records):
        cells = [record.pmid, _full(prediction[i])]
        if raw is not None:
            cells.append(_full(raw[i]))
        lines.append(",".join(cells))
    _atomic_write(out / "predictions.csv", "\n".join(lines) + "\n")
    _write_manifest(out, "predict", _manifest_options(args))
    return 0


def _manifest_options(args) -> dict:
    skip = {"command", "func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", required=True, help="input corpus CSV")
    parser.add_argument("--output-dir", required=True)
    parser.add_argument(
        "--tier", choices=("complete", "icite", "numeric"), default="complete"
    )
    parser.add_argument("--response", choices=("sjr", "citations"), default=None)
    parser.add_argument("--split-fraction", type=float, default=0.8)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--raw-predictors",
        action="store_true",
        help="disable the arsinh transform of count-like predictors",
    )


def _add_boost_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--family", choices=("lm", "nb"), default="lm")
    parser.add_argument("--sl", type=float, default=0.1, help="boosting step length")
    parser.add_argument(
        "--psi-policy", choices=("profile", "fixed"), default="profile"
    )
    parser.add_argument("--psi", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blindcite",
        description="Citation prediction from double-blind-reviewable features",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a synthetic corpus CSV")
    p.add_argument("--config", required=True, help="generator config file")
    p.add_argument("--output-dir", required=True)
    p.add_argument("--n", type=int, default=None, help="override corpus size")
    p.add_argument("--seed", type=int, default=None, help="override generator seed")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fit-lm", help="least squares on the weighted response")
    _add_common(p)
    p.set_defaults(func=_cmd_fit_lm)

    p = sub.add_parser("fit-nb", help="negative binomial regression on counts")
    _add_common(p)
    p.set_defaults(func=_cmd_fit_nb)

    p = sub.add_parser("boost", help="component-wise gradient boosting")
    _add_common(p)
    _add_boost_common(p)
    p.add_argument("--m-stop", type=int, default=100)
    p.set_defaults(func=_cmd_boost)

    p = sub.add_parser("cv", help="tune m_stop by subsampling cross-validation")
    _add_common(p)
    _add_boost_common(p)
    p.add_argument("--cv-folds", type=int, default=10)
    p.add_argument("--m-max", type=int, default=5000)
    p.set_defaults(func=_cmd_cv)

    p = sub.add_parser("predict", help="apply a stored model to a corpus")
    p.add_argument("--model", required=True, help="model.json from a fit run")
    p.add_argument("--input", required=True)
    p.add_argument("--output-dir", required=True)
    p.set_defaults(func=_cmd_predict)

    return parser


def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValidationError, ConfigError, ShapeError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))
