"""Command-line interface.

Subcommands: synth, eda, train, evaluate, sweep, run. Settings come from
a JSON config file; the --model/--seed/--percentile/--threshold/--out
flags override it. Exit codes: 0 success, 2 configuration problem,
3 data problem, 4 numeric failure during training.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ClaimGuardError, InvalidConfig
from .pipeline import (
    MODELS,
    PipelineConfig,
    evaluate_saved,
    run_pipeline,
    sweep_only,
    train_only,
    write_eda_json,
)
from .synth import SynthConfig, generate, write_corpus


def _add_override_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="pipeline config JSON")
    parser.add_argument("--model", choices=MODELS, help="override the configured model")
    parser.add_argument("--seed", type=int, help="override the master seed")
    parser.add_argument("--percentile", type=float, help="override the error percentile")
    parser.add_argument("--threshold", type=float, help="override the decision threshold")
    parser.add_argument("--out", help="override the output directory")


def _load_config(args: argparse.Namespace) -> PipelineConfig:
    cfg = PipelineConfig.from_json(args.config)
    cfg.apply_overrides(
        model=args.model,
        seed=args.seed,
        percentile=args.percentile,
        threshold=args.threshold,
        out_dir=args.out,
    )
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="claimguard",
        description="Claims fraud detection pipeline: ingest, features, "
        "supervised baselines, and reconstruction-error models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a synthetic four-file corpus")
    p_synth.add_argument("--config", help="synth config JSON (overridden by flags)")
    p_synth.add_argument("--out", required=True, help="output directory for the CSVs")
    p_synth.add_argument("--n-providers", type=int)
    p_synth.add_argument("--n-beneficiaries", type=int)
    p_synth.add_argument("--n-claims", type=int)
    p_synth.add_argument("--fraud-fraction", type=float)
    p_synth.add_argument("--seed", type=int)

    p_eda = sub.add_parser("eda", help="write a dataset summary (eda.json)")
    _add_override_flags(p_eda)

    p_train = sub.add_parser("train", help="fit a model and write model.json")
    _add_override_flags(p_train)

    p_eval = sub.add_parser("evaluate", help="score a saved model on the test split")
    _add_override_flags(p_eval)
    p_eval.add_argument("--model-file", required=True, help="model.json to load")

    p_sweep = sub.add_parser("sweep", help="write the threshold trade-off table")
    _add_override_flags(p_sweep)

    p_run = sub.add_parser("run", help="full pipeline: train, evaluate, all artifacts")
    _add_override_flags(p_run)

    return parser


def _cmd_synth(args: argparse.Namespace) -> None:
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as handle:
                raw = json.load(handle)
        except FileNotFoundError:
            raise InvalidConfig(f"config file does not exist: {args.config}") from None
        except json.JSONDecodeError as exc:
            raise InvalidConfig(f"config is not valid JSON: {exc}") from None
        if "scheme_mix" in raw and raw["scheme_mix"] is not None:
            raw["scheme_mix"] = dict(raw["scheme_mix"])
        try:
            config = SynthConfig(**raw)
        except TypeError as exc:
            raise InvalidConfig(f"bad synth config: {exc}") from None
    else:
        config = SynthConfig()
    if args.n_providers is not None:
        config.n_providers = args.n_providers
    if args.n_beneficiaries is not None:
        config.n_beneficiaries = args.n_beneficiaries
    if args.n_claims is not None:
        config.n_claims = args.n_claims
    if args.fraud_fraction is not None:
        config.fraud_provider_fraction = args.fraud_fraction
    if args.seed is not None:
        config.seed = args.seed
    config.validate()
    paths = write_corpus(generate(config), args.out)
    for name in ("beneficiaries", "inpatient", "outpatient", "labels"):
        print(paths[name])


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "synth":
            _cmd_synth(args)
        elif args.command == "eda":
            print(write_eda_json(_load_config(args)))
        elif args.command == "train":
            print(train_only(_load_config(args)))
        elif args.command == "evaluate":
            paths = evaluate_saved(_load_config(args), args.model_file)
            for path in paths.values():
                print(path)
        elif args.command == "sweep":
            print(sweep_only(_load_config(args)))
        elif args.command == "run":
            paths = run_pipeline(_load_config(args))
            for name in sorted(paths):
                print(paths[name])
    except ClaimGuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
