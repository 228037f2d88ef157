"""
Command-line interface

    python -m ifr simulate  --case 1 --seed 7 --n 50 --out panel.csv
    python -m ifr fit       --in panel.csv --model cm --out cm.joblib
    python -m ifr predict   --fit cm.joblib --in panel.csv --out predictions.csv
    python -m ifr evaluate  --in panel.csv --models flm,cm,mcm --out results/
    python -m ifr mc-study  --cases 1,3 --mc 20 --n 100 --out study/

Configuration precedence: defaults < --config JSON file < IFR_SEED < flags.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Type

from pydantic import BaseModel, ValidationError

from .config import BAND_COLUMNS, EVALUATION_COLUMNS, METRICS_COLUMNS, PANEL_COLUMNS, PREDICTION_COLUMNS, load_settings
from .connectors.model_store import StoredModel, load_fit, save_fit
from .connectors.panel_csv import (
    PanelDataset,
    limits_frame,
    load_panel,
    save_panel,
    write_csv_atomic,
)
from .exceptions import ConfigurationError, DataValidationError, IntervalRegressionError
from .fda.interval_fd import enforce_ordering, from_discrete
from .fda.interval_models import ModelKind, fit, mcm_prediction_band, predict_limits_detailed
from .models.run_models import RunConfig, SimConfig, get_case
from .services.evaluation import evaluate_panel, in_sample_metrics, panel_datasets
from .services.simulation import generate, run_study

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def _read_config_file(path: Optional[str]) -> Dict[str, Any]:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigurationError(f"config file {path} does not exist") from None
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"config file {path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigurationError(f"config file {path} must hold one JSON object")
    return {str(k).replace("-", "_"): v for k, v in data.items()}


def resolve_config(model: Type[BaseModel], file_values: Dict[str, Any], flag_values: Dict[str, Any]) -> BaseModel:
    """Merge config file, IFR_SEED and explicit flags (in that order) into a validated model."""
    fields = set(model.model_fields)
    values = {k: v for k, v in file_values.items() if k in fields}
    ignored = sorted(set(file_values) - fields)
    if ignored:
        logger.debug(f"Config keys not used by {model.__name__}: {ignored}")
    env_seed = load_settings().seed
    if env_seed is not None:
        values["seed"] = env_seed
    values.update({k: v for k, v in flag_values.items() if v is not None and k in fields})
    try:
        return model(**values)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in e.errors()
        )
        raise ConfigurationError(problems) from None


def _split_list(value: Optional[str]) -> Optional[List[str]]:
    if value is None:
        return None
    return [part.strip() for part in value.split(",") if part.strip()]


def _echo_seed(seed: int) -> None:
    print(f"seed={seed}")


def _predictor_names(panel: PanelDataset, response: str, predictors: Optional[List[str]]) -> List[str]:
    if response not in panel.variables:
        raise DataValidationError(f"response variable {response!r} not in panel variables {panel.variables}")
    if predictors is None:
        predictors = [v for v in panel.variables if v != response]
    return predictors


def cmd_simulate(args: argparse.Namespace) -> int:
    config = resolve_config(SimConfig, _read_config_file(args.config), {
        "n": args.n, "seed": args.seed, "grid_size": args.grid_size,
        "n_predictors": args.n_predictors, "noise_variance": args.noise_variance,
    })
    _echo_seed(config.seed)
    case = _case(args.case)
    data = generate(config, case)

    width = len(str(config.n))
    entities = [f"curve-{i + 1:0{width}d}" for i in range(config.n)]
    variables = ["y"] + [f"x{m + 1}" for m in range(config.n_predictors)]
    pairs = [(data.Y.lower_values(), data.Y.upper_values())]
    pairs += [(x.lower_values(), x.upper_values()) for x in data.X]

    lower, upper = {}, {}
    for name, (lo, hi) in zip(variables, pairs):
        lower[name], upper[name] = enforce_ordering(lo, hi)
    if data.raw_inversions:
        logger.warning(f"{data.raw_inversions} generated cells had lower > upper; written as (min, max)")

    panel = PanelDataset(entities=entities, grid=data.grid, variables=variables, lower=lower, upper=upper)
    save_panel(panel, args.out)
    return 0


def _case(value) -> Any:
    try:
        return get_case(value)
    except ValueError as e:
        raise ConfigurationError(str(e)) from None


def _run_config(args: argparse.Namespace, **extra) -> RunConfig:
    flags = {
        "basis_k": args.basis_k, "order": args.order, "alpha": args.alpha, "mcm_b": args.mcm_b,
        "seed": args.seed, "n_jobs": args.n_jobs,
    }
    flags.update(extra)
    return resolve_config(RunConfig, _read_config_file(args.config), flags)


def cmd_fit(args: argparse.Namespace) -> int:
    config = _run_config(args, models=[args.model] if args.model else None)
    _echo_seed(config.seed)
    if len(config.models) != 1:
        raise ConfigurationError("fit takes exactly one model; use --model")
    kind = config.models[0]
    panel = load_panel(args.input)
    predictors = _predictor_names(panel, args.response, _split_list(args.predictors))
    Y, X = panel_datasets(panel, args.response, predictors, config)

    result = fit(kind, Y, X, config.model_options())
    metrics = in_sample_metrics(result, Y, X)
    logger.info(
        f"{kind.value.upper()} in-sample AMSE lower={metrics['amse_lower']:.6g} "
        f"upper={metrics['amse_upper']:.6g}"
    )
    save_fit(StoredModel(result=result, response=args.response, predictors=predictors), args.out)
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    stored = load_fit(args.fit)
    result = stored.result
    seed = resolve_config(RunConfig, _read_config_file(args.config), {"seed": args.seed}).seed
    _echo_seed(seed)
    panel = load_panel(args.input)
    missing = [v for v in stored.predictors if v not in panel.variables]
    if missing:
        raise DataValidationError(f"panel lacks predictor variables {missing}")

    X = [
        from_discrete(panel.lower[v], panel.upper[v], panel.grid, spec)
        for v, spec in zip(stored.predictors, result.predictor_specs)
    ]
    prediction = predict_limits_detailed(result, X, panel.grid)
    if prediction.inverted:
        logger.info(f"Ordering enforced on {prediction.inverted} predicted points")
    frame = limits_frame(panel.entities, panel.grid, stored.response, prediction.lower, prediction.upper)
    write_csv_atomic(frame, args.out, columns=PREDICTION_COLUMNS)

    if args.band:
        if result.kind is not ModelKind.MCM:
            raise ConfigurationError("--band needs an MCM fit")
        band = mcm_prediction_band(result, X, alpha=args.alpha, grid=panel.grid, seed=seed)
        band_frame = limits_frame(panel.entities, panel.grid, stored.response, band.lower_low, band.lower_high)
        band_frame = band_frame.rename(columns={"lower": "lower_band_low", "upper": "lower_band_high"})
        band_frame["upper_band_low"] = band.upper_low.ravel()
        band_frame["upper_band_high"] = band.upper_high.ravel()
        write_csv_atomic(band_frame, args.band, columns=BAND_COLUMNS)
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = _run_config(
        args,
        models=args.models,
        train_frac=args.train_frac,
        repeats=args.repeats,
        train_ids=_split_list(args.train_ids),
        test_ids=_split_list(args.test_ids),
    )
    _echo_seed(config.seed)
    panel = load_panel(args.input)
    predictors = _predictor_names(panel, args.response, _split_list(args.predictors))
    report = evaluate_panel(panel, args.response, predictors, config)
    report.write(args.out)
    return 0


def cmd_mc_study(args: argparse.Namespace) -> int:
    config = resolve_config(SimConfig, _read_config_file(args.config), {
        "mc": args.mc, "n": args.n, "seed": args.seed, "alpha": args.alpha, "mcm_b": args.mcm_b,
        "num_basis": args.basis_k, "order": args.order, "train_frac": args.train_frac,
        "n_jobs": args.n_jobs,
    })
    _echo_seed(config.seed)
    try:
        models = RunConfig(models=args.models).models if args.models else RunConfig().models
    except ValidationError as e:
        raise ConfigurationError(e.errors()[0]["msg"]) from None
    cases = [_case(c) for c in (_split_list(args.cases) or ["1", "2", "3", "4"])]

    report = run_study(config, cases, models)
    out = Path(args.out)
    report.to_csv(out / "metrics.csv")
    report.to_json(out / "summary.json")
    return 0


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON file of settings; flags override it")
    parser.add_argument("--seed", type=int, help="Master seed (overrides IFR_SEED)")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    parser.add_argument("--n-jobs", type=int, help="Parallel workers (joblib)")


def _model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--basis-k", type=int, help="Basis functions of the common basis")
    parser.add_argument("--order", type=int, help="B-spline order (degree + 1)")
    parser.add_argument("--alpha", type=float, help="Significance level of MCM bands")
    parser.add_argument("--mcm-b", type=int, help="MCM replicates")


class CliParser(argparse.ArgumentParser):
    """Usage errors become configuration errors, reported on one line by `main`."""

    def error(self, message: str):
        raise ConfigurationError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = CliParser(
        prog="ifr",
        description="Function-on-function regression for interval-valued functional data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "simulate",
        help="Write a simulated interval panel",
        epilog=f"Output columns: {','.join(PANEL_COLUMNS)}",
    )
    _common(p)
    p.add_argument("--case", type=int, default=1, help="Simulation case 1-4")
    p.add_argument("--n", type=int, help="Number of curves")
    p.add_argument("--grid-size", type=int, help="Grid points on [0, 1]")
    p.add_argument("--n-predictors", type=int, help="Functional predictors (1-3)")
    p.add_argument("--noise-variance", type=float, help="Noise variance")
    p.add_argument("--out", required=True, help="Panel CSV to write")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("fit", help="Fit one model on a panel and persist it")
    _common(p)
    _model_flags(p)
    p.add_argument("--in", dest="input", required=True, help="Panel CSV")
    p.add_argument("--model", help="flm, cm, crm, bcrm or mcm")
    p.add_argument("--response", default="y", help="Response variable (default: y)")
    p.add_argument("--predictors", help="Comma-separated predictor variables (default: all others)")
    p.add_argument("--out", required=True, help="Model file; .json writes a matrix dump, otherwise joblib")
    p.set_defaults(handler=cmd_fit)

    p = sub.add_parser(
        "predict",
        help="Predict limit curves with a persisted model",
        epilog=f"Output columns: {','.join(PREDICTION_COLUMNS)}; band columns: {','.join(BAND_COLUMNS)}",
    )
    _common(p)
    p.add_argument("--fit", required=True, help="Model file written by `fit`")
    p.add_argument("--in", dest="input", required=True, help="Panel CSV with the predictor variables")
    p.add_argument("--out", required=True, help="Predictions CSV to write")
    p.add_argument("--band", help="Also write MCM prediction bands to this CSV")
    p.add_argument("--alpha", type=float, default=0.05, help="Significance level of the band")
    p.set_defaults(handler=cmd_predict)

    p = sub.add_parser(
        "evaluate",
        help="Repeated random-split evaluation on a panel",
        epilog=f"evaluation.csv columns: {','.join(EVALUATION_COLUMNS)}",
    )
    _common(p)
    _model_flags(p)
    p.add_argument("--in", dest="input", required=True, help="Panel CSV")
    p.add_argument("--models", help="Comma-separated models (default: all)")
    p.add_argument("--response", default="y", help="Response variable (default: y)")
    p.add_argument("--predictors", help="Comma-separated predictor variables (default: all others)")
    p.add_argument("--train-frac", type=float, help="Fraction of entities used for training")
    p.add_argument("--train-ids", help="Comma-separated training entities (with --test-ids)")
    p.add_argument("--test-ids", help="Comma-separated test entities (with --train-ids)")
    p.add_argument("--repeats", type=int, help="Random split repeats")
    p.add_argument("--out", required=True, help="Output directory")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser(
        "mc-study",
        help="Monte Carlo simulation study",
        epilog=f"metrics.csv columns: {','.join(METRICS_COLUMNS)}",
    )
    _common(p)
    _model_flags(p)
    p.add_argument("--cases", help="Comma-separated cases (default: 1,2,3,4)")
    p.add_argument("--models", help="Comma-separated models (default: all)")
    p.add_argument("--mc", type=int, help="Monte Carlo replicates")
    p.add_argument("--n", type=int, help="Curves per replicate")
    p.add_argument("--train-frac", type=float, help="Leading fraction of curves used for training")
    p.add_argument("--out", required=True, help="Output directory")
    p.set_defaults(handler=cmd_mc_study)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=getattr(logging, args.log_level), format=LOG_FORMAT)
        return args.handler(args)
    except IntervalRegressionError as e:
        print(e.one_line(), file=sys.stderr)
        return 2
    except Exception as e:
        logger.exception("Unexpected failure")
        print(f"error[internal]: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
