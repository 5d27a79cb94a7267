from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence

import pandas as pd
import simplejson
from maybe import Maybe

from . import __version__
from .channel import ChannelParams, PrintedImage, make_fake, print_code
from .codebook import Codebook, train_codebook
from .dir import Dir
from .enums import Enums
from .errors import CdpError, ConfigError, ParameterError
from .evaluation import ExperimentConfig, auc, one_class_threshold, run_experiment, select_threshold, stability_frame, stability_study
from .file import File
from .helper import derive_seed, thread_map
from .metrics import ALL_METRICS, DEFAULT_MU, MetricSuite, orientation_of
from .plots import roc_figure, stability_figure
from .settings import Settings
from .template import Template, generate_template

log = logging.getLogger(__name__)

IfExists, BorderMode, MetricId, Orientation = Enums.IfExists, Enums.BorderMode, Enums.MetricId, Enums.Orientation

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
LOG_LEVELS = (logging.WARNING, logging.INFO, logging.DEBUG)


@dataclass(frozen=True)
class RunConfig:
    """A flat JSON config file: the keys of ExperimentConfig plus the run's output directory ('out') and log verbosity ('verbosity')."""

    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    out: Optional[str] = None
    verbosity: int = 0

    RUN_KEYS = ("out", "verbosity")

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any]) -> RunConfig:
        values = dict(mapping)
        run_values = {key: values.pop(key) for key in cls.RUN_KEYS if key in values}
        return cls(experiment=ExperimentConfig.from_mapping(values), out=run_values.get("out"), verbosity=int(run_values.get("verbosity", 0)))

    @classmethod
    def from_file(cls, path: Any, overrides: Mapping[str, Any] = None) -> RunConfig:
        """Load a config file. Entries of 'overrides' replace those of the file."""
        document = File(path).read()
        if not isinstance(document, dict):
            raise ConfigError(f"Config file '{path}' must hold a JSON object, not {type(document).__name__}.")

        return cls.from_mapping(document | dict(overrides or {}))

    def to_mapping(self) -> dict[str, Any]:
        return self.experiment.to_mapping() | {"out": self.out, "verbosity": self.verbosity}


def _settings(args: argparse.Namespace) -> Settings:
    return Settings(if_exists=IfExists(args.if_exists), file_class=File, dir_class=Dir, threads=Maybe(args.threads).else_(Settings.DEFAULT.threads))


def _seed(args: argparse.Namespace) -> int:
    return Maybe(args.seed).else_(0)


def _output_dir(args: argparse.Namespace, default_name: str, configured: str = None) -> Dir:
    settings = _settings(args)
    if (path := Maybe(args.out).else_(configured)) is not None:
        return Dir(path, settings=settings)

    return Dir.from_output_root(settings=settings).new_dir(default_name)


def _input_dir(path: str, args: argparse.Namespace) -> Dir:
    if not Path(path).is_dir():
        raise FileNotFoundError(f"Input directory '{path}' does not exist.")

    return Dir(path, settings=_settings(args))


def _images(directory: Dir) -> list[File]:
    if not (files := list(directory.files("pgm"))):
        raise ParameterError(f"No .pgm files found in '{directory}'.")

    return files


def _input_file(path: str, args: argparse.Namespace) -> File:
    if not Path(path).is_file():
        raise FileNotFoundError(f"Input file '{path}' does not exist.")

    return File(path, settings=_settings(args))


def _with_sidecars(files: Iterable[File]) -> list[File]:
    return [item for file in files for item in ((file, file.sidecar) if file.extension == "pgm" and file.sidecar.exists() else (file,))]


def _write_manifest(file: File, args: argparse.Namespace, config: Mapping[str, Any], inputs: Iterable[File] = (), outputs: Iterable[File] = ()) -> File:
    """Record the command, resolved config, package version and the sha256 of every input and output file."""
    return file.write({
        "command": args.command,
        "version": __version__,
        "config": dict(config),
        "inputs": {str(item): item.digest() for item in _with_sidecars(inputs)},
        "outputs": {item.name: item.digest() for item in _with_sidecars(outputs)},
    })


def _preset(name: str, seed: int, args: argparse.Namespace) -> ChannelParams:
    return ChannelParams.preset(name, seed=seed, k=args.k, blur_sigma=args.blur_sigma, dot_gain_gamma=args.dot_gain_gamma, noise_sigma=args.noise_sigma)


def cmd_gen(args: argparse.Namespace) -> dict[str, Any]:
    """Generate 'n' templates with the derived seeds of the evaluation harness."""
    if args.n < 1:
        raise ParameterError(f"--n must be >= 1, not {args.n}.")

    seed = _seed(args)
    templates = [generate_template(args.L, args.p, seed=derive_seed(seed, 0, index)) for index in range(args.n)]

    out = _output_dir(args, "templates")
    files = [template.to_file(out.new_file(f"t{index:04d}", "pgm")) for index, template in enumerate(templates)]
    _write_manifest(out.new_file("manifest", "json"), args, {"n": args.n, "L": args.L, "p": args.p, "seed": seed}, outputs=files)
    return {"command": "gen", "out": str(out), "files": len(files)}


def cmd_print(args: argparse.Namespace) -> dict[str, Any]:
    """Print every template of a directory through a preset channel."""
    params = _preset(args.preset, derive_seed(_seed(args), 1), args)
    inputs = _images(_input_dir(args.input, args))
    out = _output_dir(args, f"printed-{args.preset}")

    def print_one(item: tuple[int, File]) -> File:
        index, file = item
        return print_code(Template.from_file(file), params, index=index).to_file(out.new_file(file.stem, "pgm"), params)

    files = thread_map(print_one, list(enumerate(inputs)), _settings(args).threads)
    _write_manifest(out.new_file("manifest", "json"), args, {"preset": args.preset, "params": asdict(params)}, inputs=inputs, outputs=files)
    return {"command": "print", "out": str(out), "files": len(files), "params": params.digest()}


def cmd_attack(args: argparse.Namespace) -> dict[str, Any]:
    """Estimate every printed original of a directory and reprint the estimate on the attacker's channel."""
    params = _preset(args.reprint, derive_seed(_seed(args), 2), args)
    inputs = _images(_input_dir(args.input, args))
    out = _output_dir(args, f"fakes-{args.reprint}")

    def attack_one(item: tuple[int, File]) -> File:
        index, file = item
        return make_fake(PrintedImage.from_file(file), params, index=index).to_file(out.new_file(file.stem, "pgm"), params)

    files = thread_map(attack_one, list(enumerate(inputs)), _settings(args).threads)
    _write_manifest(out.new_file("manifest", "json"), args, {"reprint": args.reprint, "params": asdict(params)}, inputs=inputs, outputs=files)
    return {"command": "attack", "out": str(out), "files": len(files), "params": params.digest()}


def _pairs(templates_path: str, printed_path: str, args: argparse.Namespace) -> tuple[list[tuple[Template, PrintedImage]], list[File]]:
    templates, printed = _images(_input_dir(templates_path, args)), _images(_input_dir(printed_path, args))
    if len(templates) != len(printed):
        raise ParameterError(f"Found {len(templates)} templates in '{templates_path}' but {len(printed)} printed images in '{printed_path}'.")

    return [(Template.from_file(t_file), PrintedImage.from_file(x_file)) for t_file, x_file in zip(templates, printed)], templates + printed


def cmd_train(args: argparse.Namespace) -> dict[str, Any]:
    """Train a codebook on paired template and printed-original directories (paired in sorted file name order)."""
    pairs, inputs = _pairs(args.templates, args.printed, args)
    codebook = train_codebook(pairs, h=args.h, border_mode=args.border, epsilon=args.epsilon, threads=_settings(args).threads)

    file = File(args.out, settings=_settings(args)) if args.out is not None else Dir.from_output_root(settings=_settings(args)).new_file("codebook", "json")
    if file.extension != "json":
        raise ParameterError(f"Codebooks are written as JSON, not to '{file}'.")

    codebook.save(file)
    config = {"h": args.h, "border_mode": args.border, "epsilon": args.epsilon, "estimator_id": codebook.estimator_id}
    _write_manifest(file.parent.new_file(f"{file.stem}.manifest", "json"), args, config, inputs=inputs, outputs=[file])
    return {"command": "train", "out": str(file), "entries": len(codebook), "symbols": codebook.total.count, "P_b": codebook.global_P_b, "digest": codebook.digest()}


def _oriented(metric: MetricId, raw: float) -> float:
    return raw if orientation_of(metric) is Orientation.HIGHER_IS_ORIGINAL else -raw


def cmd_auth(args: argparse.Namespace) -> dict[str, Any]:
    """
    Score one probe against its template and decide 'original' or 'fake'. The threshold is either given explicitly (in the metric's own units), chosen on
    validation originals and fakes with the threshold rule, or, without validation fakes, set so that at most a fraction 'alpha' of validation originals
    would be rejected.
    """
    metric = MetricId(args.metric)
    template_file, probe_file, codebook_file = (_input_file(path, args) for path in (args.template, args.probe, args.codebook))
    codebook = Codebook.load(codebook_file)
    border_mode = BorderMode(Maybe(args.border).else_(codebook.border_mode))

    def score(t: Template, probe: PrintedImage) -> float:
        return MetricSuite(t, codebook, mu=args.mu, border_mode=border_mode).score(probe, [metric])[metric].oriented

    inputs = [template_file, probe_file, codebook_file]
    if args.threshold is not None:
        threshold, source = _oriented(metric, args.threshold), "explicit"
    elif args.val_templates is not None and args.val_originals is not None:
        pairs, files = _pairs(args.val_templates, args.val_originals, args)
        inputs += files
        val_orig = [score(t, x) for t, x in pairs]
        if args.val_fakes is not None:
            fakes = _images(_input_dir(args.val_fakes, args))
            if len(fakes) != len(pairs):
                raise ParameterError(f"Found {len(pairs)} validation templates but {len(fakes)} validation fakes in '{args.val_fakes}'.")
            inputs += fakes
            val_fake = [score(t, PrintedImage.from_file(file)) for (t, _), file in zip(pairs, fakes)]
            threshold, source = select_threshold(val_orig, val_fake, args.rule).value, f"validation ({args.rule}, AUC {auc(val_orig, val_fake):.4f})"
        else:
            threshold, source = one_class_threshold(val_orig, args.alpha).value, f"one-class (alpha={args.alpha})"
    else:
        raise ParameterError("auth needs either --threshold or --val-templates with --val-originals.")

    t, probe = Template.from_file(template_file), PrintedImage.from_file(probe_file)
    result = MetricSuite(t, codebook, mu=args.mu, border_mode=border_mode).score(probe, [metric])[metric]
    decision = "original" if result.oriented >= threshold else "fake"
    log.info(f"{metric.value} = {result.value} against threshold {threshold} ({source}): {decision}")

    out = _output_dir(args, "auth")
    config = {"metric": metric.value, "mu": args.mu, "border_mode": border_mode.value, "threshold": args.threshold, "rule": args.rule, "alpha": args.alpha}
    _write_manifest(out.new_file("manifest", "json"), args, config, inputs=inputs)
    return {"command": "auth", "metric": metric.value, "score": result.value, "oriented_score": result.oriented, "threshold": threshold, "threshold_source": source,
            "decision": decision, "fallback_count": result.fallback_count, "degenerate": result.degenerate}


def _overrides(pairs: Sequence[str]) -> dict[str, str]:
    overrides = {}
    for pair in pairs or ():
        key, sep, value = pair.partition("=")
        if not sep:
            raise ConfigError(f"--set expects 'key=value', not '{pair}'.")
        overrides[key.strip()] = value.strip()

    return overrides


def _run_config(args: argparse.Namespace) -> tuple[RunConfig, list[File]]:
    overrides = _overrides(args.set)
    if args.config is None:
        run, inputs = RunConfig.from_mapping(overrides), []
    else:
        config_file = _input_file(args.config, args)
        run, inputs = RunConfig.from_file(config_file, overrides), [config_file]

    experiment = run.experiment
    if args.seed is not None:
        experiment = replace(experiment, seed=args.seed)
    if args.threads is not None:
        experiment = replace(experiment, threads=args.threads)
    if run.verbosity > args.verbose:
        logging.getLogger("cdpauth").setLevel(LOG_LEVELS[min(run.verbosity, len(LOG_LEVELS) - 1)])

    return replace(run, experiment=experiment), inputs


def _table_csv(table: pd.DataFrame) -> pd.DataFrame:
    flat = table.copy()
    flat.columns = [f"{printer}:{fake}" for printer, fake in flat.columns]
    return flat.reset_index()


def cmd_eval(args: argparse.Namespace) -> dict[str, Any]:
    """Run the simulated evaluation grid and write the AUC reports, ROC points and ROC figures."""
    run, inputs = _run_config(args)
    cfg = run.experiment
    report = run_experiment(cfg)
    out = _output_dir(args, "eval", configured=run.out)

    outputs = [
        out.new_file("auc_runs", "csv").write(report.frame()),
        out.new_file("auc_summary", "csv").write(report.summary()),
        out.new_file("summary", "json").write(report.to_summary()),
    ]
    outputs += [out.new_file(f"auc_table_{mode}", "csv").write(_table_csv(report.table(mode))) for mode in cfg.border_modes]

    roc_points = pd.concat([curve.frame().assign(border_mode=mode, printer=printer, fake=fake, metric=metric)
                            for (mode, printer, fake, metric), curve in sorted(report.rocs.items())], ignore_index=True)
    outputs.append(out.new_file("roc_points", "csv").write(roc_points[["border_mode", "printer", "fake", "metric", "fpr", "tpr", "threshold"]]))
    outputs += [out.new_file(f"roc_{mode}_{printer}", "svg").write(roc_figure(report, printer, mode)) for mode in cfg.border_modes for printer in cfg.printers]

    _write_manifest(out.new_file("manifest", "json"), args, run.to_mapping(), inputs=inputs, outputs=outputs)
    return {"command": "eval", "out": str(out), "totals": report.to_summary()["totals"]}


def _sizes(text: str) -> list[int]:
    try:
        return [int(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise ParameterError(f"--sizes expects comma-separated integers, not '{text}'.")


def cmd_stability(args: argparse.Namespace) -> dict[str, Any]:
    """Distance of codebooks trained on subsets of growing size to the reference codebook, as a CSV curve and an SVG figure."""
    run, inputs = _run_config(args)
    printer = Maybe(args.printer).else_(next(iter(run.experiment.printers)))
    if printer not in run.experiment.printers:
        raise ParameterError(f"Unknown printer '{printer}'. Configured printers: {', '.join(run.experiment.printers)}.")

    curve = stability_study(_sizes(args.sizes), args.reference, args.repeats, run.experiment, printer=printer)
    out = _output_dir(args, "stability", configured=run.out)
    outputs = [out.new_file("stability", "csv").write(stability_frame(curve)), out.new_file("stability", "svg").write(stability_figure(curve, printer))]

    config = run.to_mapping() | {"sizes": args.sizes, "reference": args.reference, "repeats": args.repeats, "printer": printer}
    _write_manifest(out.new_file("manifest", "json"), args, config, inputs=inputs, outputs=outputs)
    return {"command": "stability", "out": str(out), "curve": stability_frame(curve).to_dict(orient="records")}


def _add_channel_overrides(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--k", type=int, help="override the preset magnification")
    parser.add_argument("--blur-sigma", type=float, help="override the preset blur sigma")
    parser.add_argument("--dot-gain-gamma", type=float, help="override the preset dot gain exponent")
    parser.add_argument("--noise-sigma", type=float, help="override the preset noise sigma")


def _add_config_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat JSON config file (schema_version 1)")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config entry, may be repeated")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cdpauth", description="Copy detection pattern channel modelling and one-class authentication.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--seed", type=int, help="root seed (default 0, or the config's seed)")
    parser.add_argument("--threads", type=int, help="worker threads")
    parser.add_argument("--json", action="store_true", help="print a JSON result on stdout")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG logging")
    parser.add_argument("--if-exists", choices=[member.value for member in IfExists], default=IfExists.ALLOW.value, help="policy for existing outputs")
    sub = parser.add_subparsers(dest="command", metavar="command")

    gen = sub.add_parser("gen", help="generate random templates")
    gen.add_argument("--n", type=int, default=1)
    gen.add_argument("--L", type=int, default=228)
    gen.add_argument("--p", type=float, default=0.5)
    gen.add_argument("--out")
    gen.set_defaults(func=cmd_gen)

    print_ = sub.add_parser("print", help="print templates through a simulated channel")
    print_.add_argument("--preset", required=True)
    print_.add_argument("--in", dest="input", required=True)
    print_.add_argument("--out")
    _add_channel_overrides(print_)
    print_.set_defaults(func=cmd_print)

    attack = sub.add_parser("attack", help="estimate printed originals and reprint them")
    attack.add_argument("--reprint", required=True)
    attack.add_argument("--in", dest="input", required=True)
    attack.add_argument("--out")
    _add_channel_overrides(attack)
    attack.set_defaults(func=cmd_attack)

    train = sub.add_parser("train", help="train a codebook")
    train.add_argument("--templates", required=True)
    train.add_argument("--printed", required=True)
    train.add_argument("--h", type=int, default=3)
    train.add_argument("--border", choices=[member.value for member in BorderMode], default=BorderMode.INTERIOR.value)
    train.add_argument("--epsilon", type=float, default=1e-4)
    train.add_argument("--out")
    train.set_defaults(func=cmd_train)

    auth = sub.add_parser("auth", help="authenticate one probe")
    auth.add_argument("--template", required=True)
    auth.add_argument("--probe", required=True)
    auth.add_argument("--codebook", required=True)
    auth.add_argument("--metric", choices=[metric.value for metric in ALL_METRICS], default=MetricId.M_LLS.value)
    auth.add_argument("--mu", type=float, default=DEFAULT_MU)
    auth.add_argument("--border", choices=[member.value for member in BorderMode])
    auth.add_argument("--threshold", type=float)
    auth.add_argument("--val-templates")
    auth.add_argument("--val-originals")
    auth.add_argument("--val-fakes")
    auth.add_argument("--rule", default="eer", help="'eer' or 'tpr_at_fpr:<alpha>'")
    auth.add_argument("--alpha", type=float, default=0.05, help="rejected fraction of validation originals without validation fakes")
    auth.add_argument("--out")
    auth.set_defaults(func=cmd_auth)

    eval_ = sub.add_parser("eval", help="run the simulated evaluation grid")
    _add_config_args(eval_)
    eval_.add_argument("--out")
    eval_.set_defaults(func=cmd_eval)

    stability = sub.add_parser("stability", help="codebook stability against training set size")
    _add_config_args(stability)
    stability.add_argument("--sizes", default="1,2,5,10,20,50,100")
    stability.add_argument("--reference", type=int, default=720)
    stability.add_argument("--repeats", type=int, default=10)
    stability.add_argument("--printer")
    stability.add_argument("--out")
    stability.set_defaults(func=cmd_stability)

    return parser


def _emit(result: Mapping[str, Any], as_json: bool) -> None:
    if as_json:
        print(simplejson.dumps(result, sort_keys=True, ignore_nan=True))
    else:
        for key, value in result.items():
            print(f"{key}: {value}")


def main(argv: Sequence[str] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=LOG_LEVELS[min(args.verbose, len(LOG_LEVELS) - 1)], format=LOG_FORMAT, stream=sys.stderr)

    if getattr(args, "func", None) is None:
        parser.print_usage(sys.stderr)
        return 2

    try:
        result = args.func(args)
    except (ValueError, FileNotFoundError) as ex:
        print(f"cdpauth: error: {ex}", file=sys.stderr)
        return 2
    except (CdpError, OSError) as ex:
        print(f"cdpauth: error: {ex}", file=sys.stderr)
        return 1

    _emit(result, args.json)
    return 0
