from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, asdict, replace
from functools import reduce
from typing import Any, Callable, Iterable, Mapping, NamedTuple, Sequence, TypeVar, Union

import numpy as np
import pandas as pd
from sklearn import metrics as skmetrics

from .channel import ChannelParams, PrintedImage, make_fake, print_code
from .codebook import Codebook, codebook_distance, lineage_of, merge
from .enums import Enums
from .errors import CdpError, ConfigError, ParameterError
from .estimator import EstimatedTemplate, Estimator
from .helper import derive_seed, make_rng, thread_map
from .metrics import ALL_METRICS, DEFAULT_MU, MU_GRID, MetricSuite, build_mask, lls_score
from .template import Template, generate_template

log = logging.getLogger(__name__)

MetricId, BorderMode = Enums.MetricId, Enums.BorderMode
T = TypeVar("T")

SCHEMA_VERSION = 1
EXACT_AUC_LIMIT = 10_000
PRINTER_FIELDS = {"k": int, "blur_sigma": float, "dot_gain_gamma": float, "noise_sigma": float}


def _scores(values: Iterable[float], name: str) -> np.ndarray:
    array = np.asarray(list(values), dtype=np.float64)
    if not len(array):
        raise ParameterError(f"The {name} score list is empty.")

    return array


def auc(orig_scores: Iterable[float], fake_scores: Iterable[float]) -> float:
    """
    Probability that a random original outscores a random fake, ties counting one half. Scores must be oriented so that higher means 'original'.
    Up to 10⁴ scores in total the pairs are counted exactly; beyond that the rank-based estimate of scikit-learn is used.
    """
    orig, fake = _scores(orig_scores, "original"), _scores(fake_scores, "fake")

    if len(orig) + len(fake) > EXACT_AUC_LIMIT:
        labels = np.concatenate([np.ones(len(orig)), np.zeros(len(fake))])
        return float(skmetrics.roc_auc_score(labels, np.concatenate([orig, fake])))

    ordered = np.sort(fake)
    below, up_to = np.searchsorted(ordered, orig, side="left"), np.searchsorted(ordered, orig, side="right")
    greater, ties = int(below.sum()), int((up_to - below).sum())
    return (2 * greater + ties) / (2 * len(orig) * len(fake))


@dataclass(frozen=True, eq=False)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray

    def __len__(self) -> int:
        return len(self.fpr)

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))

    def area(self) -> float:
        """Trapezoidal area under the curve."""
        return float(skmetrics.auc(self.fpr, self.tpr))

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame({"fpr": self.fpr, "tpr": self.tpr, "threshold": self.thresholds})


def roc_curve(orig_scores: Iterable[float], fake_scores: Iterable[float]) -> RocCurve:
    """ROC points at every distinct threshold, sorted by false-positive rate. Its trapezoidal area equals auc() on the same scores."""
    orig, fake = _scores(orig_scores, "original"), _scores(fake_scores, "fake")
    labels = np.concatenate([np.ones(len(orig)), np.zeros(len(fake))])
    fpr, tpr, thresholds = skmetrics.roc_curve(labels, np.concatenate([orig, fake]), drop_intermediate=False)
    return RocCurve(fpr=fpr, tpr=tpr, thresholds=thresholds)


@dataclass(frozen=True)
class ThresholdRule:
    """'eer' picks the equal-error point; 'tpr_at_fpr' the highest true-positive rate whose false-positive rate stays at or below 'alpha'."""

    kind: str = "eer"
    alpha: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("eer", "tpr_at_fpr"):
            raise ParameterError(f"Unknown threshold rule '{self.kind}', expected 'eer' or 'tpr_at_fpr'.")
        if not 0.0 <= self.alpha <= 1.0:
            raise ParameterError(f"alpha must lie in [0, 1], not {self.alpha}.")

    def __str__(self) -> str:
        return self.kind if self.kind == "eer" else f"{self.kind}:{self.alpha:g}"

    @classmethod
    def parse(cls, text: Union[str, ThresholdRule]) -> ThresholdRule:
        if isinstance(text, ThresholdRule):
            return text

        kind, _, alpha = str(text).partition(":")
        return cls(kind=kind.strip(), alpha=float(alpha) if alpha else 0.0)


class Threshold(NamedTuple):
    value: float
    fpr: float
    tpr: float


def _rates(orig: np.ndarray, fake: np.ndarray, thresholds: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """TPR and FPR of the rule 'score >= threshold means original' at each threshold."""
    tpr = (len(orig) - np.searchsorted(np.sort(orig), thresholds, side="left")) / len(orig)
    fpr = (len(fake) - np.searchsorted(np.sort(fake), thresholds, side="left")) / len(fake)
    return tpr, fpr


def candidate_thresholds(orig: np.ndarray, fake: np.ndarray) -> np.ndarray:
    """One threshold per distinct operating point: below all scores, every midpoint between consecutive distinct scores, above all scores."""
    values = np.unique(np.concatenate([orig, fake]))
    return np.concatenate([[values[0] - 1.0], (values[:-1] + values[1:]) / 2.0, [values[-1] + 1.0]])


def select_threshold(val_orig: Iterable[float], val_fake: Iterable[float], rule: Union[ThresholdRule, str] = "eer") -> Threshold:
    """Choose the decision threshold on validation scores. Ties go to the lower false-positive rate, then to the higher threshold."""
    orig, fake, rule = _scores(val_orig, "validation original"), _scores(val_fake, "validation fake"), ThresholdRule.parse(rule)
    candidates = candidate_thresholds(orig, fake)
    tpr, fpr = _rates(orig, fake, candidates)

    if rule.kind == "eer":
        order = np.lexsort((-candidates, fpr, np.abs(fpr - (1.0 - tpr))))
    else:
        feasible = np.flatnonzero(fpr <= rule.alpha)
        order = feasible[np.lexsort((-candidates[feasible], fpr[feasible], -tpr[feasible]))]

    best = order[0]
    return Threshold(value=float(candidates[best]), fpr=float(fpr[best]), tpr=float(tpr[best]))


def one_class_threshold(val_orig: Iterable[float], alpha: float = 0.05) -> Threshold:
    """Threshold from validation originals only: accept every score at or above the floor(alpha·n)-th lowest, so at most a fraction alpha of originals is rejected."""
    if not 0.0 <= alpha < 1.0:
        raise ParameterError(f"alpha must lie in [0, 1), not {alpha}.")

    ordered = np.sort(_scores(val_orig, "validation original"))
    value = float(ordered[int(math.floor(alpha * len(ordered)))])
    return Threshold(value=value, fpr=float("nan"), tpr=float(np.mean(ordered >= value)))


def error_rates(orig: Iterable[float], fake: Iterable[float], threshold: float) -> tuple[float, float]:
    """Return (FPR, FNR) of the rule 'score >= threshold means original'."""
    orig, fake = _scores(orig, "original"), _scores(fake, "fake")
    return float(np.mean(fake >= threshold)), float(np.mean(orig < threshold))


@dataclass(frozen=True)
class FakeType:
    """Fake f^{reprint/source}: estimated from originals printed on 'source' and reprinted on 'reprint'."""

    reprint: str
    source: str

    @property
    def label(self) -> str:
        return f"{self.reprint}/{self.source}"

    @classmethod
    def parse(cls, label: str) -> FakeType:
        reprint, sep, source = label.partition("/")
        if not sep:
            raise ConfigError(f"Fake type '{label}' must read '<reprint>/<source>'.")

        return cls(reprint=reprint, source=source)


def _default_printers() -> dict[str, ChannelParams]:
    return {name: ChannelParams.preset(name) for name in ("A", "B")}


def _default_fakes() -> tuple[FakeType, ...]:
    return tuple(FakeType(reprint=reprint, source=source) for reprint in ("A", "B") for source in ("A", "B"))


def _split_list(value: Any, convert: Callable[[str], T]) -> tuple[T, ...]:
    items = value.split(",") if isinstance(value, str) else value
    return tuple(convert(item.strip() if isinstance(item, str) else item) for item in items)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines an evaluation run. Two equal configs give identical reports."""

    n_templates: int = 100
    L: int = 228
    p: float = 0.5
    n_train: int = 20
    n_val: int = 20
    n_test: int = 60
    printers: Mapping[str, ChannelParams] = field(default_factory=_default_printers)
    fake_grid: tuple[FakeType, ...] = field(default_factory=_default_fakes)
    metrics: tuple[str, ...] = tuple(metric.value for metric in ALL_METRICS)
    h: int = 3
    border_modes: tuple[str, ...] = ("interior",)
    mu: float = DEFAULT_MU
    mu_search: bool = False
    threshold_rule: str = "eer"
    seed: int = 0
    run_seeds: tuple[int, ...] = (0, 1, 2)
    threads: int = 1

    def __post_init__(self) -> None:
        if min(self.n_train, self.n_val, self.n_test) < 1:
            raise ConfigError("Train, validation and test splits must each hold at least one template.")
        if self.n_train + self.n_val + self.n_test > self.n_templates:
            raise ConfigError(f"Splits {self.n_train}+{self.n_val}+{self.n_test} exceed the {self.n_templates} templates.")
        if len(self.printers) != 2 or len(self.fake_grid) != 4:
            raise ConfigError(f"The evaluation grid needs exactly 2 printers and 4 fake types, got {len(self.printers)} and {len(self.fake_grid)}.")
        if missing := {name for fake in self.fake_grid for name in (fake.reprint, fake.source)} - set(self.printers):
            raise ConfigError(f"Fake grid refers to unknown printers: {sorted(missing)}.")
        if len({params.k for params in self.printers.values()}) != 1:
            raise ConfigError("All printers must share one magnification k.")
        if not self.run_seeds:
            raise ConfigError("At least one run seed is required.")

        try:
            for metric in self.metrics:
                MetricId(metric)
            for mode in self.border_modes:
                BorderMode(mode)
            ThresholdRule.parse(self.threshold_rule)
        except ValueError as ex:
            raise ConfigError(f"Invalid experiment configuration: {ex}") from ex

    @property
    def k(self) -> int:
        return next(iter(self.printers.values())).k

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any]) -> ExperimentConfig:
        """
        Build a config from a flat key/value mapping such as a loaded config file. Printer physics are given as 'printer.<name>.<field>' keys on top of the
        named preset (or of preset A for other names). Lists may be given as JSON arrays or comma-separated strings.
        """
        values = dict(mapping)
        if (version := values.pop("schema_version", SCHEMA_VERSION)) != SCHEMA_VERSION:
            raise ConfigError(f"Unsupported config schema_version {version!r}, expected {SCHEMA_VERSION}.")

        printer_values: dict[str, dict[str, Any]] = {}
        for key in [key for key in values if key.startswith("printer.")]:
            parts = key.split(".")
            if len(parts) != 3 or parts[2] not in PRINTER_FIELDS:
                raise ConfigError(f"Invalid printer key '{key}'. Use 'printer.<name>.<{'|'.join(PRINTER_FIELDS)}>'.")
            printer_values.setdefault(parts[1], {})[parts[2]] = values.pop(key)

        converters: dict[str, Callable[[Any], Any]] = {
            "n_templates": int, "L": int, "p": float, "n_train": int, "n_val": int, "n_test": int, "h": int, "mu": float, "seed": int, "threads": int,
            "mu_search": lambda value: value if isinstance(value, bool) else str(value).lower() in ("1", "true", "yes"),
            "threshold_rule": str,
            "metrics": lambda value: _split_list(value, str),
            "border_modes": lambda value: _split_list(value, str),
            "run_seeds": lambda value: _split_list(value, int),
            "fake_grid": lambda value: _split_list(value, FakeType.parse),
        }
        if unknown := set(values) - set(converters):
            raise ConfigError(f"Unknown config keys: {sorted(unknown)}.")

        try:
            kwargs = {key: converters[key](value) for key, value in values.items()}
            if printer_values:
                printers = _default_printers()
                for name, overrides in printer_values.items():
                    printers[name] = replace(printers.get(name, printers["A"]), **{param: PRINTER_FIELDS[param](value) for param, value in overrides.items()})
                kwargs["printers"] = printers
            return cls(**kwargs)
        except (TypeError, ValueError) as ex:
            raise ConfigError(f"Invalid experiment configuration: {ex}") from ex

    def to_mapping(self) -> dict[str, Any]:
        mapping = {"schema_version": SCHEMA_VERSION}
        for key, value in asdict(self).items():
            if key == "printers":
                for name, params in self.printers.items():
                    mapping.update({f"printer.{name}.{param}": val for param, val in asdict(params).items() if param != "seed"})
            elif key == "fake_grid":
                mapping[key] = [fake.label for fake in self.fake_grid]
            else:
                mapping[key] = list(value) if isinstance(value, tuple) else value

        return mapping


class SimulatedDataset:
    """
    Templates, originals and fakes of an experiment, recomputed on demand from the config's seed so that no image has to be kept in memory.

    Template i is drawn with seed derive(seed, 0, i). Originals of the printer at position p use the channel seed derive(seed, 1, p), and fakes of the
    fake type at position f use the attacker's channel seed derive(seed, 2, f); every print of template i uses stream i of its channel.
    """

    def __init__(self, cfg: ExperimentConfig, estimator: Estimator = None) -> None:
        self.cfg = cfg
        self.estimator = estimator if estimator is not None else Estimator.from_id("otsu-mv")
        self.printers = {name: params.with_seed(derive_seed(cfg.seed, 1, position)) for position, (name, params) in enumerate(cfg.printers.items())}
        self.reprinters = {fake.label: self.printers[fake.reprint].with_seed(derive_seed(cfg.seed, 2, position)) for position, fake in enumerate(cfg.fake_grid)}
        self._templates: dict[int, Template] = {}

    def __repr__(self) -> str:
        return f"{type(self).__name__}(n_templates={self.cfg.n_templates}, L={self.cfg.L}, printers={list(self.printers)})"

    def __len__(self) -> int:
        return self.cfg.n_templates

    def template(self, index: int) -> Template:
        if index not in self._templates:
            self._templates[index] = generate_template(self.cfg.L, self.cfg.p, seed=derive_seed(self.cfg.seed, 0, index))

        return self._templates[index]

    def original(self, printer: str, index: int) -> PrintedImage:
        return print_code(self.template(index), self.printers[printer], index=index)

    def probes(self, index: int) -> dict[str, PrintedImage]:
        """Every probe of one template: 'x:<printer>' originals and 'f:<reprint>/<source>' fakes."""
        originals = {name: self.original(name, index) for name in self.printers}
        fakes = {fake.label: make_fake(originals[fake.source], self.reprinters[fake.label], estimator=self.estimator, index=index) for fake in self.cfg.fake_grid}
        return {f"x:{name}": image for name, image in originals.items()} | {f"f:{label}": image for label, image in fakes.items()}

    def partial_codebook(self, printer: str, index: int, border_mode: BorderMode) -> Codebook:
        """Training contribution of one (template, original) pair."""
        original = self.original(printer, index)
        return Codebook.from_estimate(self.template(index), self.estimator.estimate(original, self.cfg.k), h=self.cfg.h, k=self.cfg.k,
                                      border_mode=border_mode, lineage=lineage_of([original]))


def select_mu(val_items: Sequence[tuple[Template, EstimatedTemplate, Sequence[EstimatedTemplate]]], cb: Codebook, grid: Sequence[float] = MU_GRID) -> float:
    """
    Pick the attention threshold μ on validation data: for each μ in the grid, the validation AUC of M-LLS between originals and the pooled fakes is
    computed, and the first μ reaching the best AUC wins.
    """
    best_mu, best_auc = grid[0], -1.0
    for mu in grid:
        orig, fake = [], []
        for t, original, fakes in val_items:
            mask = build_mask(t, cb, mu=mu)
            orig.append(lls_score(original, t, cb, border_mode=mask.border_mode, mask=mask).value)
            fake.extend(lls_score(estimate, t, cb, border_mode=mask.border_mode, mask=mask).value for estimate in fakes)

        if (value := auc(orig, fake)) > best_auc:
            best_mu, best_auc = mu, value

    log.info(f"Selected mu={best_mu} (validation M-LLS AUC {best_auc:.4f})")
    return best_mu


@dataclass
class EvalReport:
    """
    Results of 'run_experiment'. 'records' hold one row per run × border mode × (printer, fake) cell × metric; everything else is derived from them.
    'rocs' keeps the ROC curve of every cell and metric for the first run seed.
    """

    config: ExperimentConfig
    records: list[dict[str, Any]] = field(default_factory=list)
    rocs: dict[tuple[str, str, str, str], RocCurve] = field(default_factory=dict)

    KEYS = ["border_mode", "printer", "fake", "metric"]

    def __repr__(self) -> str:
        return f"{type(self).__name__}(runs={len(self.config.run_seeds)}, records={len(self.records)})"

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame.from_records(self.records, columns=["run_seed", *self.KEYS, "auc", "threshold", "test_fpr", "test_fnr", "mu"])

    def summary(self) -> pd.DataFrame:
        """Mean and standard deviation (over runs) of the AUC of every cell, with the mean test error rates at the validation threshold."""
        grouped = self.frame().groupby(self.KEYS, sort=True)
        return grouped.agg(auc_mean=("auc", "mean"), auc_std=("auc", lambda values: float(np.std(values.to_numpy()))),
                           test_fpr=("test_fpr", "mean"), test_fnr=("test_fnr", "mean")).reset_index()

    def table(self, border_mode: str = None) -> pd.DataFrame:
        """Mean AUC per metric (rows) and (printer, fake) cell (columns), with per-printer averages and the total average over the 8 cells."""
        summary = self.summary()
        summary = summary[summary["border_mode"] == (border_mode or self.config.border_modes[0])]

        table = summary.pivot_table(index="metric", columns=["printer", "fake"], values="auc_mean", sort=True)
        for printer in self.config.printers:
            table[(printer, "average")] = table[printer].mean(axis=1)
        table[("total", "average")] = table[[column for column in table.columns if column[1] != "average"]].mean(axis=1)

        order = [metric for metric in self.config.metrics if metric in table.index]
        columns = [(printer, fake.label) for printer in self.config.printers for fake in self.config.fake_grid] + [(printer, "average") for printer in self.config.printers]
        return table.loc[order, columns + [("total", "average")]]

    def total(self, metric: str, border_mode: str = None) -> float:
        return float(self.table(border_mode).loc[metric, ("total", "average")])

    def to_summary(self) -> dict[str, Any]:
        return {
            "config": self.config.to_mapping(),
            "cells": self.summary().to_dict(orient="records"),
            "totals": {mode: {metric: self.total(metric, mode) for metric in self.config.metrics} for mode in self.config.border_modes},
        }


def _cell_records(run_seed: int, border_mode: str, printer: str, scores: dict, cfg: ExperimentConfig, mu: float) -> tuple[list[dict[str, Any]], dict]:
    rule, records, rocs = ThresholdRule.parse(cfg.threshold_rule), [], {}
    for fake in cfg.fake_grid:
        for metric in cfg.metrics:
            test_orig, test_fake = scores["test"][f"x:{printer}"][metric], scores["test"][f"f:{fake.label}"][metric]
            val_orig, val_fake = scores["val"][f"x:{printer}"][metric], scores["val"][f"f:{fake.label}"][metric]

            threshold = select_threshold(val_orig, val_fake, rule)
            fpr, fnr = error_rates(test_orig, test_fake, threshold.value)
            records.append({"run_seed": run_seed, "border_mode": border_mode, "printer": printer, "fake": fake.label, "metric": metric,
                            "auc": auc(test_orig, test_fake), "threshold": threshold.value, "test_fpr": fpr, "test_fnr": fnr, "mu": mu})
            rocs[(border_mode, printer, fake.label, metric)] = roc_curve(test_orig, test_fake)

    return records, rocs


def run_experiment(cfg: ExperimentConfig) -> EvalReport:
    """
    Evaluate all metrics on the simulated grid: for every run seed the templates are reshuffled into train/validation/test splits, a codebook is trained per
    printer (and border mode) on the training originals, every validation and test probe is scored, and AUCs are collected per (printer, fake) cell.
    """
    dataset, report = SimulatedDataset(cfg), EvalReport(config=cfg)
    partials: dict[tuple[str, str, int], Codebook] = {}

    for run_position, run_seed in enumerate(cfg.run_seeds):
        order = make_rng(run_seed, 3).permutation(cfg.n_templates)
        train, val, test = (order[:cfg.n_train].tolist(), order[cfg.n_train:cfg.n_train + cfg.n_val].tolist(),
                            order[cfg.n_train + cfg.n_val:cfg.n_train + cfg.n_val + cfg.n_test].tolist())

        for mode in cfg.border_modes:
            border_mode = BorderMode(mode)
            try:
                codebooks, mus = {}, {}
                for printer in cfg.printers:
                    missing = [index for index in train if (printer, mode, index) not in partials]
                    for index, partial in zip(missing, thread_map(lambda index: dataset.partial_codebook(printer, index, border_mode), missing, cfg.threads)):
                        partials[(printer, mode, index)] = partial
                    codebooks[printer] = reduce(merge, (partials[(printer, mode, index)] for index in train))

                if cfg.mu_search:
                    estimates = dict(zip(val, thread_map(lambda index: {key: dataset.estimator.estimate(image, cfg.k) for key, image in dataset.probes(index).items()}, val, cfg.threads)))
                    for printer, cb in codebooks.items():
                        items = [(dataset.template(index), estimates[index][f"x:{printer}"], [estimates[index][f"f:{fake.label}"] for fake in cfg.fake_grid]) for index in val]
                        mus[printer] = select_mu(items, cb)
                else:
                    mus = {printer: cfg.mu for printer in cfg.printers}

                def score_template(index: int) -> dict[str, dict[str, dict[str, float]]]:
                    probes = dataset.probes(index)
                    estimates = {key: dataset.estimator.estimate(image, cfg.k) for key, image in probes.items()}
                    result = {}
                    for printer, cb in codebooks.items():
                        suite = MetricSuite(dataset.template(index), cb, mu=mus[printer], border_mode=border_mode)
                        result[printer] = {key: {metric.value: score.oriented for metric, score in suite.score(image, cfg.metrics, t_est=estimates[key]).items()}
                                           for key, image in probes.items() if not key.startswith("x:") or key == f"x:{printer}"}
                    return result

                split_scores = {split: thread_map(score_template, indices, cfg.threads) for split, indices in (("val", val), ("test", test))}
            except CdpError as ex:
                raise type(ex)(f"Run seed {run_seed} (border mode '{mode}') failed: {ex}") from ex

            for printer in cfg.printers:
                scores = {split: {key: {metric: [per_template[printer][key][metric] for per_template in results] for metric in cfg.metrics}
                                  for key in results[0][printer]} for split, results in split_scores.items()}
                records, rocs = _cell_records(run_seed, mode, printer, scores, cfg, mus[printer])
                report.records.extend(records)
                if run_position == 0:
                    report.rocs.update(rocs)

                log.info(f"Run {run_seed} [{mode}] printer {printer}: " + ", ".join(f"{record['metric']}@{record['fake']}={record['auc']:.4f}" for record in records))

    return report


@dataclass(frozen=True)
class StabilityPoint:
    size: int
    mean_d1: float
    std_d1: float


def stability_study(sizes: Sequence[int], n_reference: int, repeats: int, cfg: ExperimentConfig, printer: str = None) -> list[StabilityPoint]:
    """
    Distance of codebooks trained on random subsets of each size to the reference codebook trained on all 'n_reference' (template, original) pairs of one
    printer. Subsets are drawn without replacement; a subset the size of the reference set therefore reproduces the reference exactly.
    """
    sizes = [int(size) for size in sizes]
    if not sizes or min(sizes) < 1 or max(sizes) > n_reference:
        raise ParameterError(f"Training set sizes must lie in [1, {n_reference}], got {sizes}.")
    if repeats < 1:
        raise ParameterError(f"repeats must be >= 1, not {repeats}.")

    printer = printer if printer is not None else next(iter(cfg.printers))
    dataset, border_mode = SimulatedDataset(cfg), BorderMode(cfg.border_modes[0])

    partials = thread_map(lambda index: dataset.partial_codebook(printer, index, border_mode), list(range(n_reference)), cfg.threads)
    reference, rng = reduce(merge, partials), make_rng(cfg.seed, 4)

    curve = []
    for size in sizes:
        distances = [codebook_distance(reduce(merge, (partials[index] for index in sorted(rng.choice(n_reference, size=size, replace=False)))), reference)
                     for _ in range(repeats)]
        curve.append(StabilityPoint(size=size, mean_d1=float(np.mean(distances)), std_d1=float(np.std(distances))))
        log.info(f"Stability: size {size}, d1 = {curve[-1].mean_d1:.5f} ± {curve[-1].std_d1:.5f}")

    return curve


def stability_frame(curve: Sequence[StabilityPoint]) -> pd.DataFrame:
    return pd.DataFrame.from_records([asdict(point) for point in curve], columns=["size", "mean_d1", "std_d1"])
