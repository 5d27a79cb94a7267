import numpy as np
import pytest

from cdpauth import (ChannelParams, Codebook, ExperimentConfig, EvalReport, Template, auc, estimate_template, make_fake, one_class_threshold, print_code,
                     roc_curve, run_experiment, select_threshold, stability_study)
from cdpauth.errors import ConfigError, ParameterError
from cdpauth.evaluation import FakeType, SimulatedDataset, ThresholdRule, error_rates, select_mu, stability_frame
from cdpauth.metrics import ALL_METRICS, MU_GRID


def brute_force_auc(orig: np.ndarray, fake: np.ndarray) -> float:
    return float(np.mean([(o > f) + 0.5 * (o == f) for o in orig for f in fake]))


@pytest.fixture(scope="module")
def small_config() -> ExperimentConfig:
    return ExperimentConfig(n_templates=12, L=24, n_train=4, n_val=4, n_test=4, run_seeds=(0,), seed=5)


@pytest.fixture(scope="module")
def small_report(small_config: ExperimentConfig) -> EvalReport:
    return run_experiment(small_config)


class TestAuc:
    def test_matches_pair_counting(self, rng: np.random.Generator):  # synced
        for _ in range(1000):
            n, m = rng.integers(1, 12, size=2)
            orig, fake = rng.integers(0, 6, size=n).astype(float), rng.integers(0, 6, size=m).astype(float)
            assert auc(orig, fake) == pytest.approx(brute_force_auc(orig, fake), abs=1e-12)

    def test_bounds(self):  # synced
        assert auc([2.0, 3.0], [0.0, 1.0]) == 1.0
        assert auc([0.0, 1.0], [2.0, 3.0]) == 0.0
        assert auc([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.5

    def test_large_inputs(self, rng: np.random.Generator):  # synced
        orig, fake = rng.normal(1.0, 1.0, size=6000), rng.normal(0.0, 1.0, size=6000)
        assert 0.7 < auc(orig, fake) < 0.8
        assert auc(orig + 100.0, fake) == 1.0

    def test_empty(self):  # synced
        with pytest.raises(ParameterError):
            auc([], [1.0])


class TestRocCurve:
    def test_area_matches_auc(self, rng: np.random.Generator):  # synced
        for _ in range(50):
            orig, fake = rng.integers(0, 10, size=15).astype(float), rng.normal(3.0, 3.0, size=20).round(1)
            assert abs(roc_curve(orig, fake).area() - auc(orig, fake)) < 1e-12

    def test_endpoints(self):  # synced
        curve = roc_curve([2.0, 3.0], [0.0, 1.0])
        assert curve.points[0] == (0.0, 0.0) and curve.points[-1] == (1.0, 1.0)
        assert list(curve.frame().columns) == ["fpr", "tpr", "threshold"] and len(curve.frame()) == len(curve)


class TestThresholds:
    def test_rule_parsing(self):  # synced
        rule = ThresholdRule.parse("tpr_at_fpr:0.01")
        assert (rule.kind, rule.alpha, str(rule)) == ("tpr_at_fpr", 0.01, "tpr_at_fpr:0.01")
        assert str(ThresholdRule.parse("eer")) == "eer"

        with pytest.raises(ParameterError):
            ThresholdRule.parse("median")

    def test_eer_separable(self):  # synced
        threshold = select_threshold([3.0, 4.0, 5.0], [0.0, 1.0, 2.0])
        assert threshold.value == 2.5 and threshold.fpr == 0.0 and threshold.tpr == 1.0

    def test_tpr_at_fpr(self):  # synced
        orig, fake = [1.0, 2.0, 3.0, 4.0], [0.0, 1.5, 2.5]
        assert select_threshold(orig, fake, "tpr_at_fpr:0") == (2.75, 0.0, 0.5)
        assert select_threshold(orig, fake, "tpr_at_fpr:0.34") == (2.25, pytest.approx(1 / 3), 0.75)

    def test_one_class(self):  # synced
        threshold = one_class_threshold(np.arange(100.0), alpha=0.05)
        assert threshold.value == 5.0 and threshold.tpr == 0.95 and np.isnan(threshold.fpr)
        assert one_class_threshold([4.0, 2.0, 3.0], alpha=0.0).value == 2.0

        with pytest.raises(ParameterError):
            one_class_threshold([1.0], alpha=1.0)

    def test_error_rates(self):  # synced
        fpr, fnr = error_rates([1.0, 2.0, 3.0], [0.0, 2.0], 2.0)
        assert fpr == 0.5 and fnr == pytest.approx(1 / 3)


class TestFakeType:
    def test_parse(self):  # synced
        fake = FakeType.parse("A/B")
        assert (fake.reprint, fake.source, fake.label) == ("A", "B", "A/B")

        with pytest.raises(ConfigError):
            FakeType.parse("AB")


class TestExperimentConfig:
    def test_defaults(self):  # synced
        cfg = ExperimentConfig()
        assert (cfg.n_templates, cfg.L, cfg.n_train, cfg.n_val, cfg.n_test, cfg.k) == (100, 228, 20, 20, 60, 3)
        assert [fake.label for fake in cfg.fake_grid] == ["A/A", "A/B", "B/A", "B/B"] and len(cfg.metrics) == 8

    def test_from_mapping(self):  # synced
        cfg = ExperimentConfig.from_mapping({"n_templates": "12", "L": 24, "n_train": 4, "n_val": 4, "n_test": 4, "run_seeds": "0, 1",
                                             "metrics": ["LLS", "M-LLS"], "printer.B.blur_sigma": "2.0", "mu_search": "true"})
        assert cfg.run_seeds == (0, 1) and cfg.metrics == ("LLS", "M-LLS") and cfg.mu_search
        assert cfg.printers["B"] == ChannelParams.preset("B", blur_sigma=2.0) and cfg.printers["A"] == ChannelParams.preset("A")

    def test_mapping_is_complete(self, small_config: ExperimentConfig):  # synced
        assert ExperimentConfig.from_mapping(small_config.to_mapping()) == small_config

    @pytest.mark.parametrize("mapping", [
        {"n_templates": 10},
        {"printer.B.k": 2},
        {"printer.B.shade": 2},
        {"fake_grid": "A/A,A/B,B/A,C/B"},
        {"metrics": "LLS,FOO"},
        {"border_modes": "edge"},
        {"threshold_rule": "median"},
        {"L": "large"},
        {"schema_version": 2},
        {"colour": "red"},
        {"run_seeds": ""},
    ])
    def test_invalid(self, mapping: dict):  # synced
        with pytest.raises(ConfigError):
            ExperimentConfig.from_mapping(mapping)


class TestSimulatedDataset:
    def test_probes(self, small_config: ExperimentConfig):  # synced
        dataset = SimulatedDataset(small_config)
        probes = dataset.probes(3)
        assert sorted(probes) == ["f:A/A", "f:A/B", "f:B/A", "f:B/B", "x:A", "x:B"]
        assert probes["x:A"] == dataset.original("A", 3) and probes["x:A"] != probes["x:B"]
        assert all(image.pixels.shape == (72, 72) for image in probes.values())

    def test_templates_are_reproducible(self, small_config: ExperimentConfig):  # synced
        assert SimulatedDataset(small_config).template(7) == SimulatedDataset(small_config).template(7) != SimulatedDataset(small_config).template(8)

    def test_partial_codebooks_merge(self, small_config: ExperimentConfig):  # synced
        dataset = SimulatedDataset(small_config)
        merged = dataset.partial_codebook("A", 0, "interior").merge(dataset.partial_codebook("A", 1, "interior"))
        assert merged.total.count == 2 * 22 * 22


class TestSelectMu:
    def test_returns_grid_value(self, codebook: Codebook, preset_a: ChannelParams, template: Template):  # synced
        items = []
        for index in range(3):
            original = print_code(template, preset_a, index=20 + index)
            fake = make_fake(original, ChannelParams.preset("B", seed=3), index=index)
            items.append((template, estimate_template(original), [estimate_template(fake)]))

        assert select_mu(items, codebook) in MU_GRID
        assert select_mu(items, codebook, grid=[0.3]) == 0.3


class TestRunExperiment:
    def test_records(self, small_report: EvalReport):  # synced
        frame = small_report.frame()
        assert len(frame) == 2 * 4 * 8 and len(small_report.rocs) == len(frame)
        assert frame["auc"].between(0.0, 1.0).all() and (frame["mu"] == 0.25).all()
        assert set(frame["metric"]) == {metric.value for metric in ALL_METRICS}

    def test_table(self, small_report: EvalReport):  # synced
        table = small_report.table()
        assert list(table.index) == list(small_report.config.metrics) and table.shape == (8, 11)
        assert table.columns[-1] == ("total", "average")
        assert small_report.total("M-LLS") == pytest.approx(table.loc["M-LLS", [("A", label) for label in ("A/A", "A/B", "B/A", "B/B")]
                                                                       + [("B", label) for label in ("A/A", "A/B", "B/A", "B/B")]].mean())

    def test_summary(self, small_report: EvalReport):  # synced
        summary = small_report.to_summary()
        assert set(summary) == {"config", "cells", "totals"} and len(summary["cells"]) == 64
        assert (small_report.summary()["auc_std"] == 0.0).all()

    def test_deterministic(self, small_config: ExperimentConfig, small_report: EvalReport):  # synced
        rerun = run_experiment(ExperimentConfig.from_mapping(small_config.to_mapping() | {"threads": 2}))
        assert rerun.frame().equals(small_report.frame())

    def test_mu_search(self, small_config: ExperimentConfig):  # synced
        cfg = ExperimentConfig.from_mapping(small_config.to_mapping() | {"mu_search": True, "metrics": ["M-LLS", "LLS"]})
        frame = run_experiment(cfg).frame()
        assert frame["mu"].isin(MU_GRID).all() and len(frame) == 2 * 4 * 2

    def test_both_border_modes(self, small_config: ExperimentConfig):  # synced
        cfg = ExperimentConfig.from_mapping(small_config.to_mapping() | {"border_modes": "interior,white_pad", "metrics": "LLS"})
        report = run_experiment(cfg)
        assert set(report.frame()["border_mode"]) == {"interior", "white_pad"} and report.table("white_pad").shape == (1, 11)

    def test_clonable_channel_gives_chance_level(self):  # synced
        near_ideal = ChannelParams(blur_sigma=0.05, dot_gain_gamma=1.0, noise_sigma=0.0)
        cfg = ExperimentConfig(n_templates=12, L=24, n_train=4, n_val=4, n_test=4, run_seeds=(0, 1), seed=5, printers={"A": near_ideal, "B": near_ideal})
        assert (run_experiment(cfg).frame()["auc"] == 0.5).all()


class TestStabilityStudy:
    def test_full_subset_reproduces_reference(self, small_config: ExperimentConfig):  # synced
        curve = stability_study([1, 3, 6], n_reference=6, repeats=2, cfg=small_config)
        assert [point.size for point in curve] == [1, 3, 6]
        assert curve[-1].mean_d1 == 0.0 and curve[-1].std_d1 == 0.0 and curve[0].mean_d1 > 0.0
        assert list(stability_frame(curve).columns) == ["size", "mean_d1", "std_d1"]

    @pytest.mark.parametrize("sizes, repeats", [([0], 1), ([7], 1), ([], 1), ([2], 0)])
    def test_invalid(self, small_config: ExperimentConfig, sizes: list, repeats: int):  # synced
        with pytest.raises(ParameterError):
            stability_study(sizes, n_reference=6, repeats=repeats, cfg=small_config)
