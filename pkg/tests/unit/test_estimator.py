from fractions import Fraction

import numpy as np
import pytest

from cdpauth import ChannelParams, EstimatedTemplate, Estimator, PrintedImage, Template, estimate_template, generate_template, otsu_threshold, print_code
from cdpauth.estimator import OtsuMajorityEstimator, binarize, majority_vote
from cdpauth.errors import ParameterError, ShapeError


def brute_force_otsu(pixels: np.ndarray) -> float:
    counts = np.histogram(pixels, bins=256, range=(0.0, 1.0))[0].tolist()
    total = sum(counts)
    best, best_boundary = None, None
    for boundary in range(1, 256):
        n_low, n_high = sum(counts[:boundary]), sum(counts[boundary:])
        if not n_low or not n_high:
            continue

        mean_low = Fraction(sum(index * count for index, count in enumerate(counts[:boundary])), n_low)
        mean_high = Fraction(sum((boundary + index) * count for index, count in enumerate(counts[boundary:])), n_high)
        variance = Fraction(n_low, total) * Fraction(n_high, total) * (mean_low - mean_high) ** 2
        if best is None or variance > best:
            best, best_boundary = variance, boundary

    return best_boundary / 256


class TestOtsuThreshold:
    def test_two_levels(self):  # synced
        pixels = np.array([[0.2, 0.8], [0.8, 0.2]])
        threshold = otsu_threshold(pixels)
        assert not threshold.degenerate and threshold.value == 52 / 256

    def test_constant_image(self):  # synced
        threshold = otsu_threshold(np.full((4, 4), 0.3))
        assert threshold.degenerate and threshold.value == 0.3

    def test_single_bin(self):  # synced
        threshold = otsu_threshold(np.array([[0.3, 0.3001]]))
        assert threshold.degenerate and threshold.value == pytest.approx(0.30005)

    def test_matches_exhaustive_search(self, rng: np.random.Generator):  # synced
        for _ in range(100):
            size = int(rng.integers(2, 40))
            low, high = rng.uniform(0.0, 0.5), rng.uniform(0.5, 1.0)
            pixels = np.clip(np.where(rng.random((size, size)) < rng.uniform(0.2, 0.8), low, high) + rng.normal(0.0, 0.08, (size, size)), 0.0, 1.0)
            if pixels.min() == pixels.max():
                continue

            assert otsu_threshold(pixels).value == brute_force_otsu(pixels)

    def test_accepts_printed_images(self):  # synced
        image = PrintedImage(pixels=np.array([[0.1, 0.9], [0.9, 0.9]]), k=1)
        assert otsu_threshold(image) == otsu_threshold(image.pixels)

    def test_empty(self):  # synced
        with pytest.raises(ParameterError):
            otsu_threshold(np.zeros((0, 0)))


class TestBinarize:
    def test_at_or_below_is_black(self):  # synced
        assert binarize(np.array([[0.2, 0.5], [0.50001, 1.0]]), 0.5).tolist() == [[1, 1], [0, 0]]

    def test_pixel_on_otsu_boundary_is_black(self):  # synced
        pixels = np.array([[127 / 256, 128 / 256], [127 / 256, 128 / 256]])
        threshold = otsu_threshold(pixels)
        assert threshold.value == 0.5 and not threshold.degenerate
        assert binarize(pixels, threshold.value).all()


class TestMajorityVote:
    def test_odd_patch(self):  # synced
        bits = np.zeros((6, 6), dtype=np.uint8)
        bits[:3, :3].flat[:5] = 1
        bits[:3, 3:].flat[:4] = 1
        assert majority_vote(bits, 3).symbols.tolist() == [[1, 0], [0, 0]]

    def test_tie_goes_to_black(self):  # synced
        bits = np.array([[1, 0], [0, 1]], dtype=np.uint8)
        assert majority_vote(bits, 2).symbols.tolist() == [[1]]

    def test_k_one_is_identity(self):  # synced
        bits = np.array([[1, 0], [0, 1]], dtype=np.uint8)
        assert majority_vote(bits, 1).symbols.tolist() == bits.tolist()

    def test_shape_error(self):  # synced
        with pytest.raises(ShapeError):
            majority_vote(np.zeros((5, 5), dtype=np.uint8), 3)


class TestEstimator:
    def test_from_id(self):  # synced
        assert isinstance(Estimator.from_id("otsu-mv"), OtsuMajorityEstimator)

        with pytest.raises(ParameterError):
            Estimator.from_id("unknown")

    def test_registry(self):  # synced
        class InvertedEstimator(Estimator):
            estimator_id = "inverted-test"

            def estimate(self, img: PrintedImage, k: int) -> EstimatedTemplate:
                return EstimatedTemplate(symbols=1 - OtsuMajorityEstimator().estimate(img, k).symbols, estimator_id=self.estimator_id)

        assert isinstance(Estimator.from_id("inverted-test"), InvertedEstimator)


class TestEstimateTemplate:
    def test_all_white(self):  # synced
        estimate = estimate_template(PrintedImage(pixels=np.ones((6, 6)), k=3))
        assert estimate.estimator_id == "otsu-mv" and not estimate.symbols.any()

    def test_all_black(self):  # synced
        assert estimate_template(PrintedImage(pixels=np.zeros((6, 6)), k=3)).symbols.all()

    def test_recovers_large_blocks(self):  # synced
        symbols = np.zeros((16, 16), dtype=np.uint8)
        symbols[:, :8] = 1
        symbols[4:8, 10:14] = 1
        t = Template(symbols=symbols)
        estimate = estimate_template(print_code(t, ChannelParams.preset("A", noise_sigma=0.0)))
        assert estimate.to_template() == t

    def test_explicit_k(self):  # synced
        image = PrintedImage(pixels=np.zeros((6, 6)), k=3)
        assert estimate_template(image, k=2).L == 3

    def test_near_ideal_channel_is_lossless(self):  # synced
        near_ideal = ChannelParams(blur_sigma=0.05, dot_gain_gamma=1.0, noise_sigma=0.0)
        for seed in range(5):
            t = generate_template(40, 0.5, seed=seed)
            assert estimate_template(print_code(t, near_ideal)).to_template() == t

    def test_printer_a_bit_error_rate(self):  # synced
        printer = ChannelParams.preset("A", seed=21)
        errors = [np.mean(estimate_template(print_code(t, printer, index=index)).symbols != t.symbols)
                  for index, t in enumerate(generate_template(48, 0.5, seed=300 + index) for index in range(50))]
        assert 0.0 < np.mean(errors) < 0.05
