from __future__ import annotations

import logging
from abc import ABCMeta
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, NamedTuple, Type, Union, TYPE_CHECKING

import numpy as np
from maybe import Maybe

from .errors import ParameterError, ShapeError
from .helper import frozen
from .template import Template

if TYPE_CHECKING:
    from .channel import PrintedImage

log = logging.getLogger(__name__)

ImageLike = Union["PrintedImage", np.ndarray]

BINS = 256
FALLBACK_THRESHOLD = 0.5


@dataclass(frozen=True, eq=False)
class EstimatedTemplate:
    """A binary template recovered from a probe, tagged with the id of the estimator that produced it."""

    symbols: np.ndarray
    estimator_id: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "symbols", frozen(np.asarray(self.symbols, dtype=np.uint8).copy()))

    def __repr__(self) -> str:
        return f"{type(self).__name__}(L={self.L}, estimator_id={self.estimator_id!r})"

    def __eq__(self, other: Any) -> bool:
        return isinstance(other, EstimatedTemplate) and np.array_equal(self.symbols, other.symbols)

    @property
    def L(self) -> int:
        return self.symbols.shape[0]

    def to_template(self) -> Template:
        return Template(symbols=self.symbols)


class OtsuThreshold(NamedTuple):
    value: float
    degenerate: bool


def _pixels(img: ImageLike) -> np.ndarray:
    pixels = np.asarray(getattr(img, "pixels", img), dtype=np.float64)
    if pixels.size == 0:
        raise ParameterError("Cannot threshold an empty image.")

    return pixels


def otsu_threshold(img: ImageLike) -> OtsuThreshold:
    """
    Global Otsu threshold over a 256-bin histogram of intensities on [0, 1].

    Candidates are the 255 interior bin boundaries b/256. The between-class variance of each candidate is compared exactly (rational arithmetic on bin counts and
    bin-index sums), and the first maximum wins, so ties resolve toward the lower threshold. When no boundary separates two non-empty classes the histogram is
    degenerate: the image's value (its mean, for a non-constant image inside a single bin) is returned with the degenerate flag set.
    The histogram counts a pixel equal to b/256 in the class above boundary b, while binarize() maps it to black. Values read from 8-bit images (v/255) never
    fall on a boundary, so this only concerns synthetic floats.
    """
    pixels = _pixels(img)
    counts = [int(count) for count in np.histogram(pixels, bins=BINS, range=(0.0, 1.0))[0]]
    total, weighted_total = sum(counts), sum(index * count for index, count in enumerate(counts))

    best_boundary, best_variance = None, Fraction(-1)
    below, weighted_below = 0, 0
    for boundary in range(1, BINS):
        below += counts[boundary - 1]
        weighted_below += (boundary - 1) * counts[boundary - 1]
        above, weighted_above = total - below, weighted_total - weighted_below

        if below == 0 or above == 0:
            continue

        variance = Fraction((weighted_below * above - weighted_above * below) ** 2, below * above)
        if variance > best_variance:
            best_boundary, best_variance = boundary, variance

    if best_boundary is None:
        value = float(pixels.flat[0]) if pixels.min() == pixels.max() else float(pixels.mean())
        return OtsuThreshold(value=value, degenerate=True)

    return OtsuThreshold(value=best_boundary / BINS, degenerate=False)


def binarize(img: ImageLike, thr: float) -> np.ndarray:
    """Map every pixel at or below 'thr' to 1 (black) and the rest to 0 (white)."""
    return (_pixels(img) <= thr).astype(np.uint8)


def majority_vote(bits: np.ndarray, k: int, estimator_id: str = "otsu-mv") -> EstimatedTemplate:
    """Collapse each k×k patch to one symbol: black when at least half of its pixels are black, so ties (even k² only) resolve to black."""
    bits = np.asarray(bits)
    if bits.ndim != 2 or bits.shape[0] != bits.shape[1] or bits.shape[0] % k:
        raise ShapeError(f"Binary image of shape {bits.shape} cannot be split into {k}×{k} symbol patches.")

    L = bits.shape[0] // k
    ones = bits.reshape(L, k, L, k).sum(axis=(1, 3), dtype=np.int64)
    return EstimatedTemplate(symbols=(2 * ones >= k * k).astype(np.uint8), estimator_id=estimator_id)


class EstimatorMeta(ABCMeta):
    estimators: dict[str, Type[Estimator]] = {}

    def __new__(mcs, name: str, bases: Any, namespace: dict) -> Type[Estimator]:
        cls: Type[Estimator] = super().__new__(mcs, name, bases, namespace)

        if cls.estimator_id:
            mcs.estimators[cls.estimator_id] = cls

        return cls


class Estimator(metaclass=EstimatorMeta):
    """
    Abstract probe -> template estimator. Subclasses set a unique 'estimator_id' and implement 'estimate'.
    Declaring a subclass registers it, so ids stored in codebooks resolve back to estimators with 'Estimator.from_id()'.
    """

    estimator_id: str = None

    def __repr__(self) -> str:
        return f"{type(self).__name__}(estimator_id={self.estimator_id!r})"

    def estimate(self, img: PrintedImage, k: int) -> EstimatedTemplate:
        raise NotImplementedError

    @classmethod
    def from_id(cls, estimator_id: str) -> Estimator:
        try:
            return EstimatorMeta.estimators[estimator_id]()
        except KeyError:
            raise ParameterError(f"No estimator registered under id '{estimator_id}'. Registered: {sorted(EstimatorMeta.estimators)}.")


class OtsuMajorityEstimator(Estimator):
    """Global Otsu binarization followed by per-symbol majority voting."""

    estimator_id = "otsu-mv"

    def estimate(self, img: PrintedImage, k: int) -> EstimatedTemplate:
        threshold = otsu_threshold(img)
        if threshold.degenerate:
            log.debug(f"Degenerate histogram for {img!r}, falling back to threshold {FALLBACK_THRESHOLD}")

        bits = binarize(img, FALLBACK_THRESHOLD if threshold.degenerate else threshold.value)
        return majority_vote(bits, k, estimator_id=self.estimator_id)


def estimate_template(img: PrintedImage, k: int = None, estimator: Estimator = None) -> EstimatedTemplate:
    return Maybe(estimator).else_(OtsuMajorityEstimator()).estimate(img, Maybe(k).else_(img.k))
