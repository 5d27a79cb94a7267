from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Iterable, Union

import numpy as np
from maybe import Maybe

from .channel import PrintedImage
from .codebook import Codebook, BorderLike, admitted, neighborhood_codes
from .enums import Enums
from .errors import CompatibilityError, ParameterError, ShapeError
from .estimator import EstimatedTemplate, Estimator
from .helper import frozen
from .template import Template

log = logging.getLogger(__name__)

MetricId, Orientation, PixelKind, BorderMode = Enums.MetricId, Enums.Orientation, Enums.PixelKind, Enums.BorderMode

MASKED = {MetricId.LLS: MetricId.M_LLS, MetricId.MSE: MetricId.M_MSE, MetricId.PCOR: MetricId.M_PCOR, MetricId.HAMM: MetricId.M_HAMM}
UNMASKED = {masked: plain for plain, masked in MASKED.items()}
ALL_METRICS = (*MASKED, *UNMASKED)

DEFAULT_MU = 0.25
MU_GRID = tuple(round(0.05 * step, 2) for step in range(1, 11))


def base_metric(metric_id: Union[MetricId, str]) -> MetricId:
    metric_id = MetricId(metric_id)
    return UNMASKED.get(metric_id, metric_id)


def orientation_of(metric_id: Union[MetricId, str]) -> Orientation:
    return Orientation.HIGHER_IS_ORIGINAL if base_metric(metric_id) in (MetricId.LLS, MetricId.PCOR) else Orientation.LOWER_IS_ORIGINAL


@dataclass(frozen=True)
class Score:
    value: float
    metric_id: MetricId
    fallback_count: int = 0
    degenerate: bool = False

    @property
    def orientation(self) -> Orientation:
        return orientation_of(self.metric_id)

    @property
    def oriented(self) -> float:
        """The value on the common axis on which a higher score always means 'more likely original'."""
        return self.value if self.orientation is Orientation.HIGHER_IS_ORIGINAL else -self.value


@dataclass(frozen=True, eq=False)
class AttentionMask:
    """Per-symbol attention mask: 1 where the generating codebook predicts a bit-error probability below 'mu' for the symbol's neighbourhood."""

    bits: np.ndarray
    mu: float
    codebook_hash: str
    border_mode: BorderMode = BorderMode.INTERIOR

    def __post_init__(self) -> None:
        object.__setattr__(self, "bits", frozen(np.asarray(self.bits, dtype=np.uint8).copy()))
        object.__setattr__(self, "border_mode", BorderMode(self.border_mode))

    def __repr__(self) -> str:
        return f"{type(self).__name__}(L={self.bits.shape[0]}, mu={self.mu}, support={self.support}, codebook_hash={self.codebook_hash!r})"

    @property
    def support(self) -> int:
        return int(self.bits.sum())

    def upsampled(self, k: int) -> np.ndarray:
        return np.kron(self.bits, np.ones((k, k), dtype=np.uint8)).astype(bool)

    @classmethod
    def full(cls, L: int, border_mode: BorderLike = BorderMode.INTERIOR) -> AttentionMask:
        """An all-ones mask, under which every masked metric equals its unmasked counterpart."""
        return cls(bits=np.ones((L, L), dtype=np.uint8), mu=1.0, codebook_hash="", border_mode=border_mode)


def _check_shapes(a: np.ndarray, b: np.ndarray, what: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"Shape mismatch between {what}: {a.shape} vs {b.shape}.")


def _selection(shape: tuple[int, ...], mask: np.ndarray = None) -> np.ndarray:
    """Flat boolean selection. Unmasked metrics select everything, so masked and unmasked scores share one code path and an all-ones mask reproduces them bit for bit."""
    return np.ones(int(np.prod(shape)), dtype=bool) if mask is None else np.asarray(mask, dtype=bool).ravel()


def lls_score(t_est: EstimatedTemplate, t: Template, cb: Codebook, border_mode: BorderLike = None, mask: AttentionMask = None) -> Score:
    """
    Posterior log-likelihood of the estimated template under the codebook: the sum over admitted symbols of log(1 - |t̃_ij - P(ω_ij)|), P clamped.
    With a mask the sum is restricted to mask-1 symbols (M-LLS). The number of queries answered by the unseen-neighbourhood fallback is recorded.
    """
    cb.check_probe(t_est)
    _check_shapes(t_est.symbols, t.symbols, "estimated template and template")
    border_mode = BorderMode(Maybe(border_mode).else_(cb.border_mode))

    P, _, fallback = cb.lookup(neighborhood_codes(t, cb.h, border_mode))
    estimate = admitted(t_est.symbols, cb.h, border_mode).astype(np.float64)
    select = _selection(estimate.shape, None if mask is None else admitted(mask.bits, cb.h, border_mode))

    terms = np.log(1.0 - np.abs(estimate - P)).ravel()[select]
    return Score(value=float(terms.sum()), metric_id=MetricId.LLS if mask is None else MetricId.M_LLS,
                 fallback_count=int(fallback.ravel()[select].sum()), degenerate=not select.any())


def build_mask(t: Template, cb: Codebook, mu: float = DEFAULT_MU, border_mode: BorderLike = None) -> AttentionMask:
    """Keep the symbols whose neighbourhood had a training bit-error rate strictly below 'mu' (clipped to [0, 1]). Symbols the border mode excludes are 0."""
    border_mode = BorderMode(Maybe(border_mode).else_(cb.border_mode))
    mu = min(max(float(mu), 0.0), 1.0)

    with np.errstate(invalid="ignore"):
        bits = cb.error_map(t, border_mode) < mu

    return AttentionMask(bits=bits, mu=mu, codebook_hash=cb.digest(), border_mode=border_mode)


def ideal_print(t: Template, k: int) -> np.ndarray:
    """Nearest-neighbour upsampling of 't' to the pixel grid with black = 0.0 and white = 1.0."""
    return 1.0 - np.kron(t.symbols.astype(np.float64), np.ones((k, k)))


def _pixel_score(ideal: np.ndarray, observed: np.ndarray, kind: PixelKind, metric_id: MetricId) -> Score:
    if not len(ideal):
        return Score(value=0.0, metric_id=metric_id, degenerate=True)

    if kind is PixelKind.MSE:
        difference = ideal - observed
        return Score(value=float(np.mean(difference * difference)), metric_id=metric_id)

    centered_ideal, centered_observed = ideal - ideal.mean(), observed - observed.mean()
    denominator = np.sqrt(np.sum(centered_ideal * centered_ideal) * np.sum(centered_observed * centered_observed))
    if denominator == 0:
        return Score(value=0.0, metric_id=metric_id, degenerate=True)

    return Score(value=float(np.sum(centered_ideal * centered_observed) / denominator), metric_id=metric_id)


def pixel_metric(t: Template, y: PrintedImage, kind: Union[PixelKind, str], k: int = None, mask: AttentionMask = None) -> Score:
    """MSE or Pearson correlation between the probe and the upsampled template, optionally over the upsampled mask's support only."""
    kind, k = PixelKind(kind), Maybe(k).else_(y.k)
    ideal = ideal_print(t, k)
    _check_shapes(ideal, y.pixels, "upsampled template and probe")

    select = _selection(ideal.shape, None if mask is None else mask.upsampled(k))
    metric_id = MetricId(kind.value) if mask is None else MASKED[MetricId(kind.value)]
    return _pixel_score(ideal.ravel()[select], y.pixels.ravel()[select], kind, metric_id)


def hamming_metric(t_est: EstimatedTemplate, t: Template, mask: AttentionMask = None) -> Score:
    """Fraction of symbols where the estimate differs from the template, optionally over the mask's support only."""
    _check_shapes(t_est.symbols, t.symbols, "estimated template and template")

    select = _selection(t.symbols.shape, None if mask is None else mask.bits)
    differing = (t_est.symbols != t.symbols).ravel()[select]
    metric_id = MetricId.HAMM if mask is None else MetricId.M_HAMM
    if not len(differing):
        return Score(value=0.0, metric_id=metric_id, degenerate=True)

    return Score(value=float(np.mean(differing)), metric_id=metric_id)


def masked_metric(t: Template, probe: Union[PrintedImage, EstimatedTemplate], mask: AttentionMask, kind: Union[MetricId, str], cb: Codebook = None) -> Score:
    """
    Attention-weighted metric. 'kind' names the base metric (or its masked id). Pixel metrics (MSE, PCOR) take the printed probe and use the mask upsampled
    to the pixel grid; HAMM and LLS take the estimated template, and LLS additionally needs the codebook. Normalized metrics are averaged over the mask's
    support. An empty support gives a degenerate score.
    """
    kind = base_metric(kind)
    if mask.bits.shape != t.symbols.shape:
        raise ShapeError(f"Mask of shape {mask.bits.shape} does not match template of shape {t.symbols.shape}.")

    if kind is MetricId.LLS:
        if cb is None:
            raise ParameterError("M-LLS needs the codebook the mask was built from.")
        if mask.codebook_hash and mask.codebook_hash != cb.digest():
            raise CompatibilityError("The attention mask was built from a different codebook.")
        return lls_score(_as_estimate(probe), t, cb, border_mode=mask.border_mode, mask=mask)

    if kind is MetricId.HAMM:
        return hamming_metric(_as_estimate(probe), t, mask=mask)

    if not isinstance(probe, PrintedImage):
        raise ParameterError(f"{kind.value} is computed on the printed probe, not on {type(probe).__name__}.")

    return pixel_metric(t, probe, PixelKind(kind.value), mask=mask)


def _as_estimate(probe: Any) -> EstimatedTemplate:
    if not isinstance(probe, EstimatedTemplate):
        raise ParameterError(f"This metric is computed on the estimated template, not on {type(probe).__name__}.")

    return probe


class MetricSuite:
    """Scores probes of one template with any set of the eight metrics, estimating each probe once. The attention mask is built once per template."""

    def __init__(self, t: Template, cb: Codebook, mu: float = DEFAULT_MU, border_mode: BorderLike = None, mask: AttentionMask = None) -> None:
        self.t, self.cb = t, cb
        self.border_mode = BorderMode(Maybe(border_mode).else_(cb.border_mode))
        self.mask = mask if mask is not None else build_mask(t, cb, mu=mu, border_mode=self.border_mode)
        self.estimator = Estimator.from_id(cb.estimator_id)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(t={self.t!r}, mask={self.mask!r})"

    def estimate(self, probe: PrintedImage) -> EstimatedTemplate:
        return self.estimator.estimate(probe, self.cb.k)

    def score(self, probe: PrintedImage, metrics: Iterable[Union[MetricId, str]] = ALL_METRICS, t_est: EstimatedTemplate = None) -> dict[MetricId, Score]:
        t_est = t_est if t_est is not None else self.estimate(probe)
        scores = {}
        for metric_id in (MetricId(metric) for metric in metrics):
            base = base_metric(metric_id)
            if metric_id in UNMASKED:
                scores[metric_id] = masked_metric(self.t, probe if base in (MetricId.MSE, MetricId.PCOR) else t_est, self.mask, base, cb=self.cb)
            elif base is MetricId.LLS:
                scores[metric_id] = lls_score(t_est, self.t, self.cb, border_mode=self.border_mode)
            elif base is MetricId.HAMM:
                scores[metric_id] = hamming_metric(t_est, self.t)
            else:
                scores[metric_id] = pixel_metric(self.t, probe, PixelKind(base.value), k=self.cb.k)

        return scores
