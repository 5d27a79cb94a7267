from __future__ import annotations

import logging
import math
from dataclasses import dataclass, asdict, replace
from typing import Any, ClassVar, TYPE_CHECKING

import numpy as np
from scipy import ndimage

from .errors import ParameterError, ShapeError
from .estimator import Estimator, estimate_template
from .helper import digest, frozen, make_rng
from .template import Template

if TYPE_CHECKING:
    from .file import File

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChannelParams:
    """Physics of one simulated print-and-acquire channel. Only the magnification 'k' has a physical counterpart; the rest parametrize the stand-in model."""

    k: int = 3
    blur_sigma: float = 1.0
    dot_gain_gamma: float = 0.7
    noise_sigma: float = 0.05
    seed: int = 0

    PRESETS: ClassVar[dict[str, dict[str, Any]]] = {
        "A": dict(k=3, blur_sigma=1.0, dot_gain_gamma=0.7, noise_sigma=0.05),
        "B": dict(k=3, blur_sigma=1.3, dot_gain_gamma=0.6, noise_sigma=0.06),
    }

    def __post_init__(self) -> None:
        if int(self.k) != self.k or self.k < 1:
            raise ParameterError(f"Magnification k must be an integer >= 1, not {self.k!r}.")
        if not self.blur_sigma > 0:
            raise ParameterError(f"blur_sigma must be > 0, not {self.blur_sigma!r}.")
        if not 0 < self.dot_gain_gamma <= 1:
            raise ParameterError(f"dot_gain_gamma must lie in (0, 1], not {self.dot_gain_gamma!r}.")
        if not self.noise_sigma >= 0:
            raise ParameterError(f"noise_sigma must be >= 0, not {self.noise_sigma!r}.")

    @property
    def half_width(self) -> int:
        return max(1, math.ceil(3 * self.blur_sigma))

    def digest(self) -> str:
        return digest(asdict(self))

    def with_seed(self, seed: int) -> ChannelParams:
        return replace(self, seed=int(seed))

    @classmethod
    def preset(cls, name: str, seed: int = 0, **overrides: Any) -> ChannelParams:
        """Return the named preset ('A' or 'B'), optionally overriding individual fields."""
        try:
            values = cls.PRESETS[name.upper()]
        except KeyError:
            raise ParameterError(f"Unknown channel preset '{name}'. Available presets: {', '.join(sorted(cls.PRESETS))}.")

        return cls(**(values | {key: val for key, val in overrides.items() if val is not None}), seed=int(seed))


@dataclass(frozen=True, eq=False)
class PrintedImage:
    """An acquired code: a (kL)×(kL) intensity matrix in [0, 1] with 0 = black and 1 = white, tagged with its provenance."""

    pixels: np.ndarray
    k: int
    source_id: str = "unknown"

    def __post_init__(self) -> None:
        pixels = np.asarray(self.pixels, dtype=np.float64)
        if pixels.ndim != 2 or pixels.shape[0] != pixels.shape[1] or pixels.shape[0] == 0:
            raise ShapeError(f"A printed image must be a non-empty square matrix, not shape {pixels.shape}.")
        if self.k < 1 or pixels.shape[0] % self.k:
            raise ShapeError(f"Image side {pixels.shape[0]} is not a multiple of the magnification k={self.k}.")
        if pixels.min() < 0.0 or pixels.max() > 1.0:
            raise ParameterError(f"Pixel intensities must lie in [0, 1], found range [{pixels.min()}, {pixels.max()}].")

        object.__setattr__(self, "pixels", frozen(pixels.copy()))

    def __repr__(self) -> str:
        return f"{type(self).__name__}(L={self.L}, k={self.k}, source_id={self.source_id!r})"

    def __eq__(self, other: Any) -> bool:
        return isinstance(other, PrintedImage) and self.k == other.k and np.array_equal(self.pixels, other.pixels)

    @property
    def L(self) -> int:
        return self.pixels.shape[0] // self.k

    def quantized(self) -> np.ndarray:
        return np.round(self.pixels * 255).astype(np.uint8)

    def to_file(self, file: File, params: ChannelParams = None) -> File:
        """Write the image as an 8-bit PGM (intensity quantized by round(v·255)) plus a JSON sidecar with k, lineage and channel parameters."""
        file.write(self.quantized())
        file.sidecar.write({"k": self.k, "source_id": self.source_id, "params": asdict(params) if params is not None else None})
        return file

    @classmethod
    def from_file(cls, file: File, k: int = None) -> PrintedImage:
        meta = file.sidecar.read() if file.sidecar else {}
        if (k := k if k is not None else meta.get("k")) is None:
            raise ParameterError(f"Magnification of '{file}' is unknown: no sidecar and no explicit k.")

        return cls(pixels=file.read() / 255.0, k=int(k), source_id=meta.get("source_id", file.stem))


def gaussian_kernel(sigma: float, half_width: int) -> np.ndarray:
    """Return the (2·half_width+1)² normalized Gaussian kernel. The last element absorbs the floating point residual so the sum is exactly 1."""
    if not sigma > 0:
        raise ParameterError(f"sigma must be > 0, not {sigma!r}.")
    if half_width < 1:
        raise ParameterError(f"half_width must be >= 1, not {half_width!r}.")

    offsets = np.arange(-half_width, half_width + 1, dtype=np.float64)
    dy, dx = np.meshgrid(offsets, offsets, indexing="ij")
    kernel = np.exp(-(dx ** 2 + dy ** 2) / (2.0 * sigma ** 2))
    kernel /= kernel.sum()
    kernel[-1, -1] += 1.0 - kernel.sum()
    return kernel


def print_code(t: Template, params: ChannelParams, index: int = 0) -> PrintedImage:
    """
    Pass a template through the simulated channel. The order of the stages is fixed:

    1. ink coverage: nearest upsampling by k, black symbol -> coverage 1
    2. spread: convolution with the normalized Gaussian PSF, reflect-padded borders, rounded to 12 decimals and clipped to [0, 1] so full coverage stays exactly 1
    3. dot gain: coverage ** dot_gain_gamma
    4. intensity = 1 - coverage
    5. i.i.d. Gaussian acquisition noise, clamped to [0, 1]

    The noise stream is derived from (params.seed, index) so that a batch of templates can be printed in any order or in parallel.
    With noise_sigma = 0 the output does not depend on the seed.
    """
    coverage = np.kron(t.symbols.astype(np.float64), np.ones((params.k, params.k)))
    spread = ndimage.convolve(coverage, gaussian_kernel(params.blur_sigma, params.half_width), mode="reflect")
    # summation residue would otherwise keep full coverage a few ulps below 1
    spread = np.clip(np.round(spread, 12), 0.0, 1.0)
    intensity = 1.0 - spread ** params.dot_gain_gamma

    if params.noise_sigma > 0:
        intensity = intensity + make_rng(params.seed, index).normal(0.0, params.noise_sigma, intensity.shape)

    return PrintedImage(pixels=np.clip(intensity, 0.0, 1.0), k=params.k, source_id=f"original[{params.digest()}]")


def make_fake(x: PrintedImage, reprint_params: ChannelParams, estimator: Estimator = None, index: int = 0) -> PrintedImage:
    """Estimate-and-reprint attack: recover a template from 'x' with the estimator, then print that estimate through the attacker's channel."""
    if x.pixels.shape[0] % x.k or x.pixels.shape[0] != x.pixels.shape[1]:
        raise ShapeError(f"Probe of shape {x.pixels.shape} is not divisible by its magnification k={x.k}.")

    estimate = estimate_template(x, x.k, estimator=estimator)
    fake = print_code(Template(symbols=estimate.symbols), reprint_params, index=index)
    return replace(fake, source_id=f"fake[{estimate.estimator_id}|{x.source_id}|{reprint_params.digest()}]")


def bsc_flip(t: Template, q: float, seed: int = 0) -> Template:
    """Binary symmetric channel: flip every symbol independently with probability q."""
    if not 0.0 <= q <= 1.0:
        raise ParameterError(f"Flip probability q must lie in [0, 1], not {q!r}.")

    flips = (np.random.Generator(np.random.PCG64(seed)).random(t.symbols.shape) < q).astype(np.uint8)
    return Template(symbols=t.symbols ^ flips)
