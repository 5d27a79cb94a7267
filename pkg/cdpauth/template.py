from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Optional, TYPE_CHECKING

import numpy as np

from .errors import ParameterError, ShapeError
from .helper import frozen

if TYPE_CHECKING:
    from .file import File

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Template:
    """
    An L×L binary CDP blueprint. Symbols are uint8 with 1 = black ink and 0 = white paper, the convention used throughout the package.

    'p' and 'seed' record how a generated template was drawn and are None for templates of unknown origin (loaded without a sidecar, padded, estimated).
    """

    symbols: np.ndarray
    p: Optional[float] = None
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        symbols = np.asarray(self.symbols)
        if symbols.ndim != 2 or symbols.shape[0] != symbols.shape[1] or symbols.shape[0] < 1:
            raise ShapeError(f"A template must be a non-empty square matrix, not shape {symbols.shape}.")

        if not np.isin(symbols, (0, 1)).all():
            raise ParameterError("Template symbols must all be 0 (white) or 1 (black).")

        object.__setattr__(self, "symbols", frozen(symbols.astype(np.uint8, copy=True)))

    def __repr__(self) -> str:
        return f"{type(self).__name__}(L={self.L}, p={self.p}, seed={self.seed}, black_fraction={self.black_fraction:.4f})"

    def __eq__(self, other: Any) -> bool:
        return isinstance(other, Template) and np.array_equal(self.symbols, other.symbols)

    def __hash__(self) -> int:
        return hash(self.symbols.tobytes())

    @property
    def L(self) -> int:
        return self.symbols.shape[0]

    @property
    def black_fraction(self) -> float:
        return float(self.symbols.mean())

    def to_pixels(self) -> np.ndarray:
        """Return the one-pixel-per-symbol 8-bit image: 0 for a black symbol, 255 for a white one."""
        return np.where(self.symbols == 1, 0, 255).astype(np.uint8)

    def to_file(self, file: File) -> File:
        """Write the template as a PGM image plus a JSON sidecar holding {L, p, seed}. Returns the image File."""
        file.write(self.to_pixels())
        file.sidecar.write({"L": self.L, "p": self.p, "seed": self.seed})
        return file

    @classmethod
    def from_pixels(cls, pixels: np.ndarray, p: float = None, seed: int = None) -> Template:
        return cls(symbols=(np.asarray(pixels) < 128).astype(np.uint8), p=p, seed=seed)

    @classmethod
    def from_file(cls, file: File) -> Template:
        meta = file.sidecar.read() if file.sidecar else {}
        template = cls.from_pixels(file.read(), p=meta.get("p"), seed=meta.get("seed"))

        if "L" in meta and meta["L"] != template.L:
            raise ShapeError(f"Sidecar of '{file}' declares L={meta['L']} but the image holds {template.L}×{template.L} symbols.")

        return template


@dataclass(frozen=True)
class InteriorIndex:
    """The symbols of an L×L template whose full h×h neighbourhood lies inside the template."""

    L: int
    h: int

    @property
    def margin(self) -> int:
        return self.h // 2

    @property
    def span(self) -> slice:
        return slice(self.margin, self.L - self.margin)

    @property
    def coords(self) -> list[tuple[int, int]]:
        """Row-major list of the admitted (i, j) coordinates."""
        rows = range(self.margin, self.L - self.margin)
        return [(i, j) for i in rows for j in rows]

    def __len__(self) -> int:
        return (self.L - 2 * self.margin) ** 2

    def __contains__(self, coord: tuple[int, int]) -> bool:
        i, j = coord
        return self.margin <= i < self.L - self.margin and self.margin <= j < self.L - self.margin

    def mask(self) -> np.ndarray:
        """Return an L×L boolean matrix that is True on admitted symbols."""
        mask = np.zeros((self.L, self.L), dtype=bool)
        mask[self.span, self.span] = True
        return mask


def generate_template(L: int, p: float = 0.5, seed: int = 0) -> Template:
    """
    Draw an L×L template with i.i.d. Bernoulli(p) symbols.

    The stream is PCG64 seeded with 'seed', consumed as one uniform double per symbol in row-major order; a symbol is black when its draw is below p.
    The output is therefore bit-reproducible across runs and platforms for a fixed (L, p, seed).
    """
    if not isinstance(L, (int, np.integer)) or L < 1:
        raise ParameterError(f"Template size L must be a positive integer, not {L!r}.")

    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"Black-symbol probability p must lie in [0, 1], not {p!r}.")

    draws = np.random.Generator(np.random.PCG64(seed)).random((int(L), int(L)))
    template = Template(symbols=(draws < p).astype(np.uint8), p=float(p), seed=int(seed))
    log.debug(f"Generated {template!r}")
    return template


def pad_white(t: Template, w: int) -> Template:
    """Surround 't' with a ring of white symbols of width 'w', giving an (L+2w)×(L+2w) template."""
    if w < 0:
        raise ParameterError(f"Padding width must be non-negative, not {w}.")

    if w == 0:
        return t

    return Template(symbols=np.pad(t.symbols, int(w), mode="constant", constant_values=0), p=t.p, seed=t.seed)


def interior_index(L: int, h: int) -> InteriorIndex:
    if h < 1 or h % 2 == 0:
        raise ParameterError(f"Neighbourhood size h must be a positive odd integer, not {h}.")

    if h > L:
        raise ParameterError(f"Neighbourhood size h={h} exceeds the template size L={L}.")

    return InteriorIndex(L=int(L), h=int(h))
