from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property, reduce
from types import MappingProxyType
from typing import Any, Iterable, Iterator, Mapping, NamedTuple, Sequence, Union, TYPE_CHECKING

import numpy as np
from maybe import Maybe
from numpy.lib.stride_tricks import sliding_window_view

from .enums import Enums
from .errors import CompatibilityError, ParameterError, ShapeError
from .estimator import EstimatedTemplate, Estimator
from .helper import digest, thread_map
from .template import Template, pad_white

if TYPE_CHECKING:
    from .channel import PrintedImage
    from .file import File

log = logging.getLogger(__name__)

BorderMode = Enums.BorderMode
BorderLike = Union[BorderMode, str]

VERSION = 1
DEFAULT_EPSILON = 1e-4
# codes are int64, so h² must stay below 63 bits
MAX_H = 7


def _check_h(h: int) -> int:
    if h < 1 or h % 2 == 0 or h > MAX_H:
        raise ParameterError(f"Neighbourhood size h must be an odd integer in [1, {MAX_H}], not {h}.")

    return int(h)


def _bit_weights(h: int) -> np.ndarray:
    """h×h matrix of bit weights: row-major scan with the top-left bit most significant."""
    return (np.int64(1) << np.arange(h * h - 1, -1, -1, dtype=np.int64)).reshape(h, h)


@dataclass(frozen=True)
class NeighborhoodCode:
    code: int
    h: int

    def __post_init__(self) -> None:
        _check_h(self.h)
        if not 0 <= self.code < (1 << (self.h * self.h)):
            raise ParameterError(f"Code {self.code} is out of range for h={self.h}.")

    @property
    def center(self) -> int:
        """Value of the centre symbol of the neighbourhood."""
        return (self.code >> (self.h * self.h - 1 - (self.h * self.h) // 2)) & 1

    def bits(self) -> np.ndarray:
        return ((self.code & _bit_weights(self.h)) != 0).astype(np.uint8)

    @classmethod
    def from_bits(cls, window: np.ndarray) -> NeighborhoodCode:
        window = np.asarray(window, dtype=np.int64)
        return cls(code=int((window * _bit_weights(window.shape[0])).sum()), h=window.shape[0])


def admitted(matrix: np.ndarray, h: int, border_mode: BorderLike) -> np.ndarray:
    """Crop an L×L per-symbol matrix to the symbols the border mode admits: the interior for 'interior', everything for 'white_pad'."""
    if BorderMode(border_mode) is BorderMode.WHITE_PAD:
        return matrix

    margin = h // 2
    return matrix[margin:matrix.shape[0] - margin, margin:matrix.shape[1] - margin]


def admitted_mask(L: int, h: int, border_mode: BorderLike) -> np.ndarray:
    mask = np.zeros((L, L), dtype=bool)
    admitted(mask, h, border_mode)[...] = True
    return mask


def neighborhood_codes(t: Template, h: int, border_mode: BorderLike) -> np.ndarray:
    """Return the code of every admitted symbol's h×h neighbourhood as a matrix aligned with 'admitted(t.symbols, h, border_mode)'."""
    h = _check_h(h)
    if BorderMode(border_mode) is BorderMode.WHITE_PAD:
        t = pad_white(t, h // 2)
    elif h > t.L:
        raise ParameterError(f"Neighbourhood size h={h} exceeds the template size L={t.L}.")

    windows = sliding_window_view(t.symbols.astype(np.int64), (h, h))
    return np.tensordot(windows, _bit_weights(h), axes=((2, 3), (0, 1)))


def encode_neighborhood(t: Template, i: int, j: int, h: int, border_mode: BorderLike) -> NeighborhoodCode:
    h, margin = _check_h(h), h // 2
    if not (0 <= i < t.L and 0 <= j < t.L):
        raise ParameterError(f"Symbol ({i}, {j}) lies outside the {t.L}×{t.L} template.")

    if BorderMode(border_mode) is BorderMode.INTERIOR:
        if not (margin <= i < t.L - margin and margin <= j < t.L - margin):
            raise ParameterError(f"The {h}×{h} window around ({i}, {j}) leaves the {t.L}×{t.L} template, which 'interior' mode does not allow.")

        window = t.symbols[i - margin:i + margin + 1, j - margin:j + margin + 1]
    else:
        window = pad_white(t, margin).symbols[i:i + h, j:j + h]

    return NeighborhoodCode.from_bits(window)


@dataclass(frozen=True)
class CodebookEntry:
    """Counts behind one neighbourhood: observations, black estimates (P statistic) and bit errors (P_b statistic)."""

    count: int = 0
    p_sum: int = 0
    pb_sum: int = 0

    def __add__(self, other: CodebookEntry) -> CodebookEntry:
        return CodebookEntry(count=self.count + other.count, p_sum=self.p_sum + other.p_sum, pb_sum=self.pb_sum + other.pb_sum)

    @property
    def P(self) -> float:
        return self.p_sum / self.count

    @property
    def P_b(self) -> float:
        return self.pb_sum / self.count


class QueryResult(NamedTuple):
    P: float
    P_b: float
    fallback: bool


class Lookup(NamedTuple):
    P: np.ndarray
    P_b: np.ndarray
    fallback: np.ndarray


class Codebook:
    """
    Learned predictor channel: for every observed h×h neighbourhood code, the number of observations and the integer sums behind P(ω) and P_b(ω).

    Sums and counts are stored instead of means so that merging partial codebooks is exact, which makes training order-independent and parallelizable.
    The codebook also records the configuration it was trained under (h, k, estimator id, border mode) and the lineage of the originals; combining codebooks
    or probes that disagree on any of these raises CompatibilityError. Instances are immutable.
    """

    def __init__(self, h: int, k: int, estimator_id: str, border_mode: BorderLike, entries: Mapping[int, CodebookEntry] = None,
                 epsilon: float = DEFAULT_EPSILON, lineage: str = None) -> None:
        if not 0 <= epsilon < 0.5:
            raise ParameterError(f"Clamp epsilon must lie in [0, 0.5), not {epsilon}.")

        self.h, self.k, self.estimator_id, self.border_mode = _check_h(h), int(k), estimator_id, BorderMode(border_mode)
        self.epsilon, self.lineage = float(epsilon), lineage
        self.entries: Mapping[int, CodebookEntry] = MappingProxyType({int(code): entry for code, entry in sorted((entries or {}).items()) if entry.count > 0})

        if len(self.entries) > (1 << (self.h * self.h)):
            raise ParameterError(f"A codebook for h={self.h} holds at most {1 << (self.h * self.h)} entries.")

    def __repr__(self) -> str:
        return (f"{type(self).__name__}(h={self.h}, k={self.k}, estimator_id={self.estimator_id!r}, border_mode={self.border_mode.value!r}, "
                f"entries={len(self)}, symbols={self.total.count}, P_b={self.global_P_b:.4f})")

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[int]:
        return iter(self.entries)

    def __contains__(self, code: Union[int, NeighborhoodCode]) -> bool:
        return int(getattr(code, "code", code)) in self.entries

    def __getitem__(self, code: Union[int, NeighborhoodCode]) -> CodebookEntry:
        return self.entries[int(getattr(code, "code", code))]

    def __eq__(self, other: Any) -> bool:
        return isinstance(other, Codebook) and self.to_dict() == other.to_dict()

    @property
    def config(self) -> tuple:
        return self.h, self.k, self.estimator_id, self.border_mode

    @cached_property
    def total(self) -> CodebookEntry:
        return reduce(CodebookEntry.__add__, self.entries.values(), CodebookEntry())

    @property
    def global_P(self) -> float:
        return self.total.P if self.total.count else 0.5

    @property
    def global_P_b(self) -> float:
        """Mean bit-error rate over all accumulated symbols: the estimate a binary symmetric channel model would use everywhere."""
        return self.total.P_b if self.total.count else 0.5

    bsc_error_rate = global_P_b

    @cached_property
    def _table(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        codes = np.fromiter(self.entries, dtype=np.int64, count=len(self.entries))
        P = np.array([entry.P for entry in self.entries.values()], dtype=np.float64)
        P_b = np.array([entry.P_b for entry in self.entries.values()], dtype=np.float64)
        return codes, P, P_b

    def lookup(self, codes: np.ndarray, clamp: bool = True) -> Lookup:
        """Vectorized query. Unseen codes receive the global means and are flagged in 'fallback'. Values are clamped to [epsilon, 1 - epsilon] unless 'clamp' is False."""
        codes = np.asarray(codes, dtype=np.int64)
        keys, P_table, P_b_table = self._table

        position = np.searchsorted(keys, codes)
        capped = np.minimum(position, max(len(keys) - 1, 0))
        found = (position < len(keys)) & (keys[capped] == codes) if len(keys) else np.zeros(codes.shape, dtype=bool)

        P = np.where(found, P_table[capped] if len(keys) else 0.0, self.global_P)
        P_b = np.where(found, P_b_table[capped] if len(keys) else 0.0, self.global_P_b)

        if clamp:
            P, P_b = (np.clip(values, self.epsilon, 1.0 - self.epsilon) for values in (P, P_b))

        return Lookup(P=P, P_b=P_b, fallback=~found)

    def query(self, omega: NeighborhoodCode) -> QueryResult:
        if omega.h != self.h:
            raise CompatibilityError(f"Neighbourhood of size h={omega.h} cannot be queried in a codebook trained with h={self.h}.")

        P, P_b, fallback = self.lookup(np.array([omega.code]))
        return QueryResult(P=float(P[0]), P_b=float(P_b[0]), fallback=bool(fallback[0]))

    def error_map(self, t: Template, border_mode: BorderLike = None) -> np.ndarray:
        """Return the L×L map of unclamped P_b(ω_ij) for template 't'. Symbols the border mode does not admit are NaN."""
        border_mode = BorderMode(Maybe(border_mode).else_(self.border_mode))
        error_map = np.full(t.symbols.shape, np.nan)
        admitted(error_map, self.h, border_mode)[...] = self.lookup(neighborhood_codes(t, self.h, border_mode), clamp=False).P_b
        return error_map

    def check_compatible(self, other: Codebook) -> None:
        if self.config != other.config:
            raise CompatibilityError(f"Codebooks disagree on (h, k, estimator_id, border_mode): {self.config} vs {other.config}.")

        if None not in (self.lineage, other.lineage) and self.lineage != other.lineage:
            raise CompatibilityError(f"Codebooks were trained on originals of different channels (lineage {self.lineage} vs {other.lineage}).")

    def check_probe(self, t_est: EstimatedTemplate) -> None:
        if t_est.estimator_id != self.estimator_id:
            raise CompatibilityError(f"Probe was estimated with '{t_est.estimator_id}' but the codebook was trained with '{self.estimator_id}'.")

    def merge(self, other: Codebook) -> Codebook:
        self.check_compatible(other)

        entries = dict(self.entries)
        for code, entry in other.entries.items():
            entries[code] = entries.get(code, CodebookEntry()) + entry

        return Codebook(h=self.h, k=self.k, estimator_id=self.estimator_id, border_mode=self.border_mode, entries=entries, epsilon=self.epsilon,
                        lineage=self.lineage if self.lineage is not None else other.lineage)

    def to_dict(self) -> dict[str, Any]:
        return {
            "version": VERSION,
            "h": self.h,
            "k": self.k,
            "estimator_id": self.estimator_id,
            "border_mode": self.border_mode.value,
            "epsilon": self.epsilon,
            "lineage": self.lineage,
            "global": {"count": self.total.count, "P": self.global_P, "P_b": self.global_P_b},
            "entries": [{"omega": code, "count": entry.count, "p_sum": entry.p_sum, "pb_sum": entry.pb_sum} for code, entry in self.entries.items()],
        }

    def digest(self) -> str:
        return digest(self.to_dict())

    def save(self, file: File) -> File:
        return file.write(self.to_dict())

    @classmethod
    def from_dict(cls, document: Mapping[str, Any]) -> Codebook:
        if document.get("version") != VERSION:
            raise ParameterError(f"Unsupported codebook version {document.get('version')!r}, expected {VERSION}.")

        entries = {}
        for item in document["entries"]:
            entry = CodebookEntry(count=int(item["count"]), p_sum=int(item["p_sum"]), pb_sum=int(item["pb_sum"]))
            if not (0 <= entry.p_sum <= entry.count and 0 <= entry.pb_sum <= entry.count):
                raise ParameterError(f"Codebook entry {item['omega']} has sums outside [0, count]: {item}.")
            entries[int(item["omega"])] = entry

        return cls(h=document["h"], k=document["k"], estimator_id=document["estimator_id"], border_mode=document["border_mode"], entries=entries,
                   epsilon=document.get("epsilon", DEFAULT_EPSILON), lineage=document.get("lineage"))

    @classmethod
    def load(cls, file: File) -> Codebook:
        return cls.from_dict(file.read())

    @classmethod
    def empty(cls, h: int = 3, k: int = 3, estimator_id: str = "otsu-mv", border_mode: BorderLike = BorderMode.INTERIOR, epsilon: float = DEFAULT_EPSILON) -> Codebook:
        return cls(h=h, k=k, estimator_id=estimator_id, border_mode=border_mode, epsilon=epsilon)

    @classmethod
    def from_estimate(cls, t: Template, t_est: EstimatedTemplate, h: int, k: int, border_mode: BorderLike, epsilon: float = DEFAULT_EPSILON, lineage: str = None) -> Codebook:
        """Accumulate one (template, estimated template) pair: the inner loop of predictor training."""
        if t_est.symbols.shape != t.symbols.shape:
            raise ShapeError(f"Estimated template {t_est.symbols.shape} does not match template {t.symbols.shape}.")

        codes = neighborhood_codes(t, h, border_mode).ravel()
        black = admitted(t_est.symbols, h, border_mode).ravel().astype(np.int64)
        errors = admitted(t_est.symbols ^ t.symbols, h, border_mode).ravel().astype(np.int64)

        unique, inverse = np.unique(codes, return_inverse=True)
        inverse = inverse.ravel()
        counts = np.bincount(inverse, minlength=len(unique))
        p_sums = np.bincount(inverse, weights=black, minlength=len(unique)).round().astype(np.int64)
        pb_sums = np.bincount(inverse, weights=errors, minlength=len(unique)).round().astype(np.int64)

        entries = {int(code): CodebookEntry(count=int(count), p_sum=int(p_sum), pb_sum=int(pb_sum)) for code, count, p_sum, pb_sum in zip(unique, counts, p_sums, pb_sums)}
        return cls(h=h, k=k, estimator_id=t_est.estimator_id, border_mode=border_mode, entries=entries, epsilon=epsilon, lineage=lineage)


def lineage_of(images: Iterable[PrintedImage]) -> str:
    return digest(sorted({image.source_id for image in images}))


def train_codebook(pairs: Sequence[tuple[Template, PrintedImage]], h: int = 3, k: int = None, border_mode: BorderLike = BorderMode.INTERIOR,
                   estimator_id: str = "otsu-mv", epsilon: float = DEFAULT_EPSILON, threads: int = 1) -> Codebook:
    """
    Train the predictor channel on (template, printed original) pairs.

    Each pair is estimated and accumulated into a partial codebook (in parallel when 'threads' > 1), and the partials are merged in input order.
    Because the partials hold integer sums, the result does not depend on the order of the pairs or on the number of threads.
    """
    pairs = list(pairs)
    if not pairs:
        raise ParameterError("Cannot train a codebook on an empty list of pairs.")

    k = int(k if k is not None else pairs[0][1].k)
    border_mode, estimator, lineage = BorderMode(border_mode), Estimator.from_id(estimator_id), lineage_of(x for _, x in pairs)

    for index, (t, x) in enumerate(pairs):
        if x.pixels.shape != (t.L * k, t.L * k):
            raise ShapeError(f"Pair {index}: image of shape {x.pixels.shape} does not match a {t.L}×{t.L} template at k={k}.")

    def accumulate(pair: tuple[Template, PrintedImage]) -> Codebook:
        t, x = pair
        partial = Codebook.from_estimate(t, estimator.estimate(x, k), h=h, k=k, border_mode=border_mode, epsilon=epsilon, lineage=lineage)
        log.debug(f"Accumulated {x!r}: {len(partial)} codes")
        return partial

    codebook = reduce(merge, thread_map(accumulate, pairs, threads), Codebook.empty(h=h, k=k, estimator_id=estimator_id, border_mode=border_mode, epsilon=epsilon))
    log.info(f"Trained {codebook!r} on {len(pairs)} pairs")
    return codebook


def merge(a: Codebook, b: Codebook) -> Codebook:
    return a.merge(b)


def codebook_distance(a: Codebook, ref: Codebook) -> float:
    """Average absolute difference of the unclamped P(ω) of two codebooks over the union of their observed codes. Absent codes use the owning codebook's global mean."""
    if a.h != ref.h:
        raise CompatibilityError(f"Cannot compare codebooks with h={a.h} and h={ref.h}.")

    codes = np.array(sorted(set(a.entries) | set(ref.entries)), dtype=np.int64)
    if not len(codes):
        return 0.0

    return float(np.mean(np.abs(a.lookup(codes, clamp=False).P - ref.lookup(codes, clamp=False).P)))
