from __future__ import annotations

import hashlib
import os
from pathlib import Path
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Sequence, TypeVar, Union

import numpy as np
import simplejson


PathLike = Union[str, os.PathLike, Path]
T = TypeVar("T")


def derive_seed(*keys: int) -> int:
    """Derive an independent 64-bit seed from a tuple of integer keys. The first key is the root entropy, the rest form the spawn key."""
    root, *spawn_key = (int(key) for key in keys)
    state = np.random.SeedSequence(entropy=root, spawn_key=tuple(spawn_key)).generate_state(1, dtype=np.uint64)
    return int(state[0])


def make_rng(seed: int, *spawn_key: int) -> np.random.Generator:
    """Return a PCG64 generator for the stream identified by (seed, *spawn_key)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(key) for key in spawn_key))))


def canonical_json(item: Any) -> str:
    return simplejson.dumps(item, sort_keys=True, separators=(",", ":"))


def digest(item: Any, length: int = 16) -> str:
    """Return a short sha256 hex digest of the canonical JSON form of 'item'."""
    return hashlib.sha256(canonical_json(item).encode("utf-8")).hexdigest()[:length]


def file_digest(path: PathLike) -> str:
    sha = hashlib.sha256()
    with open(path, "rb") as stream:
        for chunk in iter(lambda: stream.read(1 << 16), b""):
            sha.update(chunk)

    return sha.hexdigest()


def frozen(array: np.ndarray) -> np.ndarray:
    """Return 'array' marked read-only, so that value objects holding it stay immutable."""
    array.setflags(write=False)
    return array


def thread_map(function: Callable[[Any], T], items: Sequence[Any], threads: int = 1) -> list[T]:
    """Map 'function' over 'items' on a thread pool of the given size, preserving input order. Runs inline for a single thread."""
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(function, items))

    return [function(item) for item in items]
