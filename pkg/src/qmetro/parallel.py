"""Order-preserving process pool over static chunks."""

from __future__ import annotations

import multiprocessing as mp
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Iterator, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")

ENV_WORKERS = "QMETRO_WORKERS"


def resolve_workers(workers=None) -> int:
    if workers is None:
        workers = os.environ.get(ENV_WORKERS, 1)
    if workers == "auto":
        return os.cpu_count() or 1
    n = int(workers)
    if n < 1:
        raise ValueError("workers must be >= 1")
    return n


def chunked(items: Sequence[T], size: int) -> list[Sequence[T]]:
    return [items[i : i + size] for i in range(0, len(items), size)]


def pmap(func: Callable[[T], R], items: Iterable[T], workers: int = 1) -> list[R]:
    """``[func(i) for i in items]``, fanned out over ``workers`` processes, in input order."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [func(i) for i in items]
    ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else None
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as ex:
        return list(ex.map(func, items))


def imap(func: Callable[[T], R], items: Iterable[T], workers: int = 1) -> Iterator[R]:
    """Lazy, ordered variant of :func:`pmap`; results arrive as soon as their predecessors are done."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        for i in items:
            yield func(i)
        return
    ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else None
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as ex:
        yield from ex.map(func, items)
