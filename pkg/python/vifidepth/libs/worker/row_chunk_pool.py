"""Row-band thread pool for per-pixel loops.

Work is split into disjoint bands of image rows and evaluated on a
``ThreadPoolExecutor``. Bands are joined in row order, so the result does not
depend on the number of workers as long as ``fn`` treats rows independently.
"""

from __future__ import annotations

from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

import numpy as np
import numpy.typing as npt

from vifidepth.libs.core.logging_factory import VifiDepthLoggerFactory

logger = VifiDepthLoggerFactory.get_logger(__name__)

_T = TypeVar("_T", bound=np.generic)


def row_bands(height: int, jobs: int) -> list[slice]:
    """Split ``range(height)`` into at most ``jobs`` contiguous row slices.

    Args:
        height: Number of rows.
        jobs: Requested worker count (values below 1 mean 1).

    Returns:
        Non-empty slices covering every row exactly once, in order.
    """
    if height <= 0:
        return []
    count = max(1, min(jobs, height))
    edges = np.linspace(0, height, count + 1).round().astype(int)
    return [slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def map_row_chunks(
    fn: Callable[[slice], npt.NDArray[_T]],
    height: int,
    jobs: int = 1,
) -> npt.NDArray[_T]:
    """Evaluate ``fn`` over row bands and concatenate the results along axis 0.

    Args:
        fn: Callable receiving a row slice and returning an array whose first
            axis has one entry per row in the slice.
        height: Total number of rows.
        jobs: Worker thread count. ``1`` runs inline without a pool.

    Returns:
        The row-ordered concatenation of every band's result.
    """
    bands = row_bands(height, jobs)
    if len(bands) <= 1:
        return fn(slice(0, height))

    logger.debug("map_row_chunks: %d rows over %d bands", height, len(bands))
    with ThreadPoolExecutor(max_workers=len(bands), thread_name_prefix="vifidepth-rows") as pool:
        parts = list(pool.map(fn, bands))
    return np.concatenate(parts, axis=0)
