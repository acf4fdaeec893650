from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor


def ordered_map(func, items, workers: int = 1):
    """Map ``func`` over ``items`` preserving order.

    Work units must not depend on ``workers``; callers reduce the returned
    list in index order so results are bitwise independent of the pool size.
    """
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [func(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))
