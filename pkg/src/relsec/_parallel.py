import os
from concurrent.futures import ThreadPoolExecutor


def thread_count() -> int:
    """Worker cap from ``RELSEC_THREADS`` (0 or unset means one per CPU)."""
    raw = os.environ.get("RELSEC_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return n


def pmap(fn, items):
    """Ordered map; parallel over threads when more than one worker is allowed."""
    items = list(items)
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))
