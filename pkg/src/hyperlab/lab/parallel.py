"""Order-preserving parallel map over independent samples."""
from concurrent.futures import ProcessPoolExecutor


def pmap(fn, items, threads=1):
    """``[fn(x) for x in items]``, in worker processes when ``threads > 1``.

    Results come back in input order whatever the completion order.  Worker
    processes rather than threads: Triangle's refinement callback holds
    global state.  ``fn`` must be a module-level function.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(min(threads, len(items))) as ex:
        return list(ex.map(fn, items))
