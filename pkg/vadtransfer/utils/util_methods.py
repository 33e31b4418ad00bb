import hashlib
import queue
import threading

import numpy as np

from typing import Any, Callable, List, Sequence, Union


def get_filehash(path: str) -> Union[str, None]:
    if not path:
        return ""
    with open(path, 'rb') as fh:
        return hashlib.md5(fh.read()).hexdigest()


def derive_seed(*keys: int) -> int:
    """
    stable child seed from an integer key path (seed, layer, purpose...)
    """
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1)[0])


def derive_rng(*keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(k) for k in keys]))


def name_seed(name: str) -> int:
    return int(hashlib.md5(name.encode()).hexdigest()[:8], 16)


def run_in_threads(items: Sequence[Any], handler: Callable[[Any], Any], thread_count: int = 1) -> List[Any]:
    """
    Drain `items` through `handler` with `thread_count` worker threads; results keep the input order.
    The first worker exception is re-raised once every thread has stopped.
    """
    work = queue.Queue()
    for idx, item in enumerate(items):
        work.put((idx, item))
    results: List[Any] = [None] * len(items)
    errors: List[Exception] = list()
    errors_mutex = threading.RLock()

    def worker():
        while not errors:
            try:
                idx, item = work.get_nowait()
            except queue.Empty:
                return
            try:
                results[idx] = handler(item)
            except Exception as exc:
                with errors_mutex:
                    errors.append(exc)

    threads = [threading.Thread(target=worker, daemon=True) for _ in range(max(1, min(thread_count, len(items))))]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        raise errors[0]
    return results
