import logging
import multiprocessing as mp
import time
from multiprocessing import Pool
from typing import Callable, Iterator, List, Optional, Sequence, TypeVar

import psutil
from tqdm import tqdm

T = TypeVar("T")
R = TypeVar("R")


def chunk_ranges(total: int, chunk_size: int) -> List[range]:
    """Split [0, total) into consecutive ranges whose boundaries depend only on total"""
    return [range(start, min(start + chunk_size, total)) for start in range(0, total, chunk_size)]


class ChunkExecutor:
    """
    Runs a function over work items, in parallel when more than one worker is requested.

    Results always come back in work-item order (Pool.imap), so merging them sequentially
    gives the same answer for any worker count.
    """

    def __init__(self, workers: int = 1, show_progress: bool = False, description: str = "Processing"):
        self.logger = logging.getLogger(__name__)
        self.cpu_count = mp.cpu_count()
        self.workers = max(1, min(workers, self.cpu_count))
        if self.workers != workers:
            self.logger.info(f"Requested {workers} workers, using {self.workers} (cpu count {self.cpu_count})")
        self.show_progress = show_progress
        self.description = description

        self.start_time: Optional[float] = None
        self.items_processed = 0

    def map_ordered(self, func: Callable[[T], R], work_items: Sequence[T]) -> Iterator[R]:
        self.start_time = time.time()
        self.items_processed = 0

        with tqdm(total=len(work_items), desc=self.description, disable=not self.show_progress) as pbar:
            if self.workers == 1 or len(work_items) <= 1:
                for item in work_items:
                    result = func(item)
                    self.items_processed += 1
                    pbar.update(1)
                    yield result
            else:
                with Pool(processes=self.workers) as pool:
                    for result in pool.imap(func, work_items, chunksize=1):
                        self.items_processed += 1
                        pbar.update(1)
                        yield result

        self._log_performance_stats()

    def _log_performance_stats(self):
        if not self.start_time:
            return

        elapsed = time.time() - self.start_time
        rate = self.items_processed / elapsed if elapsed > 0 else 0

        self.logger.info(f"{self.description}: {self.items_processed:,} chunks on {self.workers} worker(s)")
        self.logger.info(f"  Time elapsed: {elapsed:.2f} seconds ({rate:.2f} chunks/second)")
        self.logger.info(f"  Memory used: {psutil.Process().memory_info().rss / 1024 / 1024:.2f} MB")


def estimate_array_memory_mb(rows: int, columns: int, itemsize: int = 8) -> float:
    """Rough size of a dense float array, used to report lattice work"""
    return rows * columns * itemsize / 1024 / 1024
