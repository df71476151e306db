"""
Verification queue for the Kloosterman toolkit
Runs independent verification tasks on worker threads and hands results back in submission order
"""

import os
import threading
import time
import logging
from collections import deque
from dataclasses import dataclass
from typing import Any, Callable, Deque, Dict, List, Optional, Tuple

from dotenv import load_dotenv

from errors import require
from performance_monitor import record_task

logger = logging.getLogger(__name__)

WORKERS_ENV = 'KLOOSTERMAN_WORKERS'


def default_workers() -> int:
    load_dotenv()
    raw = os.getenv(WORKERS_ENV, '1')
    try:
        return max(1, int(raw))
    except ValueError:
        logger.warning(f"Ignoring non-integer {WORKERS_ENV}={raw!r}")
        return 1


@dataclass
class TaskResult:
    """Outcome of one queued task"""
    task_id: str
    value: Any = None
    error: Optional[BaseException] = None
    duration: float = 0.0

    @property
    def ok(self) -> bool:
        return self.error is None

    def unwrap(self) -> Any:
        if self.error is not None:
            raise self.error
        return self.value


class VerificationQueue:
    """Fixed pool of worker threads draining a task deque"""

    def __init__(self, workers: Optional[int] = None):
        self.workers = default_workers() if workers is None else workers
        require(self.workers >= 1, f"workers must be >= 1, got {self.workers}")
        self.pending: Deque[Tuple[int, str, Callable, tuple, dict]] = deque()
        self.results: Dict[int, TaskResult] = {}
        self.lock = threading.Lock()
        self.submitted = 0

    def submit(self, task_id: str, func: Callable, *args, **kwargs) -> None:
        with self.lock:
            self.pending.append((self.submitted, task_id, func, args, kwargs))
            self.submitted += 1

    def _execute(self, task_id: str, func: Callable, args: tuple, kwargs: dict) -> TaskResult:
        start = time.perf_counter()
        try:
            value = func(*args, **kwargs)
            result = TaskResult(task_id=task_id, value=value, duration=time.perf_counter() - start)
        except Exception as e:
            result = TaskResult(task_id=task_id, error=e, duration=time.perf_counter() - start)
            logger.error(f"Task {task_id} failed: {e}")
        record_task(task_id, result.duration, result.ok, None if result.ok else str(result.error))
        logger.debug(f"Task {task_id} finished in {result.duration:.3f}s")
        return result

    def _worker_loop(self) -> None:
        while True:
            with self.lock:
                if not self.pending:
                    return
                index, task_id, func, args, kwargs = self.pending.popleft()
            result = self._execute(task_id, func, args, kwargs)
            with self.lock:
                self.results[index] = result

    def run(self) -> List[TaskResult]:
        """Drain the queue; results come back in submission order whatever the worker count"""
        count = len(self.pending)
        if self.workers == 1 or count <= 1:
            self._worker_loop()
        else:
            threads = [threading.Thread(target=self._worker_loop, daemon=True)
                       for _ in range(min(self.workers, count))]
            for thread in threads:
                thread.start()
            for thread in threads:
                thread.join()
        ordered = [self.results[index] for index in sorted(self.results)]
        self.results = {}
        logger.info(f"Verification queue finished {len(ordered)} tasks on {self.workers} workers")
        return ordered
