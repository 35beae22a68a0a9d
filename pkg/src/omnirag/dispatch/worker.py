"""Worker: leases task batches, executes them, reports results.

Execution is idempotent (extraction is deterministic and asset writes
are content-addressed), so re-running a task after a lost lease is
harmless.  A simulated-kill event is built in for chaos tests: once
set, the worker abandons in-flight work and goes silent, as a killed
process would.
"""

from __future__ import annotations

import logging
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor

from .local import Task, TaskResult, execute_task
from .protocol import ProtocolError, request

logger = logging.getLogger(__name__)


class CoordinatorUnreachable(ConnectionError):
    pass


class Worker:
    def __init__(
        self,
        coordinator: tuple[str, int],
        task_fn,
        workers_per_node: int = 1,
        worker_id: str | None = None,
        heartbeat_interval: float = 2.0,
        poll_interval: float = 0.05,
        max_backoff_tries: int = 5,
    ):
        self.coordinator = coordinator
        self.task_fn = task_fn
        self.workers_per_node = workers_per_node
        self.worker_id = worker_id or f"worker-{uuid.uuid4().hex[:8]}"
        self.heartbeat_interval = heartbeat_interval
        self.poll_interval = poll_interval
        self.max_backoff_tries = max_backoff_tries
        self.killed = threading.Event()
        self.executed: list[str] = []

    def kill(self):
        """Simulate an abrupt worker death (stops heartbeats and reports)."""
        self.killed.set()

    def _rpc(self, msg: dict) -> dict:
        delay = 0.05
        for attempt in range(self.max_backoff_tries):
            if self.killed.is_set():
                raise CoordinatorUnreachable("worker killed")
            try:
                return request(self.coordinator, msg)
            except (OSError, ProtocolError) as e:
                if attempt == self.max_backoff_tries - 1:
                    raise CoordinatorUnreachable(str(e)) from e
                time.sleep(delay)
                delay *= 2
        raise CoordinatorUnreachable("unreachable")

    def _heartbeat_loop(self):
        while not self.killed.is_set() and not self._finished.is_set():
            try:
                self._rpc({"type": "HEARTBEAT", "worker_id": self.worker_id})
            except CoordinatorUnreachable:
                return
            self._finished.wait(self.heartbeat_interval)

    def run(self) -> int:
        """Lease/execute/report until the coordinator declares the job done."""
        self._finished = threading.Event()
        hb = threading.Thread(target=self._heartbeat_loop, daemon=True)
        hb.start()
        try:
            with ThreadPoolExecutor(max_workers=self.workers_per_node) as pool:
                while not self.killed.is_set():
                    lease = self._rpc({"type": "LEASE_REQ", "worker_id": self.worker_id})
                    tasks = [Task.from_dict(t) for t in lease.get("tasks", [])]
                    if not tasks:
                        if lease.get("done"):
                            return 0
                        time.sleep(self.poll_interval)
                        continue
                    futures = [
                        pool.submit(execute_task, t, self.task_fn, self.worker_id)
                        for t in tasks
                    ]
                    for fut in futures:
                        result: TaskResult = fut.result()
                        if self.killed.is_set():
                            return 1  # abandon in-flight results
                        self.executed.append(result.task_id)
                        self._rpc({"type": "RESULT", "result": result.to_dict()})
            return 0
        except CoordinatorUnreachable:
            logger.warning("worker %s lost the coordinator", self.worker_id)
            return 1
        finally:
            self._finished.set()
