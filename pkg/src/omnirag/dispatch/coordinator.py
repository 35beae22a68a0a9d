"""Coordinator: leases tasks to workers, collects exactly-once results.

Workers pull batches (automatic balancing); a lease whose worker misses
three heartbeat intervals is returned to the queue.  Execution is
at-least-once, output is exactly-once: the first terminal result per
task wins and later duplicates are discarded.  Results are appended to
a durable log before acknowledgment, so a restarted coordinator can
resume from the log.
"""

from __future__ import annotations

import json
import logging
import socketserver
import threading
import time
from collections import deque
from pathlib import Path

from .local import JobConfig, Task, TaskResult
from .protocol import recv_msg, send_msg

logger = logging.getLogger(__name__)

LEASE_TIMEOUT_INTERVALS = 3


class BindFailure(OSError):
    pass


class Coordinator:
    def __init__(self, tasks: list[Task], job: JobConfig, result_log: str | None = None):
        self.job = job
        self._lock = threading.Lock()
        self._pending: deque[Task] = deque(tasks)
        self._tasks = {t.task_id: t for t in tasks}
        self._leases: dict[str, tuple[str, Task]] = {}  # task_id -> (worker_id, task)
        self._heartbeats: dict[str, float] = {}
        self._results: dict[str, TaskResult] = {}
        self._attempts: dict[str, int] = {t.task_id: t.attempt for t in tasks}
        self._done = threading.Event()
        self._result_log = Path(result_log) if result_log else None
        self._log_fh = None
        if self._result_log and self._result_log.exists():
            self._recover_from_log()
        self._server: socketserver.ThreadingTCPServer | None = None
        self._threads: list[threading.Thread] = []
        self._stop = threading.Event()
        self._check_done()

    # -- durable log ----------------------------------------------------------

    def _recover_from_log(self):
        with open(self._result_log, encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                res = TaskResult.from_dict(json.loads(line))
                if res.task_id in self._tasks and res.task_id not in self._results:
                    self._results[res.task_id] = res
        done_ids = set(self._results)
        self._pending = deque(t for t in self._pending if t.task_id not in done_ids)
        logger.info("recovered %d terminal results from log", len(done_ids))

    def _append_log(self, result: TaskResult):
        if self._result_log is None:
            return
        if self._log_fh is None:
            self._log_fh = open(self._result_log, "a", encoding="utf-8")
        self._log_fh.write(json.dumps(result.to_dict()) + "\n")
        self._log_fh.flush()

    # -- state transitions (caller holds the lock) ------------------------------

    def _terminal(self, result: TaskResult):
        if result.task_id in self._results:
            return  # first-wins dedup
        self._append_log(result)
        self._results[result.task_id] = result
        self._leases.pop(result.task_id, None)
        self._check_done()

    def _requeue(self, task: Task, why: str):
        attempt = self._attempts[task.task_id] + 1
        self._attempts[task.task_id] = attempt
        retry = Task(task.task_id, task.path, task.mode, attempt)
        if attempt <= self.job.max_retries:
            logger.info("requeue %s (attempt %d): %s", task.task_id, attempt, why)
            self._pending.append(retry)
        else:
            self._terminal(TaskResult(task.task_id, False, error=f"exceeded max_retries: {why}"))

    def _reap_expired(self):
        timeout = LEASE_TIMEOUT_INTERVALS * self.job.heartbeat_interval
        now = time.monotonic()
        dead = {
            w for w, ts in self._heartbeats.items() if now - ts > timeout
        }
        for task_id, (worker_id, task) in list(self._leases.items()):
            if worker_id in dead:
                del self._leases[task_id]
                self._requeue(task, f"worker {worker_id} missed heartbeats")

    def _check_done(self):
        if len(self._results) == len(self._tasks):
            self._done.set()

    # -- protocol handlers -------------------------------------------------------

    def handle(self, msg: dict) -> dict:
        kind = msg.get("type")
        if kind == "LEASE_REQ":
            return self._handle_lease_req(msg)
        if kind == "RESULT":
            return self._handle_result(msg)
        if kind == "HEARTBEAT":
            with self._lock:
                self._heartbeats[msg["worker_id"]] = time.monotonic()
            return {"type": "ACK"}
        return {"type": "ERROR", "error": f"unknown message type {kind!r}"}

    def _handle_lease_req(self, msg: dict) -> dict:
        worker_id = msg["worker_id"]
        n = int(msg.get("n") or self.job.batch_size)
        n = min(n, self.job.batch_size)
        with self._lock:
            self._heartbeats[worker_id] = time.monotonic()
            self._reap_expired()
            granted = []
            while self._pending and len(granted) < n:
                task = self._pending.popleft()
                self._leases[task.task_id] = (worker_id, task)
                granted.append(task.to_dict())
            return {"type": "LEASE", "tasks": granted, "done": self._done.is_set()}

    def _handle_result(self, msg: dict) -> dict:
        result = TaskResult.from_dict(msg["result"])
        with self._lock:
            self._heartbeats[result.worker_id] = time.monotonic()
            if result.task_id not in self._tasks:
                return {"type": "ERROR", "error": f"unknown task {result.task_id}"}
            lease = self._leases.pop(result.task_id, None)
            if result.task_id in self._results:
                return {"type": "ACK", "duplicate": True}
            if result.ok:
                self._terminal(result)
            else:
                task = lease[1] if lease else self._tasks[result.task_id]
                self._requeue(task, result.error)
            return {"type": "ACK"}

    # -- serving ------------------------------------------------------------------

    def serve(self, host: str = "127.0.0.1", port: int = 0) -> tuple[str, int]:
        coordinator = self

        class Handler(socketserver.BaseRequestHandler):
            def handle(self):
                try:
                    msg = recv_msg(self.request)
                    send_msg(self.request, coordinator.handle(msg))
                except Exception as e:
                    logger.debug("connection error: %s", e)

        class Server(socketserver.ThreadingTCPServer):
            allow_reuse_address = True
            daemon_threads = True

        try:
            self._server = Server((host, port), Handler)
        except OSError as e:
            raise BindFailure(f"cannot bind {host}:{port}: {e}") from e
        t = threading.Thread(target=self._server.serve_forever, daemon=True)
        t.start()
        self._threads.append(t)

        reaper = threading.Thread(target=self._reaper_loop, daemon=True)
        reaper.start()
        self._threads.append(reaper)
        return self._server.server_address

    def _reaper_loop(self):
        while not self._stop.is_set() and not self._done.is_set():
            with self._lock:
                self._reap_expired()
            self._stop.wait(self.job.heartbeat_interval)

    def wait(self, timeout: float | None = None) -> bool:
        return self._done.wait(timeout)

    @property
    def results(self) -> dict[str, TaskResult]:
        with self._lock:
            return dict(self._results)

    def shutdown(self):
        self._stop.set()
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()
        if self._log_fh is not None:
            self._log_fh.close()
            self._log_fh = None
