"""Intra-node execution: a worker pool that streams task results.

The default task function runs the extractors; tests and the
distributed layer can inject their own.  Per-task failures become
failed results and never abort the job.
"""

from __future__ import annotations

import glob
import logging
import os
import time
import uuid
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path

from ..core import sample_to_dict
from ..extract import ExtractionContext, extract

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Task:
    task_id: str
    path: str
    mode: str = "default"
    attempt: int = 0

    def to_dict(self) -> dict:
        return {"task_id": self.task_id, "path": self.path, "mode": self.mode, "attempt": self.attempt}

    @classmethod
    def from_dict(cls, obj: dict) -> "Task":
        return cls(obj["task_id"], obj["path"], obj.get("mode", "default"), obj.get("attempt", 0))


@dataclass(frozen=True)
class TaskResult:
    task_id: str
    ok: bool
    sample: dict | None = None
    error: str = ""
    worker_id: str = ""
    duration: float = 0.0

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "ok": self.ok,
            "sample": self.sample,
            "error": self.error,
            "worker_id": self.worker_id,
            "duration": self.duration,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "TaskResult":
        return cls(
            obj["task_id"], obj["ok"], obj.get("sample"), obj.get("error", ""),
            obj.get("worker_id", ""), obj.get("duration", 0.0),
        )


@dataclass
class JobConfig:
    inputs: list[str] = field(default_factory=list)
    mode: str = "default"
    workers_per_node: int = max(1, os.cpu_count() or 1)
    batch_size: int = 4
    max_retries: int = 2
    coordinator: str = ""  # host:port, distributed mode only
    assets_dir: str = "assets"
    heartbeat_interval: float = 2.0
    placeholder: str = "<attachment>"

    def __post_init__(self):
        if self.workers_per_node < 1:
            raise ValueError("workers_per_node must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def resolve_inputs(patterns: list[str]) -> list[str]:
    """Expand globs and directories (recursive) into a sorted file list."""
    out: set[str] = set()
    for pat in patterns:
        p = Path(pat)
        if p.is_dir():
            out.update(str(f) for f in p.rglob("*") if f.is_file())
        elif p.is_file():
            out.add(str(p))
        else:
            out.update(f for f in glob.glob(pat, recursive=True) if Path(f).is_file())
    return sorted(out)


def make_extract_task_fn(job: JobConfig):
    ctx = ExtractionContext(assets_dir=Path(job.assets_dir))

    def task_fn(task: Task) -> dict:
        sample = extract(task.path, task.mode, ctx)
        return sample_to_dict(sample)

    return task_fn


def execute_task(task: Task, task_fn, worker_id: str = "local") -> TaskResult:
    start = time.monotonic()
    try:
        sample = task_fn(task)
        return TaskResult(task.task_id, True, sample=sample, worker_id=worker_id,
                          duration=time.monotonic() - start)
    except Exception as e:
        logger.debug("task %s failed: %s", task.task_id, e)
        return TaskResult(task.task_id, False, error=f"{type(e).__name__}: {e}",
                          worker_id=worker_id, duration=time.monotonic() - start)


def make_tasks(job: JobConfig) -> list[Task]:
    files = resolve_inputs(job.inputs)
    return [Task(f"{uuid.uuid4().hex[:8]}-{i}", f, job.mode) for i, f in enumerate(files)]


def run_local(job: JobConfig, task_fn=None, tasks: list[Task] | None = None):
    """Run every task on a local pool; yields results as they complete."""
    if tasks is None:
        tasks = make_tasks(job)
    if task_fn is None:
        task_fn = make_extract_task_fn(job)
    if not tasks:
        return
    with ThreadPoolExecutor(max_workers=job.workers_per_node) as pool:
        futures = [pool.submit(execute_task, t, task_fn) for t in tasks]
        for fut in as_completed(futures):
            yield fut.result()
