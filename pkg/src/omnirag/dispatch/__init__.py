from .local import JobConfig, Task, TaskResult, resolve_inputs, run_local
from .coordinator import BindFailure, Coordinator
from .worker import CoordinatorUnreachable, Worker

__all__ = [
    "BindFailure",
    "Coordinator",
    "CoordinatorUnreachable",
    "JobConfig",
    "Task",
    "TaskResult",
    "Worker",
    "resolve_inputs",
    "run_local",
]
