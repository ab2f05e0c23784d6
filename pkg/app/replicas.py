"""
Replica fan-out.

A replica function takes `(params, streams)` and returns a list of row
dicts for replicas.csv.  Replicas run in-process for one worker and on a
process pool otherwise; results are always aggregated sorted by replica
index, so outputs do not depend on the worker count.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterable
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from .errors import ReplicaAbortBudgetExceeded, SimulationError
from .rng import Label, ReplicaStreams, RngPolicy

logger = logging.getLogger(__name__)

ReplicaFn = Callable[[Any, ReplicaStreams], list[dict]]


@dataclass
class ReplicaOutcome:
    index: int
    rows: list[dict]
    error: str | None = None
    labels: list[tuple[Label, ...]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.error is None


def _run_one(task: tuple[ReplicaFn, Any, RngPolicy, int]) -> ReplicaOutcome:
    fn, params, policy, index = task
    streams = ReplicaStreams(policy, index)
    try:
        rows = fn(params, streams)
    except SimulationError as exc:
        return ReplicaOutcome(index, [], f"{type(exc).__name__}: {exc}", streams.used)
    return ReplicaOutcome(index, rows, None, streams.used)


@dataclass
class ReplicaBatch:
    """Outcomes of one fan-out, sorted by replica index."""

    tag: str
    policy: RngPolicy
    outcomes: list[ReplicaOutcome]

    @property
    def replicas(self) -> int:
        return len(self.outcomes)

    @property
    def aborted(self) -> list[ReplicaOutcome]:
        return [o for o in self.outcomes if not o.ok]

    @property
    def rows(self) -> list[dict]:
        return [row for o in self.outcomes for row in o.rows]

    def column(self, name: str, **where: Any) -> np.ndarray:
        """Values of `name` over successful rows matching `where`, in replica order."""
        values = [
            row[name]
            for row in self.rows
            if all(row.get(k) == v for k, v in where.items())
        ]
        return np.asarray(values, dtype=np.float64)

    def labels(self) -> list[str]:
        roles = sorted({"/".join(str(v) for v in label) for o in self.outcomes for label in o.labels})
        return [f"({self.policy.experiment}, <replica>, {role})" for role in roles]


@dataclass
class RunContext:
    """Everything an estimator needs to fan replicas out deterministically."""

    policy: RngPolicy
    replicas: int
    threads: int = 1
    abort_budget: float = 0.01
    confidence: float = 0.95
    batches: list[ReplicaBatch] = field(default_factory=list)

    def map(self, fn: ReplicaFn, params: Any, tag: str | None = None, replicas: int | None = None) -> ReplicaBatch:
        """Run `replicas` copies of `fn`; `tag` separates the stream labels of sub-experiments."""
        policy = self.policy if tag is None else replace(self.policy, experiment=f"{self.policy.experiment}/{tag}")
        count = self.replicas if replicas is None else replicas
        tasks = [(fn, params, policy, i) for i in range(count)]
        outcomes = list(self._execute(tasks))
        outcomes.sort(key=lambda o: o.index)
        batch = ReplicaBatch(tag or "main", policy, outcomes)
        for outcome in batch.aborted:
            logger.warning("replica %d of %s aborted: %s", outcome.index, batch.tag, outcome.error)
        self.batches.append(batch)
        return batch

    def _execute(self, tasks: list) -> Iterable[ReplicaOutcome]:
        if self.threads <= 1 or len(tasks) < 2:
            return map(_run_one, tasks)
        chunksize = max(1, len(tasks) // (4 * self.threads))
        with ProcessPoolExecutor(max_workers=self.threads) as executor:
            return list(executor.map(_run_one, tasks, chunksize=chunksize))

    @property
    def total(self) -> int:
        return sum(b.replicas for b in self.batches)

    @property
    def aborted(self) -> int:
        return sum(len(b.aborted) for b in self.batches)

    @property
    def over_budget(self) -> bool:
        return self.total > 0 and self.aborted > self.abort_budget * self.total

    def check_budget(self) -> None:
        if self.over_budget:
            raise ReplicaAbortBudgetExceeded(self.aborted, self.total, self.abort_budget)

    def abort_rows(self) -> list[dict]:
        return [
            {"batch": b.tag, "replica": o.index, "error": o.error}
            for b in self.batches
            for o in b.aborted
        ]

    def labels(self) -> list[str]:
        return [label for b in self.batches for label in b.labels()]
