"""Split / process / merge orchestration over a lease-based task queue.

``split`` partitions the campaign into equally sized tasks, worker threads
lease tasks from a shared :class:`TaskQueue`, a sweeper thread returns
expired leases to the queue, and ``merge`` reduces the per-task
accumulators in ascending task order with a fixed binary tree. Results
are therefore bit-identical for any worker count or completion order.
"""
from __future__ import annotations

import enum
import heapq
import logging
import threading
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .costs import TimingBreakdown
from .errors import ConfigError, DuplicateTask, MissingTask, ProblemError, UnknownTask
from .problems import BarProblem, ToyDigitSquare
from .rng import StreamId, derive_stream
from .stats import HistogramSpec, MomentAccumulator, merge_tree

log = logging.getLogger(__name__)

MIN_SWEEP_MS = 10.0


@dataclass(frozen=True)
class RunConfig:
    n_mc: int
    n_serial: int
    n_workers: int = 1
    base_seed: int = 0
    lease_duration: float = 60_000.0  # ms
    problem: ToyDigitSquare | BarProblem = field(default_factory=ToyDigitSquare)
    histogram_spec: HistogramSpec = field(default_factory=HistogramSpec)
    output_dir: str | None = None

    def __post_init__(self):
        for name in ("n_mc", "n_serial", "n_workers"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v}")
        if not self.lease_duration > 0:
            raise ConfigError("lease_duration must be positive")
        if not 0 <= self.base_seed < 1 << 64:
            raise ConfigError("base_seed must be an unsigned 64-bit integer")
        if self.n_mc % self.n_serial:
            raise ConfigError(
                f"n_mc={self.n_mc} is not a multiple of n_serial={self.n_serial}")

    @property
    def n_tasks(self):
        return self.n_mc // self.n_serial

    @property
    def sweep_period(self):
        """Seconds between lease sweeps."""
        return max(self.lease_duration / 4.0, MIN_SWEEP_MS) / 1e3


@dataclass(frozen=True)
class TaskSpec:
    task_index: int
    n_realizations: int
    stream_id: int


@dataclass(frozen=True, eq=False)
class TaskResult:
    task_index: int
    channel_moments: MomentAccumulator
    tracked_samples: np.ndarray
    wall_time: float = 0.0  # seconds
    bytes_written: int = 0


class State(enum.Enum):
    PENDING = "pending"
    LEASED = "leased"
    DONE = "done"


@dataclass
class QueueEntry:
    spec: TaskSpec
    state: State = State.PENDING
    deadline: float | None = None
    attempts: int = 0
    result: TaskResult | None = None


@dataclass(frozen=True)
class FaultPlan:
    """Faults injected on the first attempt of the listed task indices.

    abandon:   the worker silently drops the task; only lease expiry recovers it.
    fail:      the worker reports a failure and the task returns to the queue.
    stall:     the worker overruns its lease before completing.
    duplicate: the worker submits its result twice.
    """

    abandon: frozenset = frozenset()
    fail: frozenset = frozenset()
    stall: frozenset = frozenset()
    duplicate: frozenset = frozenset()

    @classmethod
    def random(cls, n_tasks, fraction, seed=0):
        """Abandon ``fraction`` of the tasks and duplicate a disjoint share."""
        rng = np.random.default_rng(seed)
        k = int(round(fraction * n_tasks))
        order = rng.permutation(n_tasks)
        return cls(abandon=frozenset(int(i) for i in order[:k]),
                   duplicate=frozenset(int(i) for i in order[k:2 * k]))


class TaskQueue:
    """Thread-safe queue of task leases; times are milliseconds."""

    def __init__(self, specs, lease_duration):
        self.lease_duration = lease_duration
        self.entries = [QueueEntry(s) for s in specs]
        self._pending = list(range(len(self.entries)))  # min-heap of task indices
        self.discarded = 0
        self._n_done = 0
        self.requeued = 0
        self._lock = threading.Lock()
        self.changed = threading.Condition(self._lock)

    def __len__(self):
        return len(self.entries)

    def acquire(self, worker_id, now):
        """Lease the lowest-index pending task, or return None."""
        with self._lock:
            while self._pending:
                entry = self.entries[heapq.heappop(self._pending)]
                # a re-queued task may have been completed late by its first worker
                if entry.state is State.PENDING:
                    break
            else:
                return None
            entry.state = State.LEASED
            entry.deadline = now + self.lease_duration
            entry.attempts += 1
            log.debug("worker %s leased task %d", worker_id, entry.spec.task_index)
            return entry.spec

    def expire_leases(self, now):
        with self._lock:
            n = 0
            for entry in self.entries:
                if entry.state is State.LEASED and entry.deadline < now:
                    self._requeue(entry)
                    n += 1
            if n:
                self.requeued += n
                self.changed.notify_all()
            return n

    def release(self, task_index):
        """Return a leased task to the queue after a reported failure."""
        with self._lock:
            entry = self._entry(task_index)
            if entry.state is State.LEASED:
                self._requeue(entry)
                self.requeued += 1
                self.changed.notify_all()

    def complete(self, result):
        """Store the first result for a task; later ones are discarded."""
        with self._lock:
            entry = self._entry(result.task_index)
            if entry.state is State.DONE:
                self.discarded += 1
                return False
            entry.state = State.DONE
            entry.deadline = None
            entry.result = result
            self._n_done += 1
            self.changed.notify_all()
            return True

    def attempts(self, task_index):
        with self._lock:
            return self._entry(task_index).attempts

    def state(self, task_index):
        with self._lock:
            return self._entry(task_index).state

    def all_done(self):
        with self._lock:
            return self._n_done == len(self.entries)

    def results(self):
        with self._lock:
            return [e.result for e in self.entries if e.state is State.DONE]

    def _requeue(self, entry):
        entry.state = State.PENDING
        entry.deadline = None
        heapq.heappush(self._pending, entry.spec.task_index)

    def _entry(self, task_index):
        if not 0 <= task_index < len(self.entries):
            raise UnknownTask(task_index)
        return self.entries[task_index]


def split(config):
    """Partition the campaign into ``n_mc / n_serial`` equal tasks."""
    return [TaskSpec(i, config.n_serial, StreamId(config.base_seed, i).value)
            for i in range(config.n_tasks)]


def execute_task(problem, spec, base_seed):
    t0 = time.perf_counter()
    stream = derive_stream(base_seed, spec.task_index)
    acc, tracked = problem.run_task(spec.n_realizations, stream, spec.task_index)
    wall = time.perf_counter() - t0
    tracked = np.asarray(tracked, dtype=float)
    tracked.flags.writeable = False
    return TaskResult(spec.task_index, acc, tracked, wall, acc.nbytes + tracked.nbytes)


@dataclass(frozen=True, eq=False)
class MergedResult:
    channel_moments: MomentAccumulator
    tracked_samples: np.ndarray
    channel_times: np.ndarray
    timing: TimingBreakdown | None = None
    storage_bytes: int = 0
    intermediate_bytes: int = 0
    task_wall_times: tuple = ()
    n_mc: int = 0
    n_serial: int = 0
    base_seed: int = 0
    requeued: int = 0
    discarded: int = 0

    @property
    def n_tasks(self):
        return len(self.task_wall_times)


def merge(results, config=None, channel_times=None):
    """Reduce one result per task index in canonical ascending order."""
    by_index = {}
    for r in results:
        if r.task_index in by_index:
            raise DuplicateTask(f"task {r.task_index} appears more than once")
        by_index[r.task_index] = r
    n_tasks = config.n_tasks if config is not None else len(by_index)
    missing = [i for i in range(n_tasks) if i not in by_index]
    if missing:
        raise MissingTask(f"missing results for tasks {missing[:10]}")
    if len(by_index) != n_tasks:
        raise UnknownTask(f"results outside 0..{n_tasks - 1}")
    ordered = [by_index[i] for i in range(n_tasks)]
    moments = merge_tree(r.channel_moments for r in ordered)
    samples = np.concatenate([r.tracked_samples for r in ordered])
    intermediate = sum(r.bytes_written for r in ordered)
    if channel_times is None and config is not None:
        channel_times = config.problem.channel_times()
    return MergedResult(
        channel_moments=moments,
        tracked_samples=samples,
        channel_times=np.asarray(channel_times) if channel_times is not None else None,
        storage_bytes=moments.nbytes + samples.nbytes,
        intermediate_bytes=intermediate,
        task_wall_times=tuple(r.wall_time for r in ordered),
        n_mc=int(moments.count),
        n_serial=config.n_serial if config is not None else 0,
        base_seed=config.base_seed if config is not None else 0,
    )


def _now_ms():
    return time.monotonic() * 1e3


def _worker(worker_id, queue, config, faults, stop, failures):
    while not stop.is_set():
        spec = queue.acquire(worker_id, _now_ms())
        if spec is None:
            if queue.all_done():
                return
            with queue.changed:
                queue.changed.wait(timeout=config.sweep_period)
            continue
        i = spec.task_index
        first = queue.attempts(i) == 1
        if first and i in faults.abandon:
            log.info("worker %s abandons task %d", worker_id, i)
            continue
        if first and i in faults.fail:
            log.info("worker %s fails task %d", worker_id, i)
            queue.release(i)
            continue
        try:
            result = execute_task(config.problem, spec, config.base_seed)
        except Exception as exc:  # abort the run instead of hanging on a dead worker
            failures.append(exc)
            stop.set()
            return
        if first and i in faults.stall:
            time.sleep(1.5 * config.lease_duration / 1e3)
        queue.complete(result)
        if first and i in faults.duplicate:
            queue.complete(result)


def _sweeper(queue, period, done):
    while not done.wait(period):
        queue.expire_leases(_now_ms())


def process(config, specs, faults=None):
    """Run every task on ``n_workers`` threads; returns the filled queue."""
    faults = faults or FaultPlan()
    queue = TaskQueue(specs, config.lease_duration)
    stop = threading.Event()
    done = threading.Event()
    failures = []
    sweeper = threading.Thread(target=_sweeper, args=(queue, config.sweep_period, done),
                               name="lease-sweeper", daemon=True)
    workers = [threading.Thread(target=_worker, name=f"worker-{w}",
                                args=(w, queue, config, faults, stop, failures), daemon=True)
               for w in range(config.n_workers)]
    sweeper.start()
    for t in workers:
        t.start()
    for t in workers:
        t.join()
    done.set()
    sweeper.join()
    if failures:
        exc = failures[0]
        if isinstance(exc, ProblemError):
            raise exc
        raise ProblemError(f"worker crashed: {exc!r}") from exc
    return queue


def run(config, faults=None):
    """Split, process and merge a whole campaign."""
    t0 = time.perf_counter()
    specs = split(config)
    t1 = time.perf_counter()
    queue = process(config, specs, faults)
    t2 = time.perf_counter()
    merged = merge(queue.results(), config)
    t3 = time.perf_counter()
    timing = TimingBreakdown.from_phases(
        1e3 * (t1 - t0), 1e3 * (t2 - t1), 1e3 * (t3 - t2), config.n_tasks, config.n_workers)
    return replace(merged, timing=timing, requeued=queue.requeued, discarded=queue.discarded)
