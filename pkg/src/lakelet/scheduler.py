"""Resource negotiator: a discrete-step simulation of the RM/NM/AM workflow.

One ResourceNegotiator owns the node capacities (the RM plus its node
managers) and a set of jobs, each with its own application-master state.
A job walks a fixed lifecycle:

    Submitted -> AmStarting -> AmRegistered -> Negotiating -> Running
              -> (Succeeded | Failed) -> Released

step() advances the simulation one tick: it first syncs the RM's view of
every job to the AM's current state (so the RM lags the AM by at most one
step), then registers started AMs, grants AM containers to the submission
queue in FIFO order, and grants queued task requests first-fit over nodes
in node_id order. Scheduling policy is deliberately the simplest thing
that satisfies the workflow: FIFO queues, first-fit placement, no
preemption.

Capacity safety and conservation are re-checked after every public
mutation; a violation raises immediately rather than corrupting state.
"""

import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .catalog import _encode_line
from .errors import IllegalState, InvalidSpec, UnknownJob

JOB_STATES = (
    "Submitted",
    "AmStarting",
    "AmRegistered",
    "Negotiating",
    "Running",
    "Succeeded",
    "Failed",
    "Released",
)

_NEXT = {
    "Submitted": ("AmStarting",),
    "AmStarting": ("AmRegistered",),
    "AmRegistered": ("Negotiating",),
    "Negotiating": ("Running",),
    "Running": ("Succeeded", "Failed"),
    "Succeeded": ("Released",),
    "Failed": ("Released",),
    "Released": (),
}


@dataclass(frozen=True)
class NodeSpec:
    node_id: str
    cpu_slots: int
    memory_mb: int

    def __post_init__(self):
        if self.cpu_slots <= 0 or self.memory_mb <= 0:
            raise ValueError("node capacities must be positive")


@dataclass(frozen=True)
class ResourceRequest:
    cpu_slots: int
    memory_mb: int


@dataclass(frozen=True)
class ContainerAllocation:
    container_id: str
    node_id: str
    cpu_slots: int
    memory_mb: int
    holder: str


@dataclass
class JobSpec:
    job_id: str
    payload_kind: str = "noop"
    payload_params: dict = field(default_factory=dict)
    am_resources: ResourceRequest = ResourceRequest(1, 128)
    task_resources: tuple = ()


class _Node:
    def __init__(self, spec: NodeSpec):
        self.spec = spec
        self.free_cpu = spec.cpu_slots
        self.free_mem = spec.memory_mb

    def fits(self, req: ResourceRequest) -> bool:
        return self.free_cpu >= req.cpu_slots and self.free_mem >= req.memory_mb

    def allocate(self, req: ResourceRequest) -> None:
        self.free_cpu -= req.cpu_slots
        self.free_mem -= req.memory_mb

    def release(self, alloc: ContainerAllocation) -> None:
        self.free_cpu += alloc.cpu_slots
        self.free_mem += alloc.memory_mb


class _Job:
    def __init__(self, spec: JobSpec):
        self.spec = spec
        self.am_state = "Submitted"
        self.rm_state = "Submitted"
        self.progress = 0.0
        self.detail = ""
        self.containers: list = []


class ResourceNegotiator:
    def __init__(self, nodes, clock, engine=None, log_path=None):
        specs = sorted(nodes, key=lambda n: n.node_id)
        if len({n.node_id for n in specs}) != len(specs):
            raise ValueError("duplicate node ids")
        if not specs:
            raise ValueError("need at least one node")
        self._nodes = [_Node(s) for s in specs]
        self._clock = clock
        self._engine = engine
        self._jobs: dict = {}
        self._am_queue: deque = deque()  # job ids awaiting an AM container
        self._pending: deque = deque()  # (job_id, ResourceRequest) task queue
        self._container_seq = 0
        self._lock = threading.RLock()
        self._log_fh = open(log_path, "a", encoding="utf-8") if log_path else None

    # -- client API -----------------------------------------------------------

    def submit_job(self, spec: JobSpec, ticket=None) -> str:
        with self._lock:
            if self._engine is not None:
                self._engine.require(ticket, "jobs/*", "Submit", self._clock.now())
            if not spec.job_id or spec.job_id in self._jobs:
                raise InvalidSpec(f"job id {spec.job_id!r} missing or already used")
            for req in (spec.am_resources, *spec.task_resources):
                self._check_satisfiable(req)
            job = _Job(spec)
            self._jobs[spec.job_id] = job
            self._am_queue.append(spec.job_id)
            self._log(job, "-", "Submitted")
            self._check_capacity()
            return spec.job_id

    def poll_status(self, job_id: str, ticket=None):
        """The RM's view of the job: (state, progress, detail). The RM lags
        the AM by at most one step; step() reconciles them."""
        if self._engine is not None:
            self._engine.require(ticket, f"jobs/{job_id}", "Read", self._clock.now())
        job = self._get(job_id)
        return job.rm_state, job.progress, job.detail

    def job_state(self, job_id: str) -> str:
        """The AM's own (authoritative) state."""
        return self._get(job_id).am_state

    # -- AM-side API ------------------------------------------------------------

    def negotiate(self, job_id: str, requests) -> list:
        """Queue resource requests; grant immediately what fits, FIFO-fair
        behind earlier unmet requests. The job runs once nothing is left
        pending for it."""
        with self._lock:
            job = self._get(job_id)
            if job.am_state not in ("AmRegistered", "Negotiating"):
                raise IllegalState(f"cannot negotiate in state {job.am_state}")
            for req in requests:
                self._check_satisfiable(req)
            if job.am_state == "AmRegistered":
                self._transition(job, "Negotiating")
            before = len(job.containers)
            for req in requests:
                self._pending.append((job_id, req))
            self._grant_pass()
            self._maybe_run(job)
            self._check_capacity()
            return job.containers[before:]

    def report_progress(self, job_id: str, progress: float, detail: str = "") -> None:
        job = self._get(job_id)
        if job.am_state != "Running":
            raise IllegalState(f"cannot report progress in state {job.am_state}")
        job.progress = min(1.0, max(0.0, progress))
        job.detail = detail

    def complete_job(self, job_id: str, outcome: str = "Succeeded") -> None:
        """Finish a running job: record the outcome, release every container
        (the AM's included), and deregister the AM."""
        with self._lock:
            if outcome not in ("Succeeded", "Failed"):
                raise ValueError(f"outcome must be Succeeded or Failed, not {outcome!r}")
            job = self._get(job_id)
            if job.am_state != "Running":
                raise IllegalState(f"cannot complete job in state {job.am_state}")
            self._transition(job, outcome)
            job.progress = 1.0
            job.rm_state = outcome  # the AM's final report lands at the RM
            by_node = {n.spec.node_id: n for n in self._nodes}
            for alloc in job.containers:
                by_node[alloc.node_id].release(alloc)
            job.containers.clear()
            self._transition(job, "Released")
            self._check_capacity()

    # -- simulation -------------------------------------------------------------

    def step(self) -> bool:
        """Advance one tick; returns whether anything progressed."""
        with self._lock:
            progressed = False
            for job in self._jobs.values():
                if job.rm_state != job.am_state:
                    job.rm_state = job.am_state
                    progressed = True
            for job in self._jobs.values():
                if job.am_state == "AmStarting":
                    self._transition(job, "AmRegistered")
                    progressed = True
            while self._am_queue:
                job = self._jobs[self._am_queue[0]]
                node = self._first_fit(job.spec.am_resources)
                if node is None:
                    break
                self._allocate(node, job, job.spec.am_resources)
                self._transition(job, "AmStarting")
                self._am_queue.popleft()
                progressed = True
            progressed |= self._grant_pass()
            for job in self._jobs.values():
                if job.am_state == "Negotiating":
                    progressed |= self._maybe_run(job)
            self._check_capacity()
            return progressed

    def run_until_quiet(self, max_steps: int = 10_000) -> int:
        steps = 0
        while steps < max_steps and self.step():
            steps += 1
        return steps

    # -- capacity bookkeeping -----------------------------------------------------

    def free_capacity(self) -> dict:
        return {n.spec.node_id: (n.free_cpu, n.free_mem) for n in self._nodes}

    def total_capacity(self) -> dict:
        return {n.spec.node_id: (n.spec.cpu_slots, n.spec.memory_mb) for n in self._nodes}

    def jobs(self) -> list:
        return list(self._jobs)

    # -- internals ---------------------------------------------------------------

    def _get(self, job_id: str) -> _Job:
        if job_id not in self._jobs:
            raise UnknownJob(f"no job {job_id}")
        return self._jobs[job_id]

    def _check_satisfiable(self, req: ResourceRequest) -> None:
        if req.cpu_slots <= 0 or req.memory_mb <= 0:
            raise InvalidSpec(f"request {req} must be positive")
        if not any(n.spec.cpu_slots >= req.cpu_slots and n.spec.memory_mb >= req.memory_mb for n in self._nodes):
            raise InvalidSpec(f"request {req} exceeds every node's capacity")

    def _first_fit(self, req: ResourceRequest) -> Optional[_Node]:
        for node in self._nodes:  # nodes kept sorted by node_id
            if node.fits(req):
                return node
        return None

    def _allocate(self, node: _Node, job: _Job, req: ResourceRequest) -> ContainerAllocation:
        node.allocate(req)
        self._container_seq += 1
        alloc = ContainerAllocation(f"c{self._container_seq:06d}", node.spec.node_id, req.cpu_slots, req.memory_mb, job.spec.job_id)
        job.containers.append(alloc)
        return alloc

    def _grant_pass(self) -> bool:
        granted = False
        while self._pending:
            job_id, req = self._pending[0]
            node = self._first_fit(req)
            if node is None:
                break  # strict FIFO: later requests wait behind the head
            self._pending.popleft()
            self._allocate(node, self._jobs[job_id], req)
            granted = True
        return granted

    def _maybe_run(self, job: _Job) -> bool:
        if job.am_state == "Negotiating" and not any(jid == job.spec.job_id for jid, _ in self._pending):
            self._transition(job, "Running")
            return True
        return False

    def _transition(self, job: _Job, new_state: str) -> None:
        if new_state not in _NEXT[job.am_state]:
            raise IllegalState(f"{job.am_state} -> {new_state} is not a legal transition")
        self._log(job, job.am_state, new_state)
        job.am_state = new_state

    def _log(self, job: _Job, old: str, new: str) -> None:
        if self._log_fh is None:
            return
        self._log_fh.write(_encode_line({"when": self._clock.now(), "job": job.spec.job_id, "from": old, "to": new}) + "\n")
        self._log_fh.flush()

    def _check_capacity(self) -> None:
        allocated = {n.spec.node_id: [0, 0] for n in self._nodes}
        for job in self._jobs.values():
            for alloc in job.containers:
                allocated[alloc.node_id][0] += alloc.cpu_slots
                allocated[alloc.node_id][1] += alloc.memory_mb
        for node in self._nodes:
            cpu, mem = allocated[node.spec.node_id]
            if cpu + node.free_cpu != node.spec.cpu_slots or mem + node.free_mem != node.spec.memory_mb:
                raise RuntimeError(f"conservation violated on {node.spec.node_id}")
            if not (0 <= node.free_cpu <= node.spec.cpu_slots and 0 <= node.free_mem <= node.spec.memory_mb):
                raise RuntimeError(f"capacity violated on {node.spec.node_id}")

    def close(self) -> None:
        if self._log_fh is not None:
            self._log_fh.close()
