"""Spanning-tree topology and phase-by-phase message simulation.

Signers are arranged as a complete-ish b-ary tree, BFS-numbered with the
leader at node 0.  A protocol run is a sequence of phases; each phase
either flows down (every node hears from its parent, then speaks to its
children) or up (every node hears from all children, then speaks to its
parent).  One message crosses each edge per phase, so a 4-phase run over
N nodes moves exactly 4*(N-1) messages.

``run_phase`` drives one phase given a per-node handler and records the
full transcript.  Handlers are ordinary functions; any exception they
raise is wrapped in HandlerFailure tagged with the node id.  A
``SimSchedule`` can permute the processing order within each depth level
(seeded, reproducible) and optionally execute a level's handlers in a
thread pool — useful for shaking out accidental order dependence.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

from .errors import CapacityExceeded, HandlerFailure
from .group import derive_rng

__all__ = [
    "Direction",
    "Phase",
    "Message",
    "Tree",
    "SimSchedule",
    "PhaseResult",
    "capacity",
    "min_branching",
    "build_tree",
    "run_phase",
    "transcript_to_jsonl",
]


class Direction(Enum):
    DOWN = "down"  # root to leaves
    UP = "up"      # leaves to root


class Phase(Enum):
    ANNOUNCE = ("announce", Direction.DOWN)
    COMMIT = ("commit", Direction.UP)
    CHALLENGE = ("challenge", Direction.DOWN)
    RESPOND = ("respond", Direction.UP)

    def __init__(self, label: str, direction: Direction):
        self.label = label
        self.direction = direction


@dataclass(frozen=True)
class Message:
    phase: str
    src: int
    dst: int
    payload: bytes


@dataclass(frozen=True)
class Tree:
    n: int
    branching: int
    max_depth: int
    parent: tuple          # parent[i] is None for the root
    children: tuple        # children[i] is a tuple of node ids
    levels: tuple          # node ids grouped by depth, root level first

    def depth_of(self, node: int) -> int:
        d = 0
        while self.parent[node] is not None:
            node = self.parent[node]
            d += 1
        return d


def capacity(branching: int, max_depth: int) -> int:
    """Nodes a b-ary tree of the given depth can hold (root is depth 0)."""
    if branching == 1:
        return max_depth + 1
    return (branching ** (max_depth + 1) - 1) // (branching - 1)


def min_branching(n: int, max_depth: int = 3, floor: int = 2) -> int:
    """Smallest branching factor >= floor that fits n nodes at this depth."""
    b = max(1, floor)
    while capacity(b, max_depth) < n:
        b += 1
    return b


def build_tree(n: int, branching: int, max_depth: int = 3) -> Tree:
    """BFS-numbered b-ary tree: node 0 is the leader, fill level by level."""
    if n < 1:
        raise ValueError("need at least one node")
    if branching < 1:
        raise ValueError("branching must be >= 1")
    cap = capacity(branching, max_depth)
    if n > cap:
        raise CapacityExceeded(
            f"{n} nodes exceed capacity {cap} of a depth-{max_depth} "
            f"{branching}-ary tree"
        )
    parent: list = [None] * n
    children: list = [[] for _ in range(n)]
    levels: list = [[0]]
    next_id = 1
    while next_id < n:
        level: list = []
        for p in levels[-1]:
            for _ in range(branching):
                if next_id >= n:
                    break
                parent[next_id] = p
                children[p].append(next_id)
                level.append(next_id)
                next_id += 1
        levels.append(level)
    return Tree(
        n=n,
        branching=branching,
        max_depth=max_depth,
        parent=tuple(parent),
        children=tuple(tuple(c) for c in children),
        levels=tuple(tuple(lv) for lv in levels),
    )


# ── scheduling ───────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class SimSchedule:
    """Processing-order policy for a run.

    With ``shuffle`` the node order inside each level is permuted by a
    seeded RNG, so two runs with the same seed still produce identical
    transcripts.  ``parallel`` executes each level's handlers in worker
    threads (message order stays the scheduled order, so transcripts
    remain deterministic).
    """

    seed: int | str = 0
    shuffle: bool = False
    parallel: bool = False
    max_workers: int = 16

    def level_order(self, phase: Phase, depth: int, nodes: tuple) -> list:
        order = list(nodes)
        if self.shuffle:
            derive_rng(self.seed, "sched", phase.label, depth).shuffle(order)
        return order


@dataclass
class PhaseResult:
    outputs: dict = field(default_factory=dict)  # node id -> handler output
    messages: list = field(default_factory=list)
    root_output: bytes | None = None


def _call(handler, node: int, arg):
    try:
        return handler(node, arg)
    except HandlerFailure:
        raise
    except Exception as exc:  # noqa: BLE001 - deliberate wrap with node id
        raise HandlerFailure(node, exc) from exc


def _run_level(schedule: SimSchedule, jobs: list):
    """jobs: list of (node, thunk).  Returns {node: result}; deterministic."""
    if schedule.parallel and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=min(schedule.max_workers, len(jobs))) as pool:
            futures = [(node, pool.submit(thunk)) for node, thunk in jobs]
        results = {}
        failure: HandlerFailure | None = None
        for node, fut in futures:
            exc = fut.exception()
            if exc is not None:
                hf = exc if isinstance(exc, HandlerFailure) else HandlerFailure(node, exc)
                if failure is None or hf.node < failure.node:
                    failure = hf
            else:
                results[node] = fut.result()
        if failure is not None:
            raise failure
        return results
    return {node: thunk() for node, thunk in jobs}


def run_phase(tree: Tree, phase: Phase, handler, *, root_input: bytes | None = None,
              schedule: SimSchedule | None = None) -> PhaseResult:
    """Execute one phase over the tree.

    DOWN phases: handler(node, payload_from_parent) -> payload for children;
    the root receives ``root_input``.  UP phases: handler(node,
    [(child, payload), ...]) -> payload for parent; the root's output lands
    in ``PhaseResult.root_output``.
    """
    schedule = schedule or SimSchedule()
    result = PhaseResult()
    inbox: dict = {}

    if phase.direction is Direction.DOWN:
        inbox[0] = root_input
        for depth, level in enumerate(tree.levels):
            order = schedule.level_order(phase, depth, level)
            jobs = [
                (node, (lambda n=node: _call(handler, n, inbox[n])))
                for node in order
            ]
            outs = _run_level(schedule, jobs)
            for node in order:
                out = outs[node]
                result.outputs[node] = out
                for child in tree.children[node]:
                    inbox[child] = out
                    result.messages.append(Message(phase.label, node, child, out))
    else:
        for depth in range(len(tree.levels) - 1, -1, -1):
            level = tree.levels[depth]
            order = schedule.level_order(phase, depth, level)
            jobs = [
                (
                    node,
                    (
                        lambda n=node: _call(
                            handler, n, [(ch, inbox[ch]) for ch in tree.children[n]]
                        )
                    ),
                )
                for node in order
            ]
            outs = _run_level(schedule, jobs)
            for node in order:
                out = outs[node]
                result.outputs[node] = out
                inbox[node] = out
                p = tree.parent[node]
                if p is None:
                    result.root_output = out
                else:
                    result.messages.append(Message(phase.label, node, p, out))
    return result


# ── transcript export ────────────────────────────────────────────────────────

def transcript_to_jsonl(messages: list) -> str:
    """One JSON object per line: {"phase", "from", "to", "payload_hex"}."""
    lines = [
        json.dumps(
            {"phase": m.phase, "from": m.src, "to": m.dst,
             "payload_hex": m.payload.hex() if m.payload else ""},
            sort_keys=True,
        )
        for m in messages
    ]
    return "\n".join(lines) + ("\n" if lines else "")
