"""Enumerable goal-conditioned environments.

Deterministic transitions, binary goal reward, finite horizon. Small enough
that success probabilities, optimal waypoint distributions and normalizing
constants can all be computed exactly by enumeration elsewhere in the
package.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, NewType, Sequence

import numpy as np

from .errors import ConfigurationError, InputDomainError

StateId = NewType("StateId", int)
GoalId = NewType("GoalId", int)
ActionId = NewType("ActionId", int)

# GridNav action indices
UP, DOWN, LEFT, RIGHT, STAY = 0, 1, 2, 3, 4


@dataclass(frozen=True)
class Environment:
    """Immutable tabular environment.

    transition[s, a] is the deterministic successor, achieves[g, s] says
    whether state s satisfies goal g, and difficulty[g] is the shortest
    solution length from the designated start state.
    """

    kind: str
    num_states: int
    num_goals: int
    num_actions: int
    transition: np.ndarray  # (S, A) int
    achieves: np.ndarray  # (G, S) bool
    horizon: int
    difficulty: np.ndarray  # (G,) int
    start_state: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.transition.flags.writeable = False
        self.achieves.flags.writeable = False
        self.difficulty.flags.writeable = False

    @property
    def num_waypoints(self) -> int:
        return self.num_goals * self.num_states

    def check_state(self, s: int) -> None:
        if not 0 <= s < self.num_states:
            raise InputDomainError(f"state {s} out of range [0, {self.num_states})")

    def check_goal(self, g: int) -> None:
        if not 0 <= g < self.num_goals:
            raise InputDomainError(f"goal {g} out of range [0, {self.num_goals})")

    def check_action(self, a: int) -> None:
        if not 0 <= a < self.num_actions:
            raise InputDomainError(f"action {a} out of range [0, {self.num_actions})")


@dataclass
class Trajectory:
    """One rollout: states has length len(actions)+1 and starts at start."""

    start: int
    goal: int
    actions: list
    states: list
    reached: bool


def step(env: Environment, s: StateId, a: ActionId) -> StateId:
    """Deterministic successor of (s, a)."""
    env.check_state(s)
    env.check_action(a)
    return int(env.transition[s, a])


def reward(env: Environment, g: GoalId, s: StateId) -> int:
    """1 iff state s achieves goal g, else 0."""
    env.check_goal(g)
    env.check_state(s)
    return int(env.achieves[g, s])


def bfs_distances(env: Environment, start: int) -> np.ndarray:
    """Shortest action-count from ``start`` to every state (-1 if unreachable)."""
    dist = np.full(env.num_states, -1, dtype=np.int64)
    dist[start] = 0
    queue = deque([start])
    while queue:
        s = queue.popleft()
        for a in range(env.num_actions):
            t = int(env.transition[s, a])
            if dist[t] < 0:
                dist[t] = dist[s] + 1
                queue.append(t)
    return dist


def shortest_action_path(env: Environment, start: int, goal: int) -> list:
    """Action sequence of a shortest path from start to a state achieving goal.

    Ties break on action index order, so the result is deterministic.
    Raises InputDomainError if the goal is unreachable from start.
    """
    env.check_state(start)
    env.check_goal(goal)
    if env.achieves[goal, start]:
        return []
    parent = {start: None}
    queue = deque([start])
    while queue:
        s = queue.popleft()
        for a in range(env.num_actions):
            t = int(env.transition[s, a])
            if t not in parent:
                parent[t] = (s, a)
                if env.achieves[goal, t]:
                    actions = []
                    cur = t
                    while parent[cur] is not None:
                        prev, act = parent[cur]
                        actions.append(act)
                        cur = prev
                    actions.reverse()
                    return actions
                queue.append(t)
    raise InputDomainError(f"goal {goal} unreachable from state {start}")


def validate_trajectory(env: Environment, traj: Trajectory) -> None:
    """Assert the Trajectory invariants; raises AssertionError on breakage."""
    assert len(traj.states) == len(traj.actions) + 1
    assert traj.states[0] == traj.start
    for t, a in enumerate(traj.actions):
        assert traj.states[t + 1] == int(env.transition[traj.states[t], a])
    assert traj.reached == bool(env.achieves[traj.goal, traj.states[-1]])
    assert len(traj.actions) <= env.horizon


def task_pairs(env: Environment) -> list:
    """All (goal, state) pairs where the state does not already achieve the goal."""
    return [
        (g, s)
        for g in range(env.num_goals)
        for s in range(env.num_states)
        if not env.achieves[g, s]
    ]


def _validate(env: Environment) -> Environment:
    if (env.transition < 0).any() or (env.transition >= env.num_states).any():
        raise ConfigurationError("transition map is not total over the state set")
    if not env.achieves.any(axis=1).all():
        bad = int(np.flatnonzero(~env.achieves.any(axis=1))[0])
        raise ConfigurationError(f"goal {bad} has no achieving state")
    dist = bfs_distances(env, env.start_state)
    for g in range(env.num_goals):
        reach = dist[env.achieves[g]]
        reach = reach[reach >= 0]
        if reach.size == 0 or reach.min() > env.horizon:
            raise ConfigurationError(
                f"goal {g} not reachable from start within horizon {env.horizon}"
            )
    if (env.difficulty < 0).any():
        raise ConfigurationError("difficulty must be non-negative")
    zero = env.difficulty == 0
    at_start = env.achieves[:, env.start_state]
    if (zero != at_start).any():
        raise ConfigurationError("difficulty 0 must coincide with goals achieved at start")
    return env


def build_gridnav(width: int, height: int, horizon: int) -> Environment:
    """Grid world: cells are both states and goals, moves clamp at the walls.

    Cell (r, c) has index r*width + c; the designated start is cell (0, 0).
    Difficulty of a goal cell is its Manhattan distance from the start.
    """
    if width < 1 or height < 1 or width * height < 2:
        raise ConfigurationError("gridnav needs at least two cells")
    if horizon < 1:
        raise ConfigurationError("horizon must be >= 1")
    n = width * height
    transition = np.empty((n, 5), dtype=np.int64)
    for r in range(height):
        for c in range(width):
            s = r * width + c
            transition[s, UP] = (max(r - 1, 0)) * width + c
            transition[s, DOWN] = (min(r + 1, height - 1)) * width + c
            transition[s, LEFT] = r * width + max(c - 1, 0)
            transition[s, RIGHT] = r * width + min(c + 1, width - 1)
            transition[s, STAY] = s
    achieves = np.eye(n, dtype=bool)
    rows, cols = np.divmod(np.arange(n), width)
    difficulty = np.abs(rows) + np.abs(cols)  # Manhattan distance from (0, 0)
    env = Environment(
        kind="gridnav",
        num_states=n,
        num_goals=n,
        num_actions=5,
        transition=transition,
        achieves=achieves,
        horizon=horizon,
        difficulty=difficulty.astype(np.int64),
        start_state=0,
        params={"width": width, "height": height, "horizon": horizon},
    )
    return _validate(env)


def parse_op(spec: str) -> Callable[[int], int]:
    """Parse an arithmetic op spec like '+1', '-2' or '*2'."""
    spec = spec.strip()
    if len(spec) < 2 or spec[0] not in "+-*":
        raise ConfigurationError(f"bad op spec {spec!r}; expected e.g. '+1', '-2', '*2'")
    try:
        k = int(spec[1:])
    except ValueError as exc:
        raise ConfigurationError(f"bad op operand in {spec!r}") from exc
    if spec[0] == "+":
        return lambda v: v + k
    if spec[0] == "-":
        return lambda v: v - k
    return lambda v: v * k


def build_chainarith(
    max_value: int,
    op_set: Sequence[str],
    horizon: int,
    start: int = 1,
    goals: Sequence[int] | None = None,
) -> Environment:
    """Integer-value chain: states are 0..max_value, actions apply clamped ops.

    Goals are target values. By default the goal set is every value reachable
    from ``start`` within the horizon; an explicit goal set containing an
    unreachable value is rejected.
    """
    if max_value < 2:
        raise ConfigurationError("max_value must be >= 2")
    if not op_set:
        raise ConfigurationError("op_set must be nonempty")
    if horizon < 1:
        raise ConfigurationError("horizon must be >= 1")
    if not 0 <= start <= max_value:
        raise ConfigurationError(f"start value {start} outside [0, {max_value}]")
    ops = [parse_op(o) for o in op_set]
    n = max_value + 1
    transition = np.empty((n, len(ops)), dtype=np.int64)
    for v in range(n):
        for a, op in enumerate(ops):
            transition[v, a] = min(max(op(v), 0), max_value)
    dist = _bfs_over_table(transition, start)
    if goals is None:
        goal_values = [v for v in range(n) if 0 <= dist[v] <= horizon]
    else:
        goal_values = [int(v) for v in goals]
        for v in goal_values:
            if not 0 <= v <= max_value:
                raise ConfigurationError(f"goal value {v} outside [0, {max_value}]")
            if dist[v] < 0 or dist[v] > horizon:
                raise ConfigurationError(
                    f"goal value {v} unreachable from start {start} within horizon"
                )
    if not goal_values:
        raise ConfigurationError("goal set is empty")
    achieves = np.zeros((len(goal_values), n), dtype=bool)
    for g, v in enumerate(goal_values):
        achieves[g, v] = True
    difficulty = np.array([dist[v] for v in goal_values], dtype=np.int64)
    env = Environment(
        kind="chainarith",
        num_states=n,
        num_goals=len(goal_values),
        num_actions=len(ops),
        transition=transition,
        achieves=achieves,
        horizon=horizon,
        difficulty=difficulty,
        start_state=start,
        params={
            "max_value": max_value,
            "ops": list(op_set),
            "horizon": horizon,
            "start": start,
            "goal_values": goal_values,
        },
    )
    return _validate(env)


def _bfs_over_table(transition: np.ndarray, start: int) -> np.ndarray:
    dist = np.full(transition.shape[0], -1, dtype=np.int64)
    dist[start] = 0
    queue = deque([start])
    while queue:
        s = queue.popleft()
        for t in transition[s]:
            t = int(t)
            if dist[t] < 0:
                dist[t] = dist[s] + 1
                queue.append(t)
    return dist
