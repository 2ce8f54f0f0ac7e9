"""Optimal waypoint distributions and the variational bound they maximize.

A waypoint pairs an intermediate goal with the state where it is achieved.
The unnormalized target weight of a waypoint is

    v(goal | substate) * v(subgoal | start_state) * exp(r(subgoal, substate)),

the product of the success probability after the waypoint, the success
probability of reaching the waypoint's goal, and an achievement bonus. All
quantities are kept in log domain; waypoints with a zero value factor carry
-inf.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .env import Environment
from .errors import ContractViolationError, DegenerateTargetError, InputDomainError

EXACT = "exact"
LEARNED = "learned"


class Waypoint(NamedTuple):
    subgoal: int
    substate: int


def waypoint_index(env: Environment, w: Waypoint) -> int:
    """Row-major index of a waypoint in the (goal, state) grid."""
    env.check_goal(w.subgoal)
    env.check_state(w.substate)
    return w.subgoal * env.num_states + w.substate


def index_waypoint(env: Environment, idx: int) -> Waypoint:
    g, s = divmod(int(idx), env.num_states)
    env.check_goal(g)
    return Waypoint(subgoal=g, substate=s)


class ValueFn:
    """Success-probability table v(goal | from_state) with provenance tag.

    ``tag`` is EXACT when backed by the dynamic-programming computation and
    LEARNED when backed by the likelihood estimator. Values must lie in [0, 1].
    """

    def __init__(self, evaluate: Callable[[int, int], float], tag: str, env: Environment):
        self._evaluate = evaluate
        self.tag = tag
        self._env = env
        self._matrix: np.ndarray | None = None

    def value(self, goal: int, from_state: int) -> float:
        v = float(self._evaluate(goal, from_state))
        if not 0.0 <= v <= 1.0:
            raise ContractViolationError(
                f"value function returned {v} outside [0, 1] at goal={goal}, state={from_state}"
            )
        return v

    def matrix(self) -> np.ndarray:
        """(G, S) matrix of v(goal | state); computed once and cached."""
        if self._matrix is None:
            env = self._env
            m = np.empty((env.num_goals, env.num_states))
            for g in range(env.num_goals):
                for s in range(env.num_states):
                    m[g, s] = self.value(g, s)
            m.flags.writeable = False
            self._matrix = m
        return self._matrix


def exact_value_fn(policy, env: Environment) -> ValueFn:
    """EXACT value function: per-goal dynamic programming, cached per goal."""
    from .policy import success_probs_vector

    cache: dict = {}

    def evaluate(goal: int, from_state: int) -> float:
        if goal not in cache:
            cache[goal] = success_probs_vector(policy, env, goal)
        return float(cache[goal][from_state])

    return ValueFn(evaluate, EXACT, env)


def learned_value_fn(estimator, env: Environment) -> ValueFn:
    """LEARNED value function backed by the likelihood estimator's table."""
    from .models import likelihood_predict

    return ValueFn(lambda g, s: likelihood_predict(estimator, g, s), LEARNED, env)


@dataclass
class WaypointDist:
    """Explicit distribution over the full waypoint grid."""

    probs: np.ndarray  # (num_goals * num_states,)
    num_goals: int
    num_states: int

    def validate(self) -> None:
        if self.probs.shape != (self.num_goals * self.num_states,):
            raise ContractViolationError("waypoint distribution has wrong support size")
        if (self.probs < 0).any():
            raise ContractViolationError("waypoint probabilities must be non-negative")
        if abs(float(self.probs.sum()) - 1.0) > 1e-10:
            raise ContractViolationError("waypoint probabilities must sum to 1")

    def prob(self, env: Environment, w: Waypoint) -> float:
        return float(self.probs[waypoint_index(env, w)])

    def as_dict(self, env: Environment) -> dict:
        return {
            index_waypoint(env, i): float(p)
            for i, p in enumerate(self.probs)
            if p > 0
        }


def _log_value_matrix(values: ValueFn) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(values.matrix())


def log_weight_grid(goal: int, state: int, values: ValueFn, env: Environment) -> np.ndarray:
    """log unnormalized target weight for every waypoint, flattened row-major.

    Entry [subgoal * S + substate] = log v(goal|substate) + log v(subgoal|state)
    + r(subgoal, substate); -inf where a value factor is zero.
    """
    env.check_goal(goal)
    env.check_state(state)
    logv = _log_value_matrix(values)
    r = env.achieves.astype(np.float64)
    grid = logv[goal][None, :] + logv[:, state][:, None] + r
    return grid.reshape(-1)


def log_waypoint_weight(
    w: Waypoint, goal: int, state: int, values: ValueFn, env: Environment
) -> float:
    """log of the unnormalized target weight of a single waypoint."""
    env.check_goal(goal)
    env.check_state(state)
    v_after = values.value(goal, w.substate)
    v_to = values.value(w.subgoal, state)
    if v_after == 0.0 or v_to == 0.0:
        return -math.inf
    return math.log(v_after) + math.log(v_to) + float(env.achieves[w.subgoal, w.substate])


def waypoint_weight(
    w: Waypoint, goal: int, state: int, values: ValueFn, env: Environment
) -> float:
    """Unnormalized target weight in linear domain (may be 0)."""
    lw = log_waypoint_weight(w, goal, state, values, env)
    return 0.0 if lw == -math.inf else math.exp(lw)


def optimal_waypoint_dist(
    goal: int, state: int, values: ValueFn, env: Environment
) -> WaypointDist:
    """The closed-form optimal waypoint distribution: normalized target weights."""
    logw = log_weight_grid(goal, state, values, env)
    m = logw.max()
    if m == -math.inf:
        raise DegenerateTargetError(
            f"all waypoint weights are zero for goal={goal}, state={state}"
        )
    p = np.exp(logw - m)
    p /= p.sum()
    dist = WaypointDist(probs=p, num_goals=env.num_goals, num_states=env.num_states)
    dist.validate()
    return dist


def elbo(q: WaypointDist, goal: int, state: int, values: ValueFn, env: Environment) -> float:
    """Variational lower-bound value of q against the waypoint target.

    sum_w q(w) [log v(goal|s_w) + log v(g_w|state) + r(g_w,s_w) - log q(w)],
    with the 0 log 0 = 0 convention. Returns -inf when q puts mass on a
    zero-weight waypoint.
    """
    q.validate()
    if (q.num_goals, q.num_states) != (env.num_goals, env.num_states):
        raise InputDomainError("distribution support does not match the environment grid")
    logw = log_weight_grid(goal, state, values, env)
    support = q.probs > 0
    if np.any(logw[support] == -math.inf):
        return -math.inf
    qs = q.probs[support]
    return float(np.dot(qs, logw[support] - np.log(qs)))


def log_reward_partition(subgoal: int, env: Environment) -> float:
    """log sum over states of exp(r(subgoal, state)).

    For binary rewards with k achieving states out of S this is
    log(S - k + k*e); it is the constant absorbed when the reward-softmax
    state model is folded into the bound.
    """
    env.check_goal(subgoal)
    k = int(env.achieves[subgoal].sum())
    return math.log(env.num_states - k + k * math.e)


def joint_marginal(goal: int, state: int, values: ValueFn, env: Environment) -> float:
    """Marginal of the factorized joint model over all waypoints.

    sum_{g_w, s_w} v(goal|s_w) v(g_w|state) exp(r - log_reward_partition(g_w)).
    This is the quantity the corrected bound controls.
    """
    logw = log_weight_grid(goal, state, values, env)
    c = np.array([log_reward_partition(g, env) for g in range(env.num_goals)])
    shifted = logw - np.repeat(c, env.num_states)
    m = shifted.max()
    if m == -math.inf:
        return 0.0
    return float(math.exp(m) * np.exp(shifted - m).sum())


def write_posterior_csv(path, goal: int, state: int, values: ValueFn, env: Environment) -> None:
    """Dump per-waypoint log weights and optimal probabilities as CSV."""
    logw = log_weight_grid(goal, state, values, env)
    dist = optimal_waypoint_dist(goal, state, values, env)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["goal", "state", "subgoal", "substate", "log_f0", "qstar_prob"])
        for i in range(env.num_waypoints):
            w = index_waypoint(env, i)
            writer.writerow(
                [goal, state, w.subgoal, w.substate, repr(float(logw[i])), repr(float(dist.probs[i]))]
            )
