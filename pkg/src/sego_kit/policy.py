"""Goal-conditioned tabular softmax policy.

Includes Monte-Carlo rollouts, an exact finite-horizon dynamic-programming
computation of the success probability (the quantity that is intractable for
nontrivial policies but exact here), and supervised fitting on successful
trajectories.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .env import Environment, Trajectory
from .errors import ConfigurationError, ContractViolationError, InternalStateError


@dataclass(frozen=True)
class FitConfig:
    learning_rate: float = 0.1
    epochs: int = 50
    l2: float = 0.0

    def __post_init__(self):
        if not 0 < self.learning_rate <= 1.0:
            raise ConfigurationError("learning_rate must be in (0, 1]")
        if self.epochs < 1:
            raise ConfigurationError("epochs must be >= 1")
        if self.l2 < 0:
            raise ConfigurationError("l2 must be >= 0")


@dataclass(frozen=True)
class TabularPolicy:
    """Softmax policy over logits indexed [state][goal][action]."""

    logits: np.ndarray  # (S, G, A) float64
    temperature: float = 1.0

    def __post_init__(self):
        if self.temperature <= 0:
            raise ConfigurationError("temperature must be positive")

    @classmethod
    def uniform(cls, env: Environment, temperature: float = 1.0) -> "TabularPolicy":
        logits = np.zeros((env.num_states, env.num_goals, env.num_actions))
        return cls(logits=logits, temperature=temperature)


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def action_probs(policy: TabularPolicy, s: int, g: int) -> np.ndarray:
    """Softmax action distribution at (s, g)."""
    row = policy.logits[s, g]
    if not np.isfinite(row).all():
        raise InternalStateError(f"non-finite logits at state {s}, goal {g}")
    return _softmax(row / policy.temperature)


def action_prob_table(policy: TabularPolicy, g: int) -> np.ndarray:
    """(S, A) action distributions for goal g, one row per state."""
    block = policy.logits[:, g, :]
    if not np.isfinite(block).all():
        raise InternalStateError(f"non-finite logits for goal {g}")
    return _softmax(block / policy.temperature)


def rollout(policy: TabularPolicy, env: Environment, s: int, g: int, rng) -> Trajectory:
    """Sample one trajectory, stopping at the first achieving state or at horizon."""
    env.check_state(s)
    env.check_goal(g)
    states = [int(s)]
    actions: list = []
    cur = int(s)
    reached = bool(env.achieves[g, cur])
    for _ in range(env.horizon):
        if reached:
            break
        cdf = np.cumsum(action_probs(policy, cur, g))
        a = min(int(np.searchsorted(cdf, rng.random(), side="right")), env.num_actions - 1)
        cur = int(env.transition[cur, a])
        actions.append(a)
        states.append(cur)
        reached = bool(env.achieves[g, cur])
    return Trajectory(start=int(s), goal=int(g), actions=actions, states=states, reached=reached)


def rollout_batch_reached(
    policy: TabularPolicy, env: Environment, g: int, starts: np.ndarray, rng
) -> np.ndarray:
    """Vectorized success flags for many independent rollouts toward goal g."""
    starts = np.asarray(starts, dtype=np.int64)
    n = starts.shape[0]
    uniforms = rng.random((n, env.horizon))
    cdf = np.cumsum(action_prob_table(policy, g), axis=1)
    achieve = env.achieves[g]
    cur = starts.copy()
    done = achieve[cur].copy()
    for t in range(env.horizon):
        active = np.flatnonzero(~done)
        if active.size == 0:
            break
        rows = cdf[cur[active]]
        acts = (rows <= uniforms[active, t][:, None]).sum(axis=1)
        np.minimum(acts, env.num_actions - 1, out=acts)
        cur[active] = env.transition[cur[active], acts]
        done[active] = achieve[cur[active]]
    return done


def greedy_reached(
    policy: TabularPolicy, env: Environment, g: int, starts: np.ndarray
) -> np.ndarray:
    """Deterministic argmax-action rollouts; returns success flags."""
    starts = np.asarray(starts, dtype=np.int64)
    probs = action_prob_table(policy, g)
    next_map = env.transition[np.arange(env.num_states), probs.argmax(axis=1)]
    achieve = env.achieves[g]
    cur = starts.copy()
    done = achieve[cur].copy()
    for _ in range(env.horizon):
        if done.all():
            break
        cur = np.where(done, cur, next_map[cur])
        done |= achieve[cur]
    return done


def success_probs_vector(policy: TabularPolicy, env: Environment, g: int) -> np.ndarray:
    """Exact success probability from every state toward goal g, by backward DP.

    P_0(x) = r(g,x); P_{t+1}(x) = r(g,x) + (1-r(g,x)) * sum_a pi(a|x,g) P_t(T(x,a)).
    """
    r = env.achieves[g].astype(np.float64)
    probs = action_prob_table(policy, g)
    p = r.copy()
    for _ in range(env.horizon):
        p = r + (1.0 - r) * (probs * p[env.transition]).sum(axis=1)
    return p


def success_prob_exact(policy: TabularPolicy, env: Environment, g: int, s: int) -> float:
    """Exact probability of reaching goal g from state s within the horizon."""
    env.check_goal(g)
    env.check_state(s)
    return float(success_probs_vector(policy, env, g)[s])


def success_prob_mc(
    policy: TabularPolicy, env: Environment, g: int, s: int, n_samples: int, rng
) -> float:
    """Monte-Carlo estimate of the success probability (cross-check of the DP)."""
    env.check_goal(g)
    env.check_state(s)
    if n_samples < 1:
        raise ConfigurationError("n_samples must be >= 1")
    starts = np.full(n_samples, s, dtype=np.int64)
    return float(rollout_batch_reached(policy, env, g, starts, rng).mean())


def dataset_cross_entropy(policy: TabularPolicy, dataset: list) -> float:
    """Total negative log-likelihood of the dataset's actions under the policy."""
    total = 0.0
    for traj in dataset:
        for t, a in enumerate(traj.actions):
            p = action_probs(policy, traj.states[t], traj.goal)
            total -= float(np.log(p[a]))
    return total


def fit_on_trajectories(
    policy: TabularPolicy, dataset: list, cfg: FitConfig
) -> TabularPolicy:
    """Behavior-clone the policy on successful trajectories.

    Full-batch gradient descent on the mean cross-entropy of dataset actions
    (plus an optional l2 penalty on the logits). With l2 = 0 only the (state,
    goal) cells present in the dataset move.
    """
    for traj in dataset:
        if not traj.reached:
            raise ContractViolationError("fit dataset must contain only successful trajectories")
    if not dataset:
        return policy
    S, G, A = policy.logits.shape
    counts = np.zeros((S, G, A))
    for traj in dataset:
        for t, a in enumerate(traj.actions):
            counts[traj.states[t], traj.goal, a] += 1.0
    n_total = counts.sum()
    if n_total == 0:
        return policy
    cell_totals = counts.sum(axis=2, keepdims=True)
    tau = policy.temperature
    logits = policy.logits.copy()
    for _ in range(cfg.epochs):
        probs = _softmax(logits / tau)
        grad = (cell_totals * probs - counts) / (tau * n_total)
        if cfg.l2 > 0:
            grad = grad + cfg.l2 * logits
        logits -= cfg.learning_rate * grad
    return replace(policy, logits=logits)
